//! The black-box classifier contract.
//!
//! An oracle answers one question: for this image, what label do you
//! predict, and how confident are you in the caller's ground-truth label?
//! Every call costs one query, the attack's budget unit. A deterministic
//! built-in classifier ([`ToyOracle`]) serves desk-scale testing; external
//! classifiers attach over a JSON wire protocol ([`SubprocessOracle`],
//! [`HttpOracle`]).

mod http;
mod subprocess;
mod toy;
mod wire;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

pub use http::{HttpConfig, HttpOracle};
pub use subprocess::{SubprocessConfig, SubprocessOracle};
pub use toy::{ToyOracle, DEFAULT_TEMPERATURE};

use crate::compositor::Image;
use crate::error::{Error, Result};

pub type LabelId = usize;

/// One classification answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub predicted: LabelId,
    /// Probability the model assigns to the caller's ground-truth label.
    pub true_class_confidence: f64,
    /// Full score vector when the oracle exposes it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

impl Prediction {
    /// Builds a prediction from a full probability vector: `predicted` is the
    /// argmax (lowest index wins ties), confidence is `scores[ground_truth]`.
    pub fn from_scores(scores: Vec<f64>, ground_truth: LabelId) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::InvalidInput("empty score vector".into()));
        }
        if ground_truth >= scores.len() {
            return Err(Error::InvalidInput(format!(
                "ground-truth label {ground_truth} outside score vector of length {}",
                scores.len()
            )));
        }
        if !scores
            .iter()
            .all(|s| s.is_finite() && (0.0..=1.0).contains(s))
        {
            return Err(Error::InvalidInput(format!(
                "scores must be probabilities in [0,1], got {scores:?}"
            )));
        }
        let mut predicted = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[predicted] {
                predicted = i;
            }
        }
        Ok(Prediction {
            predicted,
            true_class_confidence: scores[ground_truth],
            scores: Some(scores),
        })
    }
}

/// Monotone query tally; never undercounts, also under concurrent use.
#[derive(Debug, Default)]
pub struct QueryCounter(AtomicU64);

impl QueryCounter {
    pub fn new() -> Self {
        QueryCounter(AtomicU64::new(0))
    }

    pub fn increment(&self) -> u64 {
        self.0.fetch_add(1, Ordering::Relaxed) + 1
    }

    pub fn total(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// Black-box classifier behind the query interface.
///
/// `classify` costs exactly one query. `ground_truth` selects which entry of
/// the (possibly hidden) score vector is reported as the confidence.
pub trait Oracle: Send + Sync {
    fn classify(&self, image: &Image, ground_truth: LabelId) -> Result<Prediction>;

    /// Total classification requests made through this oracle.
    fn query_count(&self) -> u64;

    /// Whether classify may be invoked from multiple threads at once.
    fn concurrent_safe(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn argmax_breaks_ties_at_lowest_index() {
        let p = Prediction::from_scores(vec![0.25, 0.5, 0.5], 0).unwrap();
        assert_eq!(p.predicted, 1);
        assert_eq!(p.true_class_confidence, 0.25);
    }

    #[test]
    fn from_scores_rejects_bad_inputs() {
        assert!(Prediction::from_scores(vec![], 0).is_err());
        assert!(Prediction::from_scores(vec![0.5, 0.5], 2).is_err());
        assert!(Prediction::from_scores(vec![0.5, 1.5], 0).is_err());
        assert!(Prediction::from_scores(vec![0.5, f64::NAN], 0).is_err());
    }

    #[test]
    fn counter_is_monotone() {
        let c = QueryCounter::new();
        assert_eq!(c.total(), 0);
        assert_eq!(c.increment(), 1);
        assert_eq!(c.increment(), 2);
        assert_eq!(c.total(), 2);
    }

    proptest! {
        #[test]
        fn from_scores_satisfies_the_argmax_contract(
            scores in prop::collection::vec(0.0f64..=1.0, 1..12),
            gt_raw in 0usize..12,
        ) {
            let gt = gt_raw % scores.len();
            let p = Prediction::from_scores(scores.clone(), gt).unwrap();
            prop_assert_eq!(p.true_class_confidence, scores[gt]);
            let best = p.predicted;
            for (i, &s) in scores.iter().enumerate() {
                prop_assert!(s <= scores[best]);
                if s == scores[best] {
                    prop_assert!(best <= i);
                }
            }
        }
    }
}
