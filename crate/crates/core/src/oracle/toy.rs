//! Deterministic built-in classifier for closed-loop testing.
//!
//! Classifies by mean color: the score vector is a softmax over the negated
//! Euclidean distances from the image's mean color to a set of reference
//! colors, divided by a temperature. Color projection provably moves the
//! mean, so the attack loop can be exercised end to end without any DNN.

use crate::compositor::Image;
use crate::error::{Error, Result};
use crate::oracle::{LabelId, Oracle, Prediction, QueryCounter};

pub const DEFAULT_TEMPERATURE: f64 = 0.05;

/// Mean-color nearest-reference classifier with a softmax head.
#[derive(Debug)]
pub struct ToyOracle {
    references: Vec<[f64; 3]>,
    temperature: f64,
    counter: QueryCounter,
}

impl ToyOracle {
    pub fn new(references: Vec<[f64; 3]>, temperature: f64) -> Result<Self> {
        if references.is_empty() {
            return Err(Error::Config("toy oracle needs at least one reference color".into()));
        }
        if !references
            .iter()
            .flatten()
            .all(|c| c.is_finite() && (0.0..=1.0).contains(c))
        {
            return Err(Error::Config("toy reference color outside [0,1]".into()));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::Config(format!(
                "toy temperature must be positive, got {temperature}"
            )));
        }
        Ok(ToyOracle {
            references,
            temperature,
            counter: QueryCounter::new(),
        })
    }

    /// Four classes: red-ish, green-ish, blue-ish, dark.
    ///
    /// The references sit inside the cube rather than at its corners so a
    /// projection can overshoot them; with corner references no projection
    /// at intensity <= 0.8 covering half the image or less could ever move
    /// the mean across a class boundary, and partial-coverage attacks would
    /// be unlearnable in principle. The dark class keeps the landscape free
    /// of dead ends: darkening a colored image is a label flip, not a
    /// confidence plateau.
    pub fn with_default_references() -> Self {
        ToyOracle::new(
            vec![
                [0.8, 0.2, 0.2],
                [0.2, 0.8, 0.2],
                [0.2, 0.2, 0.8],
                [0.2, 0.2, 0.2],
            ],
            DEFAULT_TEMPERATURE,
        )
        .expect("defaults are valid")
    }

    pub fn references(&self) -> &[[f64; 3]] {
        &self.references
    }

    pub fn label_count(&self) -> usize {
        self.references.len()
    }

    /// Score vector for a given mean color; exposed so tests can recompute
    /// predictions without an image.
    pub fn scores_for_mean(&self, mean: [f64; 3]) -> Vec<f64> {
        let logits: Vec<f64> = self
            .references
            .iter()
            .map(|r| {
                let d = (0..3).map(|c| (mean[c] - r[c]).powi(2)).sum::<f64>().sqrt();
                -d / self.temperature
            })
            .collect();
        softmax(&logits)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

impl Oracle for ToyOracle {
    fn classify(&self, image: &Image, ground_truth: LabelId) -> Result<Prediction> {
        self.counter.increment();
        if ground_truth >= self.references.len() {
            return Err(Error::InvalidInput(format!(
                "label {ground_truth} outside toy label space of {}",
                self.references.len()
            )));
        }
        Prediction::from_scores(self.scores_for_mean(image.mean_color()), ground_truth)
    }

    fn query_count(&self) -> u64 {
        self.counter.total()
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::compositor::{composite, Mask};
    use crate::projection::{full_coverage, ProjectionParams};

    #[test]
    fn solid_red_predicts_red_with_confident_score() {
        let oracle = ToyOracle::with_default_references();
        let img = Image::solid(8, 8, [1.0, 0.0, 0.0]).unwrap();
        let p = oracle.classify(&img, 0).unwrap();
        assert_eq!(p.predicted, 0);
        assert!(p.true_class_confidence > 1.0 / 3.0);
    }

    #[test]
    fn equidistant_mean_ties_to_lowest_index() {
        // (0.5, 0.5, 0) is equidistant from red and green
        let oracle = ToyOracle::new(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], 0.05).unwrap();
        let img = Image::solid(4, 4, [0.5, 0.5, 0.0]).unwrap();
        let p = oracle.classify(&img, 1).unwrap();
        assert_eq!(p.predicted, 0);
    }

    #[test]
    fn scores_match_hand_computed_softmax() {
        let oracle = ToyOracle::new(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], 0.05).unwrap();
        let img = Image::solid(2, 2, [0.5, 0.0, 0.0]).unwrap();
        let p = oracle.classify(&img, 0).unwrap();
        // distances: 0.5 and sqrt(0.25 + 1) = 1.118...
        let l0: f64 = -0.5 / 0.05;
        let l1: f64 = -(1.25f64).sqrt() / 0.05;
        let e0 = (l0 - l0).exp();
        let e1 = (l1 - l0).exp();
        assert_eq!(p.predicted, 0);
        assert!((p.true_class_confidence - e0 / (e0 + e1)).abs() < 1e-12);
    }

    #[test]
    fn flat_temperature_limit_approaches_uniform_scores() {
        let oracle = ToyOracle::new(
            vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]],
            1e12,
        )
        .unwrap();
        let img = Image::solid(2, 2, [0.3, 0.8, 0.1]).unwrap();
        let p = oracle.classify(&img, 0).unwrap();
        for s in p.scores.unwrap() {
            assert!((s - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn counter_counts_every_classify_call() {
        let oracle = ToyOracle::with_default_references();
        let img = Image::solid(2, 2, [0.1, 0.1, 0.1]).unwrap();
        for _ in 0..5 {
            oracle.classify(&img, 0).unwrap();
        }
        assert_eq!(oracle.query_count(), 5);
    }

    #[test]
    fn argmax_is_invariant_under_joint_distance_and_temperature_rescaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let refs: Vec<[f64; 3]> = (0..4)
                .map(|_| std::array::from_fn(|_| rng.random_range(0.0..=1.0)))
                .collect();
            let mean: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..=1.0));
            let tau = rng.random_range(0.01..=1.0);
            let scale = rng.random_range(0.1..=10.0);
            let a = ToyOracle::new(refs.clone(), tau).unwrap();
            let b = ToyOracle::new(refs, tau * scale).unwrap();
            // scaling tau is the same as dividing all distances by the scale:
            // the argmax must not move
            let argmax = |scores: &[f64]| {
                let mut best = 0;
                for (i, &s) in scores.iter().enumerate() {
                    if s > scores[best] {
                        best = i;
                    }
                }
                best
            };
            assert_eq!(
                argmax(&a.scores_for_mean(mean)),
                argmax(&b.scores_for_mean(mean))
            );
        }
    }

    #[test]
    fn full_coverage_projection_at_max_intensity_forces_the_target_label() {
        let oracle = ToyOracle::with_default_references();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for target in 0..3usize {
            let img = Image::from_fn(6, 6, |_, _| std::array::from_fn(|_| rng.random_range(0.0..=1.0)))
                .unwrap();
            let params = ProjectionParams::new(
                oracle.references()[target],
                1.0,
                full_coverage(4).unwrap(),
            )
            .unwrap();
            let adv = composite(&img, &params, &Mask::all_true(6, 6).unwrap()).unwrap();
            let p = oracle.classify(&adv, 0).unwrap();
            assert_eq!(p.predicted, target);
        }
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        let oracle = ToyOracle::with_default_references();
        let img = Image::solid(2, 2, [0.5; 3]).unwrap();
        assert!(oracle.classify(&img, oracle.label_count()).is_err());
    }

    #[test]
    fn empty_reference_set_is_a_config_error() {
        assert!(matches!(ToyOracle::new(vec![], 0.05), Err(Error::Config(_))));
    }
}
