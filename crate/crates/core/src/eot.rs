//! Expectation over transformation.
//!
//! To survive the digital-to-physical gap, a candidate projection is scored
//! not on the composite alone but on randomized variants of it: brightness
//! gain, pixel offset, and per-channel color jitter, each drawn uniformly
//! from configured ranges. The fitness is the mean true-class confidence
//! over `samples_per_eval` such variants, consuming exactly that many
//! oracle queries.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::compositor::{composite, Image, Mask};
use crate::error::Result;
use crate::oracle::{LabelId, Oracle, Prediction};
use crate::projection::ProjectionParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EotConfig {
    /// Multiplicative brightness gain range.
    pub brightness_range: (f64, f64),
    /// Maximum absolute translation in pixels, per axis.
    pub offset_range: (u32, u32),
    /// Maximum absolute per-channel additive perturbation.
    pub color_jitter: f64,
    /// Number of transformed samples (and oracle queries) per evaluation.
    pub samples_per_eval: u32,
}

impl EotConfig {
    /// Digital mode: no transformation, one query per evaluation.
    pub fn identity() -> Self {
        EotConfig {
            brightness_range: (1.0, 1.0),
            offset_range: (0, 0),
            color_jitter: 0.0,
            samples_per_eval: 1,
        }
    }

    /// Physical-transfer defaults for a given image size: gain in
    /// [0.9, 1.1], offsets up to 2% of each dimension (rounded down),
    /// jitter 0.04 (about 10/255).
    pub fn for_dimensions(width: u32, height: u32) -> Self {
        EotConfig {
            brightness_range: (0.9, 1.1),
            offset_range: (width / 50, height / 50),
            color_jitter: 0.04,
            samples_per_eval: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.brightness_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return Err(crate::error::Error::InvalidInput(format!(
                "brightness range [{lo}, {hi}] must satisfy 0 < lo <= hi"
            )));
        }
        if !(self.color_jitter.is_finite() && self.color_jitter >= 0.0) {
            return Err(crate::error::Error::InvalidInput(format!(
                "color jitter {} must be >= 0",
                self.color_jitter
            )));
        }
        if self.samples_per_eval == 0 {
            return Err(crate::error::Error::InvalidInput(
                "samples_per_eval must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.brightness_range == (1.0, 1.0)
            && self.offset_range == (0, 0)
            && self.color_jitter == 0.0
    }
}

impl Default for EotConfig {
    fn default() -> Self {
        EotConfig::identity()
    }
}

/// One sampled transformation: `out(x, y) = clip01(gain * in(x - dx, y - dy) + jitter)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub gain: f64,
    pub offset: (i64, i64),
    pub jitter: [f64; 3],
}

impl Transform {
    pub fn identity() -> Self {
        Transform {
            gain: 1.0,
            offset: (0, 0),
            jitter: [0.0; 3],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.gain == 1.0 && self.offset == (0, 0) && self.jitter == [0.0; 3]
    }
}

/// Draws gain, offsets, and jitter independently and uniformly.
/// Degenerate ranges yield their single admissible value.
pub fn sample_transform<R: Rng>(config: &EotConfig, rng: &mut R) -> Transform {
    let (lo, hi) = config.brightness_range;
    let gain = if lo == hi { lo } else { rng.random_range(lo..=hi) };
    let (ox, oy) = (config.offset_range.0 as i64, config.offset_range.1 as i64);
    let dx = if ox == 0 { 0 } else { rng.random_range(-ox..=ox) };
    let dy = if oy == 0 { 0 } else { rng.random_range(-oy..=oy) };
    let j = config.color_jitter;
    let jitter = if j == 0.0 {
        [0.0; 3]
    } else {
        std::array::from_fn(|_| rng.random_range(-j..=j))
    };
    Transform {
        gain,
        offset: (dx, dy),
        jitter,
    }
}

/// Applies a transform; out-of-range source coordinates replicate the edge
/// pixel, and every output channel is clipped to [0, 1].
pub fn apply_transform(image: &Image, t: &Transform) -> Image {
    let (w, h) = (image.width(), image.height());
    let img = Image::from_fn(w, h, |x, y| {
        let sx = (x as i64 - t.offset.0).clamp(0, w as i64 - 1) as u32;
        let sy = (y as i64 - t.offset.1).clamp(0, h as i64 - 1) as u32;
        let p = image.pixel(sx, sy);
        std::array::from_fn(|c| (t.gain * p[c] + t.jitter[c]).clamp(0.0, 1.0))
    });
    img.expect("transform preserves dimensions and clips channels")
}

/// Result of scoring one candidate under the transformation distribution.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub mean_confidence: f64,
    pub predictions: Vec<Prediction>,
}

impl Evaluation {
    /// True when every sampled transform fooled the oracle.
    pub fn all_misclassified(&self, ground_truth: LabelId) -> bool {
        self.predictions.iter().all(|p| p.predicted != ground_truth)
    }
}

/// Composites once, then queries the oracle on `samples_per_eval`
/// independently transformed copies. Exactly `samples_per_eval` queries.
pub fn evaluate<R: Rng>(
    image: &Image,
    params: &ProjectionParams,
    mask: &Mask,
    ground_truth: LabelId,
    oracle: &dyn Oracle,
    config: &EotConfig,
    rng: &mut R,
) -> Result<Evaluation> {
    config.validate()?;
    let adv = composite(image, params, mask)?;
    let mut predictions = Vec::with_capacity(config.samples_per_eval as usize);
    let mut sum = 0.0;
    for _ in 0..config.samples_per_eval {
        let t = sample_transform(config, rng);
        let prediction = if t.is_identity() {
            oracle.classify(&adv, ground_truth)?
        } else {
            oracle.classify(&apply_transform(&adv, &t), ground_truth)?
        };
        sum += prediction.true_class_confidence;
        predictions.push(prediction);
    }
    Ok(Evaluation {
        mean_confidence: sum / config.samples_per_eval as f64,
        predictions,
    })
}

/// Monte-Carlo estimate of the expected true-class confidence of the
/// composite under the transformation distribution.
pub fn expected_confidence<R: Rng>(
    image: &Image,
    params: &ProjectionParams,
    mask: &Mask,
    ground_truth: LabelId,
    oracle: &dyn Oracle,
    config: &EotConfig,
    rng: &mut R,
) -> Result<f64> {
    Ok(evaluate(image, params, mask, ground_truth, oracle, config, rng)?.mean_confidence)
}
