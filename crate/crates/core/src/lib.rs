//! Black-box adversarial color-projection attack toolkit.
//!
//! Finds a color, polygonal region, and intensity which, composited onto an
//! input image, make a black-box classifier change its prediction. The
//! search is a particle swarm over the flattened parameter vector, scored
//! by the classifier's confidence in the true label, optionally averaged
//! over randomized transformations to survive the digital-to-physical gap.
//!
//! Module map:
//! - [`projection`] — parameter vectors, bounds, sampling, presets
//! - [`compositor`] — rasters, polygon fill, the linear blend, PNG I/O
//! - [`eot`] — transformation distribution and the fitness estimator
//! - [`optimizer`] — particle swarm and the attack loop
//! - [`oracle`] — classifier contract, built-in toy classifier, adapters
//! - [`harness`] — batch runs, metrics, ablation sweeps, dataset tooling

pub mod compositor;
pub mod eot;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod oracle;
pub mod projection;

pub use compositor::{composite, rasterize, region_fraction, Image, Mask};
pub use eot::{apply_transform, expected_confidence, sample_transform, EotConfig, Transform};
pub use error::{Error, Result};
pub use optimizer::{attack, AttackError, AttackOutcome, PsoConfig, Swarm};
pub use oracle::{
    HttpConfig, HttpOracle, LabelId, Oracle, Prediction, QueryCounter, SubprocessConfig,
    SubprocessOracle, ToyOracle,
};
pub use projection::{full_coverage, sample_uniform, Bounds, ProjectionParams};
