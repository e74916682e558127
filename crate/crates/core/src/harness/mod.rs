//! Batch attack runner, metrics, ablation sweeps, and dataset tooling.

pub mod augment;
pub mod batch;
pub mod config;
pub mod dataset;
pub mod metrics;
pub mod report;
pub mod seed;
pub mod sweep;
pub mod toydata;

pub use augment::{augment_dataset, AugmentManifest, DEFAULT_AUGMENT_INTENSITY};
pub use batch::{run_attack_batch, METRICS_CSV, METRICS_JSON};
pub use config::{BoundsSpec, EotSettings, OracleSpec, PsoSettings, RunConfig};
pub use dataset::{load_dataset, mask_for, Dataset, DatasetEntry};
pub use metrics::{asr_from_counts, ImageRecord, Metrics, RecordStatus};
pub use report::{build_report, Report};
pub use seed::sub_seed;
pub use sweep::{
    default_edge_counts, default_intensities, sweep_color_grid, sweep_edges, sweep_intensity,
    SweepCell, SweepKind, SweepRow, SweepTable,
};
pub use toydata::{generate_toy_dataset, ToyDatasetSpec};
