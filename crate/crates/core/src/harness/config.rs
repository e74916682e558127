//! Run configuration: TOML file, defaults, and oracle construction.
//!
//! Precedence is defaults < config file < command-line flags; the CLI
//! applies flag overrides onto the parsed struct before validation.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::eot::EotConfig;
use crate::error::{Error, Result};
use crate::optimizer::PsoConfig;
use crate::oracle::{
    HttpConfig, HttpOracle, Oracle, SubprocessConfig, SubprocessOracle, ToyOracle,
};
use crate::projection::{Bounds, DEFAULT_INTENSITY_RANGE, DEFAULT_VERTEX_COUNT};

use super::dataset::LABELS_FILE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory of PNGs plus `labels.json`.
    pub dataset: PathBuf,
    /// Optional directory of grayscale mask PNGs under the same filenames.
    pub masks: Option<PathBuf>,
    /// Artifact directory (created if missing).
    pub output: PathBuf,
    pub seed: u64,
    /// Attack images concurrently when the oracle allows it. Serial by
    /// default for exact query-trace comparisons.
    pub parallel: bool,
    pub oracle: OracleSpec,
    pub bounds: BoundsSpec,
    pub pso: PsoSettings,
    pub eot: EotSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: PathBuf::new(),
            masks: None,
            output: PathBuf::from("out"),
            seed: 0,
            parallel: false,
            oracle: OracleSpec::default(),
            bounds: BoundsSpec::default(),
            pso: PsoSettings::default(),
            eot: EotSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks referenced paths and builds every sub-config once.
    pub fn validate(&self) -> Result<()> {
        if self.dataset.as_os_str().is_empty() {
            return Err(Error::Config("dataset directory not set".into()));
        }
        if !self.dataset.is_dir() {
            return Err(Error::Config(format!(
                "dataset directory {} does not exist",
                self.dataset.display()
            )));
        }
        let labels = self.dataset.join(LABELS_FILE);
        if !labels.is_file() {
            return Err(Error::Config(format!("{} is missing", labels.display())));
        }
        if let Some(masks) = &self.masks {
            if !masks.is_dir() {
                return Err(Error::Config(format!(
                    "mask directory {} does not exist",
                    masks.display()
                )));
            }
        }
        self.bounds.build()?;
        self.pso.to_config(self.seed).validate()?;
        self.eot.resolve(64, 64).validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    /// Built-in mean-color classifier.
    Toy {
        #[serde(default)]
        references: Option<Vec<[f64; 3]>>,
        #[serde(default)]
        temperature: Option<f64>,
    },
    /// Child process speaking newline-delimited JSON on stdin/stdout.
    Subprocess {
        command: Vec<String>,
        #[serde(default)]
        timeout_ms: Option<u64>,
        #[serde(default)]
        retries: Option<u32>,
    },
    /// HTTP server exposing POST /classify.
    Http {
        url: String,
        #[serde(default)]
        timeout_ms: Option<u64>,
        #[serde(default)]
        retries: Option<u32>,
        #[serde(default)]
        max_in_flight: Option<usize>,
    },
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec::Toy {
            references: None,
            temperature: None,
        }
    }
}

impl OracleSpec {
    pub fn build(&self) -> Result<Box<dyn Oracle>> {
        match self {
            OracleSpec::Toy {
                references,
                temperature,
            } => {
                let refs = references.clone().unwrap_or_else(|| {
                    ToyOracle::with_default_references().references().to_vec()
                });
                let tau = temperature.unwrap_or(crate::oracle::DEFAULT_TEMPERATURE);
                Ok(Box::new(ToyOracle::new(refs, tau)?))
            }
            OracleSpec::Subprocess {
                command,
                timeout_ms,
                retries,
            } => {
                let mut config = SubprocessConfig::new(command.clone());
                if let Some(ms) = timeout_ms {
                    config.timeout = Duration::from_millis(*ms);
                }
                if let Some(r) = retries {
                    config.retries = *r;
                }
                Ok(Box::new(SubprocessOracle::spawn(config)?))
            }
            OracleSpec::Http {
                url,
                timeout_ms,
                retries,
                max_in_flight,
            } => {
                let mut config = HttpConfig::new(url.clone());
                if let Some(ms) = timeout_ms {
                    config.timeout = Duration::from_millis(*ms);
                }
                if let Some(r) = retries {
                    config.retries = *r;
                }
                if let Some(m) = max_in_flight {
                    config.max_in_flight = *m;
                }
                Ok(Box::new(HttpOracle::new(config)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSpec {
    pub vertex_count: usize,
    pub intensity: [f64; 2],
    pub color_min: [f64; 3],
    pub color_max: [f64; 3],
}

impl Default for BoundsSpec {
    fn default() -> Self {
        BoundsSpec {
            vertex_count: DEFAULT_VERTEX_COUNT,
            intensity: [DEFAULT_INTENSITY_RANGE.0, DEFAULT_INTENSITY_RANGE.1],
            color_min: [0.0; 3],
            color_max: [1.0; 3],
        }
    }
}

impl BoundsSpec {
    pub fn build(&self) -> Result<Bounds> {
        Bounds::unit(self.vertex_count)?
            .with_intensity(self.intensity[0], self.intensity[1])?
            .with_color(self.color_min, self.color_max)
    }
}

/// PSO hyperparameters without the seed; per-image seeds are derived from
/// the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoSettings {
    pub swarm_size: usize,
    pub max_steps: usize,
    pub omega: f64,
    pub c1: f64,
    pub c2: f64,
    pub velocity_cap_fraction: f64,
    pub per_dimension_draws: bool,
}

impl Default for PsoSettings {
    fn default() -> Self {
        let d = PsoConfig::default();
        PsoSettings {
            swarm_size: d.swarm_size,
            max_steps: d.max_steps,
            omega: d.omega,
            c1: d.c1,
            c2: d.c2,
            velocity_cap_fraction: d.velocity_cap_fraction,
            per_dimension_draws: d.per_dimension_draws,
        }
    }
}

impl PsoSettings {
    pub fn to_config(&self, seed: u64) -> PsoConfig {
        PsoConfig {
            swarm_size: self.swarm_size,
            max_steps: self.max_steps,
            omega: self.omega,
            c1: self.c1,
            c2: self.c2,
            velocity_cap_fraction: self.velocity_cap_fraction,
            per_dimension_draws: self.per_dimension_draws,
            seed,
        }
    }
}

/// Transformation settings; disabled means pure-digital mode (identity
/// transform, one query per evaluation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EotSettings {
    pub enabled: bool,
    pub brightness: [f64; 2],
    /// Offset limit as a fraction of each image dimension, rounded down.
    pub offset_fraction: f64,
    /// Explicit pixel limits; overrides `offset_fraction` when set.
    pub offset_px: Option<[u32; 2]>,
    pub color_jitter: f64,
    pub samples_per_eval: u32,
}

impl Default for EotSettings {
    fn default() -> Self {
        EotSettings {
            enabled: false,
            brightness: [0.9, 1.1],
            offset_fraction: 0.02,
            offset_px: None,
            color_jitter: 0.04,
            samples_per_eval: 1,
        }
    }
}

impl EotSettings {
    pub fn resolve(&self, width: u32, height: u32) -> EotConfig {
        if !self.enabled {
            return EotConfig::identity();
        }
        let offset_range = match self.offset_px {
            Some([x, y]) => (x, y),
            None => (
                (f64::from(width) * self.offset_fraction).floor() as u32,
                (f64::from(height) * self.offset_fraction).floor() as u32,
            ),
        };
        EotConfig {
            brightness_range: (self.brightness[0], self.brightness[1]),
            offset_range,
            color_jitter: self.color_jitter,
            samples_per_eval: self.samples_per_eval,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_cleanly() {
        let spec = BoundsSpec::default();
        let bounds = spec.build().unwrap();
        assert_eq!(bounds.dimension(), 12);
        assert_eq!(bounds.lower()[3], 0.05);
        assert_eq!(bounds.upper()[3], 0.8);
        assert!(matches!(OracleSpec::default(), OracleSpec::Toy { .. }));
    }

    #[test]
    fn toml_round_trip_with_overrides() {
        let text = r#"
            dataset = "data/toy"
            output = "out/run1"
            seed = 11

            [oracle]
            kind = "toy"
            temperature = 0.1

            [bounds]
            vertex_count = 6
            intensity = [0.7, 0.7]

            [pso]
            swarm_size = 10

            [eot]
            enabled = true
            samples_per_eval = 4
        "#;
        let config: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(config.seed, 11);
        assert_eq!(config.bounds.vertex_count, 6);
        assert_eq!(config.bounds.intensity, [0.7, 0.7]);
        assert_eq!(config.pso.swarm_size, 10);
        assert_eq!(config.pso.max_steps, 200);
        let eot = config.eot.resolve(100, 50);
        assert_eq!(eot.samples_per_eval, 4);
        assert_eq!(eot.offset_range, (2, 1));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = toml::from_str::<RunConfig>("dataset = \"d\"\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn disabled_eot_resolves_to_identity() {
        let eot = EotSettings::default().resolve(640, 480);
        assert!(eot.is_identity());
        assert_eq!(eot.samples_per_eval, 1);
    }

    #[test]
    fn validate_requires_existing_dataset() {
        let config = RunConfig {
            dataset: PathBuf::from("/nonexistent/dataset"),
            ..RunConfig::default()
        };
        assert!(matches!(config.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn oracle_specs_build() {
        let toy = OracleSpec::Toy {
            references: Some(vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
            temperature: Some(0.2),
        };
        assert!(toy.build().is_ok());
        let bad = OracleSpec::Toy {
            references: Some(vec![]),
            temperature: None,
        };
        assert!(bad.build().is_err());
    }
}
