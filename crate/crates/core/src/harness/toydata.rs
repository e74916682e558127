//! Synthetic dataset generator for the built-in toy classifier.
//!
//! Each image is one class's reference color plus a per-image tint and
//! per-pixel noise, both small enough that the mean color stays nearest to
//! the own reference: every clean image is classified correctly, so the
//! whole dataset is eligible for attack.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compositor::Image;
use crate::error::{Error, Result};
use crate::oracle::ToyOracle;

use super::dataset::{load_dataset, Dataset, LABELS_FILE};
use super::seed::sub_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyDatasetSpec {
    pub count: usize,
    pub width: u32,
    pub height: u32,
    /// Class reference colors; labels are indices into this list.
    pub references: Vec<[f64; 3]>,
    /// Maximum per-image uniform tint, per channel.
    pub tint: f64,
    /// Maximum per-pixel uniform noise, per channel.
    pub noise: f64,
    pub seed: u64,
}

impl Default for ToyDatasetSpec {
    fn default() -> Self {
        ToyDatasetSpec {
            count: 200,
            width: 32,
            height: 32,
            references: ToyOracle::with_default_references().references().to_vec(),
            tint: 0.1,
            noise: 0.05,
            seed: 0,
        }
    }
}

/// Writes `count` PNGs plus `labels.json` and returns the loaded dataset.
pub fn generate_toy_dataset(dir: &Path, spec: &ToyDatasetSpec) -> Result<Dataset> {
    if spec.count == 0 {
        return Err(Error::InvalidInput("dataset count must be >= 1".into()));
    }
    if spec.references.is_empty() {
        return Err(Error::Config("toy dataset needs reference colors".into()));
    }
    if !(spec.tint >= 0.0 && spec.noise >= 0.0) {
        return Err(Error::InvalidInput("tint and noise must be >= 0".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut labels: BTreeMap<String, usize> = BTreeMap::new();
    for i in 0..spec.count {
        let filename = format!("toy_{i:04}.png");
        let label = i % spec.references.len();
        let base = spec.references[label];
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(spec.seed, &filename));
        let tint: [f64; 3] = std::array::from_fn(|_| {
            if spec.tint == 0.0 {
                0.0
            } else {
                rng.random_range(-spec.tint..=spec.tint)
            }
        });
        let image = Image::from_fn(spec.width, spec.height, |_, _| {
            std::array::from_fn(|c| {
                let noise = if spec.noise == 0.0 {
                    0.0
                } else {
                    rng.random_range(-spec.noise..=spec.noise)
                };
                (base[c] + tint[c] + noise).clamp(0.0, 1.0)
            })
        })?;
        image.save_png(&dir.join(&filename))?;
        labels.insert(filename, label);
    }

    let labels_path = dir.join(LABELS_FILE);
    let mut text = serde_json::to_string_pretty(&labels)?;
    text.push('\n');
    fs::write(&labels_path, text).map_err(|e| Error::io(&labels_path, e))?;
    load_dataset(dir)
}

#[cfg(test)]
mod tests {
    use crate::oracle::Oracle;

    use super::*;

    #[test]
    fn generated_images_are_all_classified_correctly_when_clean() {
        let tmp = tempfile::tempdir().unwrap();
        let spec = ToyDatasetSpec {
            count: 12,
            seed: 77,
            ..ToyDatasetSpec::default()
        };
        let dataset = generate_toy_dataset(tmp.path(), &spec).unwrap();
        assert_eq!(dataset.entries.len(), 12);
        let oracle = ToyOracle::with_default_references();
        for entry in &dataset.entries {
            let image = Image::load_png(&dataset.root.join(&entry.filename)).unwrap();
            let p = oracle.classify(&image, entry.label).unwrap();
            assert_eq!(p.predicted, entry.label, "{}", entry.filename);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let tmp = tempfile::tempdir().unwrap();
        let spec = ToyDatasetSpec {
            count: 3,
            seed: 4,
            ..ToyDatasetSpec::default()
        };
        generate_toy_dataset(&tmp.path().join("a"), &spec).unwrap();
        generate_toy_dataset(&tmp.path().join("b"), &spec).unwrap();
        for name in ["toy_0000.png", "toy_0001.png", "labels.json"] {
            assert_eq!(
                fs::read(tmp.path().join("a").join(name)).unwrap(),
                fs::read(tmp.path().join("b").join(name)).unwrap(),
                "{name} differs"
            );
        }
    }
}
