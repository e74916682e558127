//! Dataset augmentation: 27 color projections per clean sample.
//!
//! For every readable PNG in the input directory, writes one composite per
//! grid color ({0, 127, 255}^3 in 8-bit terms) at the given intensity with a
//! full-coverage region, so the output count is exactly 27x the readable
//! input count. Intensity 0 is a documented degenerate mode: every output is
//! byte-identical to its source.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compositor::{composite, Image, Mask};
use crate::error::{Error, Result};
use crate::projection::{color_grid, color_to_u8, full_coverage, ProjectionParams};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_AUGMENT_INTENSITY: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentEntry {
    pub source: String,
    pub output: String,
    pub color_index: usize,
    pub color_rgb8: [u8; 3],
    pub color: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentManifest {
    pub intensity: f64,
    pub inputs: usize,
    pub outputs: usize,
    pub skipped: Vec<String>,
    pub entries: Vec<AugmentEntry>,
}

/// Applies the 27-color grid to every readable input and writes a manifest.
pub fn augment_dataset(input_dir: &Path, output_dir: &Path, intensity: f64) -> Result<AugmentManifest> {
    if !(intensity.is_finite() && (0.0..=1.0).contains(&intensity)) {
        return Err(Error::InvalidInput(format!(
            "intensity {intensity} outside [0,1]"
        )));
    }
    if !input_dir.is_dir() {
        return Err(Error::Config(format!(
            "input directory {} does not exist",
            input_dir.display()
        )));
    }
    fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;

    let mut names: Vec<String> = fs::read_dir(input_dir)
        .map_err(|e| Error::io(input_dir, e))?
        .filter_map(|entry| {
            let entry = entry.ok()?;
            let name = entry.file_name().to_string_lossy().into_owned();
            (entry.path().is_file() && name.to_ascii_lowercase().ends_with(".png"))
                .then_some(name)
        })
        .collect();
    names.sort();

    let grid = color_grid();
    let vertices = full_coverage(4)?;
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    let mut inputs = 0usize;
    for name in names {
        let image = match Image::load_png(&input_dir.join(&name)) {
            Ok(image) => image,
            Err(e) => {
                log::warn!("skipping unreadable {name}: {e}");
                skipped.push(name);
                continue;
            }
        };
        inputs += 1;
        let mask = Mask::all_true(image.width(), image.height())?;
        let stem = Path::new(&name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| name.clone());
        for (idx, &color) in grid.iter().enumerate() {
            let params = ProjectionParams::new(color, intensity, vertices.clone())?;
            let out = composite(&image, &params, &mask)?;
            let out_name = format!("{stem}_cp{idx:02}.png");
            out.save_png(&output_dir.join(&out_name))?;
            entries.push(AugmentEntry {
                source: name.clone(),
                output: out_name,
                color_index: idx,
                color_rgb8: color_to_u8(color),
                color,
            });
        }
    }

    let manifest = AugmentManifest {
        intensity,
        inputs,
        outputs: entries.len(),
        skipped,
        entries,
    };
    let manifest_path = output_dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}
