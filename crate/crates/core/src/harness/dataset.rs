//! Labeled image directories.
//!
//! A dataset is a directory of PNGs plus a `labels.json` mapping filename
//! to label id. Masks live in a sibling directory under the same filenames;
//! a missing mask file means the whole image is attackable.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::compositor::Mask;
use crate::error::{Error, Result};

pub const LABELS_FILE: &str = "labels.json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub filename: String,
    pub label: usize,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    /// Sorted by filename for reproducible iteration order.
    pub entries: Vec<DatasetEntry>,
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let labels_path = dir.join(LABELS_FILE);
    let text = fs::read_to_string(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
    let map: BTreeMap<String, usize> = serde_json::from_str(&text)?;
    if map.is_empty() {
        return Err(Error::Config(format!("{} lists no images", labels_path.display())));
    }
    Ok(Dataset {
        root: dir.to_path_buf(),
        entries: map
            .into_iter()
            .map(|(filename, label)| DatasetEntry { filename, label })
            .collect(),
    })
}

/// Mask paired with one image: the grayscale PNG of the same name in
/// `masks_dir`, or all-true when the directory or file is absent.
pub fn mask_for(
    masks_dir: Option<&Path>,
    filename: &str,
    width: u32,
    height: u32,
) -> Result<Mask> {
    let Some(dir) = masks_dir else {
        return Mask::all_true(width, height);
    };
    let path = dir.join(filename);
    if !path.exists() {
        return Mask::all_true(width, height);
    }
    let mask = Mask::load_png(&path)?;
    if mask.width() != width || mask.height() != height {
        return Err(Error::InvalidInput(format!(
            "mask {} is {}x{} but the image is {width}x{height}",
            path.display(),
            mask.width(),
            mask.height()
        )));
    }
    Ok(mask)
}
