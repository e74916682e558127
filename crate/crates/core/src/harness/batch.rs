//! Batch attack runner.
//!
//! One clean-verification query per image (performed inside the attack
//! loop); images the oracle misclassifies clean are skipped and excluded
//! from N. Per-image failures become error records with a warning, and the
//! batch continues. Artifacts written under the output directory:
//!
//! ```text
//! adv/<stem>_adv.png      composite of the final parameters
//! records/<stem>.json     per-image record
//! metrics.json            aggregate plus all records
//! metrics.csv             one row per image
//! ```
//!
//! Each image derives its own seed from the run seed and its filename, so
//! parallel execution cannot change any result.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::compositor::{composite, Image};
use crate::error::{Error, Result};
use crate::optimizer::{attack, AttackError};
use crate::oracle::Oracle;
use crate::projection::Bounds;

use super::config::RunConfig;
use super::dataset::{load_dataset, mask_for, DatasetEntry};
use super::metrics::{ImageRecord, Metrics, RecordStatus};
use super::seed::sub_seed;

pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_CSV: &str = "metrics.csv";

/// Runs the configured attack over the whole dataset and writes artifacts.
pub fn run_attack_batch(config: &RunConfig) -> Result<Metrics> {
    config.validate()?;
    let dataset = load_dataset(&config.dataset)?;
    let oracle = config.oracle.build()?;
    let bounds = config.bounds.build()?;

    fs::create_dir_all(config.output.join("adv"))
        .map_err(|e| Error::io(config.output.join("adv"), e))?;
    fs::create_dir_all(config.output.join("records"))
        .map_err(|e| Error::io(config.output.join("records"), e))?;

    let process = |entry: &DatasetEntry| process_entry(config, entry, oracle.as_ref(), &bounds);
    let records: Vec<ImageRecord> = if config.parallel && oracle.concurrent_safe() {
        dataset.entries.par_iter().map(process).collect()
    } else {
        if config.parallel && !oracle.concurrent_safe() {
            log::warn!("oracle is serial-only; ignoring parallel=true");
        }
        dataset.entries.iter().map(process).collect()
    };

    let metrics = Metrics::from_records(config.seed, records);
    write_metrics(&metrics, &config.output)?;
    Ok(metrics)
}

pub fn write_metrics(metrics: &Metrics, output: &Path) -> Result<()> {
    let json_path = output.join(METRICS_JSON);
    let mut text = serde_json::to_string_pretty(metrics)?;
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;

    let csv_path = output.join(METRICS_CSV);
    let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    metrics.write_csv(file)?;
    Ok(())
}

fn stem_of(filename: &str) -> String {
    Path::new(filename)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| filename.to_string())
}

fn error_record(entry: &DatasetEntry, queries: u64, detail: String) -> ImageRecord {
    log::warn!("{}: excluded from N: {detail}", entry.filename);
    ImageRecord {
        image: entry.filename.clone(),
        label: entry.label,
        status: RecordStatus::Error,
        queries,
        predicted_label: None,
        steps: None,
        final_confidence: None,
        params: None,
        adversarial_png: None,
        detail: Some(detail),
    }
}

fn process_entry(
    config: &RunConfig,
    entry: &DatasetEntry,
    oracle: &dyn Oracle,
    bounds: &Bounds,
) -> ImageRecord {
    let record = attack_one(config, entry, oracle, bounds);
    let record_path = config
        .output
        .join("records")
        .join(format!("{}.json", stem_of(&entry.filename)));
    if let Err(e) = serde_json::to_string_pretty(&record)
        .map_err(Error::from)
        .and_then(|mut text| {
            text.push('\n');
            fs::write(&record_path, text).map_err(|e| Error::io(&record_path, e))
        })
    {
        log::warn!("could not write {}: {e}", record_path.display());
    }
    record
}

fn attack_one(
    config: &RunConfig,
    entry: &DatasetEntry,
    oracle: &dyn Oracle,
    bounds: &Bounds,
) -> ImageRecord {
    let path = config.dataset.join(&entry.filename);
    let image = match Image::load_png(&path) {
        Ok(image) => image,
        Err(e) => return error_record(entry, 0, format!("unreadable image: {e}")),
    };
    let mask = match mask_for(
        config.masks.as_deref(),
        &entry.filename,
        image.width(),
        image.height(),
    ) {
        Ok(mask) => mask,
        Err(e) => return error_record(entry, 0, format!("unusable mask: {e}")),
    };

    let pso = config.pso.to_config(sub_seed(config.seed, &entry.filename));
    let eot = config.eot.resolve(image.width(), image.height());

    match attack(&image, &mask, entry.label, oracle, bounds, &pso, &eot) {
        Ok(outcome) => {
            let stem = stem_of(&entry.filename);
            let adv_rel = format!("adv/{stem}_adv.png");
            if let Some(params) = &outcome.params {
                let saved = composite(&image, params, &mask)
                    .and_then(|adv| adv.save_png(&config.output.join(&adv_rel)));
                if let Err(e) = saved {
                    return error_record(entry, outcome.queries, format!("saving sample: {e}"));
                }
            }
            ImageRecord {
                image: entry.filename.clone(),
                label: entry.label,
                status: if outcome.success {
                    RecordStatus::Success
                } else {
                    RecordStatus::Failure
                },
                queries: outcome.queries,
                predicted_label: Some(outcome.predicted_label),
                steps: Some(outcome.steps),
                final_confidence: Some(outcome.final_confidence),
                adversarial_png: outcome.params.is_some().then_some(adv_rel),
                params: outcome.params,
                detail: None,
            }
        }
        Err(AttackError::CleanMisclassified { predicted, queries }) => {
            log::warn!(
                "{}: clean image predicted as {predicted}, skipping",
                entry.filename
            );
            ImageRecord {
                image: entry.filename.clone(),
                label: entry.label,
                status: RecordStatus::SkippedCleanMisclassified,
                queries,
                predicted_label: Some(predicted),
                steps: None,
                final_confidence: None,
                params: None,
                adversarial_png: None,
                detail: Some(format!("clean image predicted as {predicted}")),
            }
        }
        Err(AttackError::Oracle { queries, source }) => {
            error_record(entry, queries, format!("oracle failure: {source}"))
        }
    }
}
