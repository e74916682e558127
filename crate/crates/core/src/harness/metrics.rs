//! Per-image attack records and aggregate metrics.
//!
//! The attack success rate is taken over eligible images only (those the
//! oracle classified correctly when clean): with F(y_i) = 1 when the
//! post-attack label still equals the ground truth and 0 otherwise,
//! ASR = 1 - (1/N) * sum F(y_i), computed canonically as (N - sum F) / N.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::projection::ProjectionParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    /// Attack flipped the predicted label.
    Success,
    /// Budget exhausted without a flip.
    Failure,
    /// Clean image was already misclassified; not counted in N.
    SkippedCleanMisclassified,
    /// Oracle or I/O failure; not counted in N.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image: String,
    pub label: usize,
    pub status: RecordStatus,
    /// Every oracle query this image consumed, including the clean check.
    pub queries: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_label: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ProjectionParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversarial_png: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ImageRecord {
    pub fn eligible(&self) -> bool {
        matches!(self.status, RecordStatus::Success | RecordStatus::Failure)
    }
}

/// Canonical ASR: `(N - still_correct) / N`, algebraically
/// `1 - (1/N) * sum F(y_i)`.
pub fn asr_from_counts(n_eligible: usize, still_correct: usize) -> f64 {
    debug_assert!(still_correct <= n_eligible);
    (n_eligible - still_correct) as f64 / n_eligible as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub seed: u64,
    /// Fusion rule used by the compositor, recorded for auditability.
    pub blend: String,
    pub n_images: usize,
    pub n_eligible: usize,
    pub n_skipped: usize,
    pub n_errors: usize,
    pub successes: usize,
    pub asr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asr_undefined_reason: Option<String>,
    pub mean_queries: Option<f64>,
    pub total_queries: u64,
    pub records: Vec<ImageRecord>,
}

/// The compositor's fusion rule; see [`crate::compositor::composite`].
pub const BLEND_NAME: &str = "linear: (1-I)*X + I*C on the region";

impl Metrics {
    pub fn from_records(seed: u64, records: Vec<ImageRecord>) -> Metrics {
        let n_eligible = records.iter().filter(|r| r.eligible()).count();
        let successes = records
            .iter()
            .filter(|r| r.status == RecordStatus::Success)
            .count();
        let still_correct = n_eligible - successes;
        let (asr, reason) = if n_eligible > 0 {
            (Some(asr_from_counts(n_eligible, still_correct)), None)
        } else {
            (
                None,
                Some("no eligible images: every clean image was misclassified or errored".into()),
            )
        };
        let eligible_queries: u64 = records
            .iter()
            .filter(|r| r.eligible())
            .map(|r| r.queries)
            .sum();
        Metrics {
            seed,
            blend: BLEND_NAME.into(),
            n_images: records.len(),
            n_skipped: records
                .iter()
                .filter(|r| r.status == RecordStatus::SkippedCleanMisclassified)
                .count(),
            n_errors: records
                .iter()
                .filter(|r| r.status == RecordStatus::Error)
                .count(),
            n_eligible,
            successes,
            asr,
            asr_undefined_reason: reason,
            mean_queries: (n_eligible > 0).then(|| eligible_queries as f64 / n_eligible as f64),
            total_queries: records.iter().map(|r| r.queries).sum(),
            records,
        }
    }

    /// Re-derives the ASR from the per-image predicted labels. Must equal
    /// the stored aggregate exactly.
    pub fn recompute_asr(&self) -> Option<f64> {
        let eligible: Vec<&ImageRecord> = self.records.iter().filter(|r| r.eligible()).collect();
        if eligible.is_empty() {
            return None;
        }
        let still_correct = eligible
            .iter()
            .filter(|r| r.predicted_label == Some(r.label))
            .count();
        Some(asr_from_counts(eligible.len(), still_correct))
    }

    /// One CSV row per image.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "image",
            "label",
            "status",
            "predicted_label",
            "queries",
            "steps",
            "final_confidence",
        ])?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.records {
            let status = serde_json::to_value(r.status)
                .expect("status serializes")
                .as_str()
                .expect("status is a string")
                .to_string();
            w.write_record([
                r.image.clone(),
                r.label.to_string(),
                status,
                opt(r.predicted_label.map(|v| v.to_string())),
                r.queries.to_string(),
                opt(r.steps.map(|v| v.to_string())),
                opt(r.final_confidence.map(|v| v.to_string())),
            ])?;
        }
        w.flush().map_err(|e| crate::error::Error::io("<csv>", e))?;
        Ok(())
    }
}
