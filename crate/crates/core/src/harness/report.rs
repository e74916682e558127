//! Aggregates batch metrics and sweep tables into one summary.
//!
//! Inputs are the artifacts the other operations wrote: `metrics.json`
//! files and `*_sweep.csv` tables. Batch metrics are re-validated against
//! their own per-image records; any disagreement is a schema error naming
//! the offending field. Output is a text summary plus plot-ready CSVs
//! (one `x,asr` pair per line, no rendering).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::projection::color_to_u8;

use super::metrics::{Metrics, RecordStatus};
use super::sweep::{read_sweep_csv, SweepCell, SweepKind, SweepTable};

#[derive(Debug)]
pub enum ReportInput {
    Batch { path: PathBuf, metrics: Metrics },
    Sweep { path: PathBuf, table: SweepTable },
}

/// Loads one input file, dispatching on extension.
pub fn load_report_input(path: &Path) -> Result<ReportInput> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let metrics: Metrics = serde_json::from_str(&text).map_err(|e| Error::Schema {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })?;
            validate_metrics(path, &metrics)?;
            Ok(ReportInput::Batch {
                path: path.to_path_buf(),
                metrics,
            })
        }
        Some("csv") => Ok(ReportInput::Sweep {
            path: path.to_path_buf(),
            table: read_sweep_csv(path)?,
        }),
        other => Err(Error::Schema {
            path: path.to_path_buf(),
            detail: format!("unsupported input extension {other:?} (expected json or csv)"),
        }),
    }
}

/// Cross-checks stored aggregates against the embedded records.
fn validate_metrics(path: &Path, metrics: &Metrics) -> Result<()> {
    let schema_err = |detail: String| Error::Schema {
        path: path.to_path_buf(),
        detail,
    };
    if metrics.n_images != metrics.records.len() {
        return Err(schema_err(format!(
            "field \"n_images\" is {} but {} records are present",
            metrics.n_images,
            metrics.records.len()
        )));
    }
    let successes = metrics
        .records
        .iter()
        .filter(|r| r.status == RecordStatus::Success)
        .count();
    if successes != metrics.successes {
        return Err(schema_err(format!(
            "field \"successes\" is {} but records contain {successes}",
            metrics.successes
        )));
    }
    let eligible = metrics.records.iter().filter(|r| r.eligible()).count();
    if eligible != metrics.n_eligible {
        return Err(schema_err(format!(
            "field \"n_eligible\" is {} but records contain {eligible}",
            metrics.n_eligible
        )));
    }
    if metrics.recompute_asr() != metrics.asr {
        return Err(schema_err(format!(
            "field \"asr\" is {:?} but records recompute to {:?}",
            metrics.asr,
            metrics.recompute_asr()
        )));
    }
    Ok(())
}

#[derive(Debug, Default)]
pub struct Report {
    pub batches: Vec<(PathBuf, Metrics)>,
    /// Sweeps merged by kind; same-kind inputs concatenate rows.
    pub sweeps: BTreeMap<&'static str, SweepTable>,
}

fn kind_key(kind: SweepKind) -> &'static str {
    match kind {
        SweepKind::Intensity => "intensity",
        SweepKind::Edges => "edges",
        SweepKind::Colors => "colors",
    }
}

pub fn build_report(paths: &[PathBuf]) -> Result<Report> {
    if paths.is_empty() {
        return Err(Error::InvalidInput("report needs at least one input".into()));
    }
    let mut report = Report::default();
    for path in paths {
        match load_report_input(path)? {
            ReportInput::Batch { path, metrics } => report.batches.push((path, metrics)),
            ReportInput::Sweep { path: _, table } => {
                report
                    .sweeps
                    .entry(kind_key(table.kind))
                    .and_modify(|existing| existing.rows.extend(table.rows.clone()))
                    .or_insert(table);
            }
        }
    }
    Ok(report)
}

fn cell_label(cell: &SweepCell) -> String {
    match cell {
        SweepCell::Intensity(i) => format!("{i}"),
        SweepCell::Edges(k) => format!("{k}"),
        SweepCell::Color(c) => {
            let [r, g, b] = color_to_u8(*c);
            format!("({r},{g},{b})")
        }
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}"))
        .unwrap_or_else(|| "n/a".into())
}

impl Report {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (path, m) in &self.batches {
            out.push_str(&format!("== batch {}\n", path.display()));
            out.push_str(&format!(
                "images {}, eligible {} (skipped {}, errors {})\n",
                m.n_images, m.n_eligible, m.n_skipped, m.n_errors
            ));
            out.push_str(&format!(
                "successes {}, ASR {}{}\n",
                m.successes,
                fmt_opt(m.asr, 4),
                m.asr_undefined_reason
                    .as_deref()
                    .map(|r| format!(" ({r})"))
                    .unwrap_or_default()
            ));
            out.push_str(&format!(
                "mean queries {}, total queries {}\n",
                fmt_opt(m.mean_queries, 1),
                m.total_queries
            ));
            out.push_str(&format!("blend: {}\n\n", m.blend));
        }
        for (name, table) in &self.sweeps {
            out.push_str(&format!("== {name} sweep ({} cells)\n", table.rows.len()));
            out.push_str(&format!(
                "{:<14} {:>10} {:>10} {:>8} {:>13}\n",
                name, "eligible", "successes", "asr", "mean_queries"
            ));
            for row in &table.rows {
                out.push_str(&format!(
                    "{:<14} {:>10} {:>10} {:>8} {:>13}\n",
                    cell_label(&row.cell),
                    row.n_eligible,
                    row.successes,
                    fmt_opt(row.asr, 4),
                    fmt_opt(row.mean_queries, 1),
                ));
            }
            out.push('\n');
        }
        out
    }

    /// Writes `plot_<kind>.csv` files (x, asr) and returns their paths.
    pub fn write_plot_data(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (name, table) in &self.sweeps {
            let path = dir.join(format!("plot_{name}.csv"));
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = csv::Writer::from_writer(file);
            w.write_record(["x", "asr"])?;
            for row in &table.rows {
                let x = match &row.cell {
                    SweepCell::Intensity(i) => i.to_string(),
                    SweepCell::Edges(k) => k.to_string(),
                    SweepCell::Color(c) => {
                        let [r, g, b] = color_to_u8(*c);
                        format!("{r}-{g}-{b}")
                    }
                };
                w.write_record([x, row.asr.map(|a| a.to_string()).unwrap_or_default()])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::super::metrics::ImageRecord;
    use super::super::sweep::{write_sweep_csv, SweepRow};
    use super::*;

    fn sample_metrics() -> Metrics {
        let records = vec![
            ImageRecord {
                image: "a.png".into(),
                label: 0,
                status: RecordStatus::Success,
                queries: 12,
                predicted_label: Some(2),
                steps: Some(0),
                final_confidence: Some(0.1),
                params: None,
                adversarial_png: None,
                detail: None,
            },
            ImageRecord {
                image: "b.png".into(),
                label: 1,
                status: RecordStatus::Failure,
                queries: 40,
                predicted_label: Some(1),
                steps: Some(2),
                final_confidence: Some(0.9),
                params: None,
                adversarial_png: None,
                detail: None,
            },
        ];
        Metrics::from_records(3, records)
    }

    #[test]
    fn round_trip_report_reproduces_the_numbers() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("metrics.json");
        fs::write(&path, serde_json::to_string_pretty(&sample_metrics()).unwrap()).unwrap();
        let report = build_report(&[path]).unwrap();
        let text = report.render_text();
        assert!(text.contains("successes 1"));
        assert!(text.contains("ASR 0.5000"));
        assert!(text.contains("mean queries 26.0"));
    }

    #[test]
    fn tampered_asr_is_rejected_naming_the_field() {
        let tmp = tempfile::tempdir().unwrap();
        let mut metrics = sample_metrics();
        metrics.asr = Some(0.9);
        let path = tmp.path().join("metrics.json");
        fs::write(&path, serde_json::to_string_pretty(&metrics).unwrap()).unwrap();
        match build_report(&[path]).unwrap_err() {
            Error::Schema { detail, .. } => assert!(detail.contains("asr"), "{detail}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn missing_json_field_is_a_schema_error_naming_it() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("metrics.json");
        fs::write(&path, r#"{"seed": 1}"#).unwrap();
        match build_report(&[path]).unwrap_err() {
            Error::Schema { detail, .. } => assert!(detail.contains("blend"), "{detail}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn merged_sweeps_concatenate_rows() {
        let tmp = tempfile::tempdir().unwrap();
        let mk = |dir: &str, intensity: f64| {
            let table = SweepTable {
                kind: SweepKind::Intensity,
                rows: vec![SweepRow {
                    cell: SweepCell::Intensity(intensity),
                    n_eligible: 4,
                    successes: 2,
                    asr: Some(0.5),
                    mean_queries: Some(10.0),
                }],
            };
            let d = tmp.path().join(dir);
            write_sweep_csv(&table, &d).unwrap();
            d.join(table.kind.csv_name())
        };
        let a = mk("a", 0.1);
        let b = mk("b", 0.2);
        let report = build_report(&[a, b]).unwrap();
        assert_eq!(report.sweeps["intensity"].rows.len(), 2);
        let plots = report.write_plot_data(&tmp.path().join("plots")).unwrap();
        assert_eq!(plots.len(), 1);
        let text = fs::read_to_string(&plots[0]).unwrap();
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn unsupported_extension_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("notes.txt");
        fs::write(&path, "hello").unwrap();
        assert!(matches!(
            build_report(&[path]).unwrap_err(),
            Error::Schema { .. }
        ));
    }
}
