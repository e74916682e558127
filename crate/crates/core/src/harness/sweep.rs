//! Ablation sweeps: intensity, edge count, and the 27-color grid.
//!
//! Every cell is an ordinary batch run with one parameter pinned by
//! collapsing its bounds (lower == upper) — the optimizer sees no special
//! cases. Cells derive their seeds from the run seed and a value-based cell
//! id, so reordering a sweep cannot change any cell's result.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::{color_grid, color_to_u8, MAX_VERTICES, MIN_VERTICES};

use super::batch::run_attack_batch;
use super::config::RunConfig;
use super::metrics::Metrics;
use super::seed::sub_seed;

pub const INTENSITY_SWEEP_CSV: &str = "intensity_sweep.csv";
pub const EDGES_SWEEP_CSV: &str = "edges_sweep.csv";
pub const COLORS_SWEEP_CSV: &str = "colors_sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Intensity,
    Edges,
    Colors,
}

impl SweepKind {
    pub fn csv_name(&self) -> &'static str {
        match self {
            SweepKind::Intensity => INTENSITY_SWEEP_CSV,
            SweepKind::Edges => EDGES_SWEEP_CSV,
            SweepKind::Colors => COLORS_SWEEP_CSV,
        }
    }
}

/// The swept value of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SweepCell {
    Intensity(f64),
    Edges(usize),
    Color([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub n_eligible: usize,
    pub successes: usize,
    pub asr: Option<f64>,
    pub mean_queries: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub kind: SweepKind,
    pub rows: Vec<SweepRow>,
}

/// Default intensity grid 0.1, 0.2, ..., 0.8.
pub fn default_intensities() -> Vec<f64> {
    (1..=8).map(|i| f64::from(i) / 10.0).collect()
}

/// Default edge-count grid 3..=9.
pub fn default_edge_counts() -> Vec<usize> {
    (3..=9).collect()
}

fn stats_row(cell: SweepCell, metrics: &Metrics) -> SweepRow {
    SweepRow {
        cell,
        n_eligible: metrics.n_eligible,
        successes: metrics.successes,
        asr: metrics.asr,
        mean_queries: metrics.mean_queries,
    }
}

fn cell_config(base: &RunConfig, cell_id: &str, subdir: String) -> RunConfig {
    RunConfig {
        output: base.output.join("cells").join(subdir),
        seed: sub_seed(base.seed, cell_id),
        ..base.clone()
    }
}

/// One batch per intensity value, with the intensity bounds collapsed to
/// that value.
pub fn sweep_intensity(config: &RunConfig, intensities: &[f64]) -> Result<SweepTable> {
    if intensities.is_empty() {
        return Err(Error::InvalidInput("intensity sweep needs values".into()));
    }
    for &i in intensities {
        if !(i.is_finite() && (0.0..=1.0).contains(&i)) {
            return Err(Error::InvalidInput(format!(
                "intensity {i} outside [0,1]"
            )));
        }
    }
    config.validate()?;
    let mut rows = Vec::with_capacity(intensities.len());
    for &intensity in intensities {
        let mut cell = cell_config(
            config,
            &format!("intensity={intensity}"),
            format!("intensity_{intensity}"),
        );
        cell.bounds.intensity = [intensity, intensity];
        let metrics = run_attack_batch(&cell)?;
        rows.push(stats_row(SweepCell::Intensity(intensity), &metrics));
    }
    let table = SweepTable {
        kind: SweepKind::Intensity,
        rows,
    };
    write_sweep_csv(&table, &config.output)?;
    Ok(table)
}

/// One batch per vertex count.
pub fn sweep_edges(config: &RunConfig, edge_counts: &[usize]) -> Result<SweepTable> {
    if edge_counts.is_empty() {
        return Err(Error::InvalidInput("edge sweep needs values".into()));
    }
    for &k in edge_counts {
        if !(MIN_VERTICES..=MAX_VERTICES).contains(&k) {
            return Err(Error::InvalidInput(format!(
                "vertex count {k} outside {MIN_VERTICES}..={MAX_VERTICES}"
            )));
        }
    }
    config.validate()?;
    let mut rows = Vec::with_capacity(edge_counts.len());
    for &k in edge_counts {
        let mut cell = cell_config(config, &format!("edges={k}"), format!("edges_{k}"));
        cell.bounds.vertex_count = k;
        let metrics = run_attack_batch(&cell)?;
        rows.push(stats_row(SweepCell::Edges(k), &metrics));
    }
    let table = SweepTable {
        kind: SweepKind::Edges,
        rows,
    };
    write_sweep_csv(&table, &config.output)?;
    Ok(table)
}

/// One batch per grid color `{0, 127/255, 1}^3`, color bounds collapsed,
/// intensity left free.
pub fn sweep_color_grid(config: &RunConfig) -> Result<SweepTable> {
    config.validate()?;
    let mut rows = Vec::with_capacity(27);
    for color in color_grid() {
        let [r8, g8, b8] = color_to_u8(color);
        let mut cell = cell_config(
            config,
            &format!("color={r8},{g8},{b8}"),
            format!("color_{r8}_{g8}_{b8}"),
        );
        cell.bounds.color_min = color;
        cell.bounds.color_max = color;
        let metrics = run_attack_batch(&cell)?;
        rows.push(stats_row(SweepCell::Color(color), &metrics));
    }
    let table = SweepTable {
        kind: SweepKind::Colors,
        rows,
    };
    write_sweep_csv(&table, &config.output)?;
    Ok(table)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the sweep table as `<kind>_sweep.csv` in `dir`.
pub fn write_sweep_csv(table: &SweepTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(table.kind.csv_name());
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::Writer::from_writer(file);
    match table.kind {
        SweepKind::Intensity => {
            w.write_record(["intensity", "n_eligible", "successes", "asr", "mean_queries"])?
        }
        SweepKind::Edges => w.write_record([
            "vertex_count",
            "n_eligible",
            "successes",
            "asr",
            "mean_queries",
        ])?,
        SweepKind::Colors => w.write_record([
            "r8",
            "g8",
            "b8",
            "r",
            "g",
            "b",
            "n_eligible",
            "successes",
            "asr",
            "mean_queries",
        ])?,
    }
    for row in &table.rows {
        let stats = [
            row.n_eligible.to_string(),
            row.successes.to_string(),
            fmt_opt(row.asr),
            fmt_opt(row.mean_queries),
        ];
        match (&row.cell, table.kind) {
            (SweepCell::Intensity(i), SweepKind::Intensity) => {
                let mut record = vec![i.to_string()];
                record.extend(stats);
                w.write_record(&record)?;
            }
            (SweepCell::Edges(k), SweepKind::Edges) => {
                let mut record = vec![k.to_string()];
                record.extend(stats);
                w.write_record(&record)?;
            }
            (SweepCell::Color(c), SweepKind::Colors) => {
                let [r8, g8, b8] = color_to_u8(*c);
                let mut record = vec![
                    r8.to_string(),
                    g8.to_string(),
                    b8.to_string(),
                    c[0].to_string(),
                    c[1].to_string(),
                    c[2].to_string(),
                ];
                record.extend(stats);
                w.write_record(&record)?;
            }
            (cell, kind) => {
                return Err(Error::InvalidInput(format!(
                    "cell {cell:?} does not belong to a {kind:?} sweep"
                )))
            }
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Reads a sweep CSV back, detecting the kind from the header.
pub fn read_sweep_csv(path: &Path) -> Result<SweepTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let kind = match headers.first().map(String::as_str) {
        Some("intensity") => SweepKind::Intensity,
        Some("vertex_count") => SweepKind::Edges,
        Some("r8") => SweepKind::Colors,
        other => {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                detail: format!("unrecognized sweep header column {other:?}"),
            })
        }
    };
    let expected: &[&str] = match kind {
        SweepKind::Intensity => &["intensity", "n_eligible", "successes", "asr", "mean_queries"],
        SweepKind::Edges => &[
            "vertex_count",
            "n_eligible",
            "successes",
            "asr",
            "mean_queries",
        ],
        SweepKind::Colors => &[
            "r8",
            "g8",
            "b8",
            "r",
            "g",
            "b",
            "n_eligible",
            "successes",
            "asr",
            "mean_queries",
        ],
    };
    if headers != expected {
        let offending = headers
            .iter()
            .zip(expected)
            .find(|(h, e)| h.as_str() != **e)
            .map(|(h, _)| h.clone())
            .unwrap_or_else(|| format!("column count {}", headers.len()));
        return Err(Error::Schema {
            path: path.to_path_buf(),
            detail: format!("unexpected sweep column {offending:?}"),
        });
    }
    let parse_f64 = |s: &str, field: &str| -> Result<f64> {
        s.parse().map_err(|_| Error::Schema {
            path: path.to_path_buf(),
            detail: format!("field {field:?} is not a number: {s:?}"),
        })
    };
    let parse_usize = |s: &str, field: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::Schema {
            path: path.to_path_buf(),
            detail: format!("field {field:?} is not an integer: {s:?}"),
        })
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or_default();
        let (cell, offset) = match kind {
            SweepKind::Intensity => (
                SweepCell::Intensity(parse_f64(get(0), "intensity")?),
                1,
            ),
            SweepKind::Edges => (SweepCell::Edges(parse_usize(get(0), "vertex_count")?), 1),
            SweepKind::Colors => (
                SweepCell::Color([
                    parse_f64(get(3), "r")?,
                    parse_f64(get(4), "g")?,
                    parse_f64(get(5), "b")?,
                ]),
                6,
            ),
        };
        let opt = |s: &str, field: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f64(s, field).map(Some)
            }
        };
        rows.push(SweepRow {
            cell,
            n_eligible: parse_usize(get(offset), "n_eligible")?,
            successes: parse_usize(get(offset + 1), "successes")?,
            asr: opt(get(offset + 2), "asr")?,
            mean_queries: opt(get(offset + 3), "mean_queries")?,
        });
    }
    Ok(SweepTable { kind, rows })
}
