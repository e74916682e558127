//! Command-line driver for the color-projection attack toolkit.
//!
//! Subcommands: `attack` (batch run), `sweep --intensity|--edges|--colors`,
//! `augment`, `report`, `gen-toy-dataset`. Every run-config field can come
//! from a TOML file (`--config`) and be overridden by a flag. Exit code 0
//! on completed runs, nonzero on config or protocol errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use colorproj::harness::{
    augment_dataset, build_report, default_edge_counts, default_intensities,
    generate_toy_dataset, run_attack_batch, sweep_color_grid, sweep_edges, sweep_intensity,
    Metrics, OracleSpec, Report, RunConfig, SweepTable, ToyDatasetSpec,
    DEFAULT_AUGMENT_INTENSITY,
};
use colorproj::Error;

#[derive(Parser)]
#[command(name = "colorproj", version, about = "Black-box color-projection attacks on image classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attack every image in a dataset and write metrics + samples.
    Attack(AttackArgs),
    /// Ablation sweeps over intensity, edge count, or the 27-color grid.
    Sweep(SweepArgs),
    /// Write the 27 grid-color composites of every input image.
    Augment(AugmentArgs),
    /// Summarize metrics/sweep artifacts and emit plot-ready CSVs.
    Report(ReportArgs),
    /// Generate a synthetic dataset for the built-in toy classifier.
    GenToyDataset(GenToyDatasetArgs),
}

#[derive(Args)]
struct AttackArgs {
    /// Run seed; per-image seeds derive from it.
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    run: RunOverrides,
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["intensity", "edges", "colors"])))]
struct SweepArgs {
    /// Run seed; per-cell and per-image seeds derive from it.
    #[arg(long)]
    seed: u64,
    /// Intensity sweep; value is a comma list (bare flag: 0.1..0.8).
    #[arg(long, num_args = 0..=1, default_missing_value = "")]
    intensity: Option<String>,
    /// Edge-count sweep; value is a comma list (bare flag: 3..9).
    #[arg(long, num_args = 0..=1, default_missing_value = "")]
    edges: Option<String>,
    /// 27-color grid sweep.
    #[arg(long)]
    colors: bool,
    #[command(flatten)]
    run: RunOverrides,
}

/// Flag-level overrides for [`RunConfig`]; unset flags keep the config-file
/// (or default) values.
#[derive(Args)]
struct RunOverrides {
    /// TOML run-config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Directory of grayscale mask PNGs (same filenames as the dataset).
    #[arg(long)]
    masks: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Attack images concurrently (concurrent-safe oracles only).
    #[arg(long)]
    parallel: bool,

    /// Oracle kind: toy | subprocess | http.
    #[arg(long)]
    oracle: Option<String>,
    /// Subprocess oracle command line (whitespace-split).
    #[arg(long)]
    oracle_command: Option<String>,
    /// HTTP oracle base URL.
    #[arg(long)]
    oracle_url: Option<String>,
    #[arg(long)]
    oracle_timeout_ms: Option<u64>,
    #[arg(long)]
    oracle_retries: Option<u32>,
    #[arg(long)]
    oracle_max_in_flight: Option<usize>,
    /// Toy oracle softmax temperature.
    #[arg(long)]
    toy_temperature: Option<f64>,
    /// Toy oracle reference colors, "r,g,b;r,g,b;..." (normalized).
    #[arg(long)]
    toy_references: Option<String>,

    /// Polygon vertex count k (3..=16).
    #[arg(long)]
    vertex_count: Option<usize>,
    #[arg(long)]
    intensity_min: Option<f64>,
    #[arg(long)]
    intensity_max: Option<f64>,
    /// Pin the projection color to "r,g,b" (normalized).
    #[arg(long)]
    pin_color: Option<String>,
    /// Lower color bounds "r,g,b".
    #[arg(long)]
    color_min: Option<String>,
    /// Upper color bounds "r,g,b".
    #[arg(long)]
    color_max: Option<String>,

    #[arg(long)]
    swarm_size: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    velocity_cap: Option<f64>,
    /// Draw r1/r2 per dimension instead of per particle.
    #[arg(long)]
    per_dimension_draws: bool,

    /// Enable expectation-over-transformation evaluation.
    #[arg(long)]
    eot: bool,
    /// EOT brightness range "lo,hi".
    #[arg(long)]
    eot_brightness: Option<String>,
    /// EOT offset limit as a fraction of each dimension.
    #[arg(long)]
    eot_offset_fraction: Option<f64>,
    /// Explicit EOT offset limits in pixels, "x,y".
    #[arg(long)]
    eot_offset_px: Option<String>,
    /// EOT per-channel color jitter.
    #[arg(long)]
    eot_jitter: Option<f64>,
    /// EOT samples (oracle queries) per evaluation.
    #[arg(long)]
    eot_samples: Option<u32>,
}

#[derive(Args)]
struct AugmentArgs {
    /// Directory of input PNGs.
    #[arg(long)]
    input: PathBuf,
    /// Output directory for composites and the manifest.
    #[arg(long)]
    output: PathBuf,
    /// Blend intensity for every composite.
    #[arg(long, default_value_t = DEFAULT_AUGMENT_INTENSITY)]
    intensity: f64,
}

#[derive(Args)]
struct ReportArgs {
    /// metrics.json files and *_sweep.csv tables.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Directory for plot-ready CSVs.
    #[arg(long, default_value = "report")]
    output: PathBuf,
}

#[derive(Args)]
struct GenToyDatasetArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Square image side in pixels.
    #[arg(long, default_value_t = 32)]
    size: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-image tint amplitude.
    #[arg(long, default_value_t = 0.1)]
    tint: f64,
    /// Per-pixel noise amplitude.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
}

fn parse_triple(text: &str, what: &str) -> Result<[f64; 3], Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("{what} needs three comma-separated values, got {text:?}")));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{what}: {part:?} is not a number")))?;
    }
    Ok(out)
}

fn parse_pair(text: &str, what: &str) -> Result<[f64; 2], Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("{what} needs two comma-separated values, got {text:?}")));
    }
    let lo = parts[0].trim().parse().map_err(|_| {
        Error::Config(format!("{what}: {:?} is not a number", parts[0]))
    })?;
    let hi = parts[1].trim().parse().map_err(|_| {
        Error::Config(format!("{what}: {:?} is not a number", parts[1]))
    })?;
    Ok([lo, hi])
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Error> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{what}: {part:?} is not valid")))
        })
        .collect()
}

impl RunOverrides {
    fn resolve(&self, seed: u64) -> Result<RunConfig, Error> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        config.seed = seed;
        if let Some(v) = &self.dataset {
            config.dataset = v.clone();
        }
        if let Some(v) = &self.masks {
            config.masks = Some(v.clone());
        }
        if let Some(v) = &self.output {
            config.output = v.clone();
        }
        if self.parallel {
            config.parallel = true;
        }

        if let Some(kind) = &self.oracle {
            config.oracle = match kind.as_str() {
                "toy" => OracleSpec::Toy {
                    references: None,
                    temperature: None,
                },
                "subprocess" => OracleSpec::Subprocess {
                    command: vec![],
                    timeout_ms: None,
                    retries: None,
                },
                "http" => OracleSpec::Http {
                    url: String::new(),
                    timeout_ms: None,
                    retries: None,
                    max_in_flight: None,
                },
                other => {
                    return Err(Error::Config(format!(
                        "unknown oracle kind {other:?} (expected toy, subprocess, or http)"
                    )))
                }
            };
        }
        match &mut config.oracle {
            OracleSpec::Toy {
                references,
                temperature,
            } => {
                if let Some(t) = self.toy_temperature {
                    *temperature = Some(t);
                }
                if let Some(list) = &self.toy_references {
                    let parsed: Result<Vec<[f64; 3]>, Error> = list
                        .split(';')
                        .map(|triple| parse_triple(triple, "--toy-references"))
                        .collect();
                    *references = Some(parsed?);
                }
            }
            OracleSpec::Subprocess {
                command,
                timeout_ms,
                retries,
            } => {
                if let Some(cmd) = &self.oracle_command {
                    *command = cmd.split_whitespace().map(str::to_string).collect();
                }
                if command.is_empty() {
                    return Err(Error::Config(
                        "subprocess oracle needs --oracle-command or a config-file command".into(),
                    ));
                }
                if let Some(ms) = self.oracle_timeout_ms {
                    *timeout_ms = Some(ms);
                }
                if let Some(r) = self.oracle_retries {
                    *retries = Some(r);
                }
            }
            OracleSpec::Http {
                url,
                timeout_ms,
                retries,
                max_in_flight,
            } => {
                if let Some(u) = &self.oracle_url {
                    *url = u.clone();
                }
                if url.is_empty() {
                    return Err(Error::Config(
                        "http oracle needs --oracle-url or a config-file url".into(),
                    ));
                }
                if let Some(ms) = self.oracle_timeout_ms {
                    *timeout_ms = Some(ms);
                }
                if let Some(r) = self.oracle_retries {
                    *retries = Some(r);
                }
                if let Some(m) = self.oracle_max_in_flight {
                    *max_in_flight = Some(m);
                }
            }
        }

        if let Some(k) = self.vertex_count {
            config.bounds.vertex_count = k;
        }
        if let Some(lo) = self.intensity_min {
            config.bounds.intensity[0] = lo;
        }
        if let Some(hi) = self.intensity_max {
            config.bounds.intensity[1] = hi;
        }
        if let Some(text) = &self.pin_color {
            let c = parse_triple(text, "--pin-color")?;
            config.bounds.color_min = c;
            config.bounds.color_max = c;
        }
        if let Some(text) = &self.color_min {
            config.bounds.color_min = parse_triple(text, "--color-min")?;
        }
        if let Some(text) = &self.color_max {
            config.bounds.color_max = parse_triple(text, "--color-max")?;
        }

        if let Some(v) = self.swarm_size {
            config.pso.swarm_size = v;
        }
        if let Some(v) = self.max_steps {
            config.pso.max_steps = v;
        }
        if let Some(v) = self.omega {
            config.pso.omega = v;
        }
        if let Some(v) = self.c1 {
            config.pso.c1 = v;
        }
        if let Some(v) = self.c2 {
            config.pso.c2 = v;
        }
        if let Some(v) = self.velocity_cap {
            config.pso.velocity_cap_fraction = v;
        }
        if self.per_dimension_draws {
            config.pso.per_dimension_draws = true;
        }

        if self.eot {
            config.eot.enabled = true;
        }
        if let Some(text) = &self.eot_brightness {
            config.eot.brightness = parse_pair(text, "--eot-brightness")?;
        }
        if let Some(v) = self.eot_offset_fraction {
            config.eot.offset_fraction = v;
        }
        if let Some(text) = &self.eot_offset_px {
            let px = parse_pair(text, "--eot-offset-px")?;
            if px[0] < 0.0 || px[1] < 0.0 || px[0].fract() != 0.0 || px[1].fract() != 0.0 {
                return Err(Error::Config(format!(
                    "--eot-offset-px needs non-negative integers, got {text:?}"
                )));
            }
            config.eot.offset_px = Some([px[0] as u32, px[1] as u32]);
        }
        if let Some(v) = self.eot_jitter {
            config.eot.color_jitter = v;
        }
        if let Some(v) = self.eot_samples {
            config.eot.samples_per_eval = v;
        }
        Ok(config)
    }
}

fn print_metrics_summary(metrics: &Metrics, output: &std::path::Path) {
    println!(
        "images {}, eligible {} (skipped {}, errors {})",
        metrics.n_images, metrics.n_eligible, metrics.n_skipped, metrics.n_errors
    );
    match metrics.asr {
        Some(asr) => println!(
            "successes {}, ASR {asr:.4}, mean queries {:.1}",
            metrics.successes,
            metrics.mean_queries.unwrap_or(f64::NAN)
        ),
        None => println!(
            "ASR undefined: {}",
            metrics
                .asr_undefined_reason
                .as_deref()
                .unwrap_or("no reason recorded")
        ),
    }
    println!("artifacts in {}", output.display());
}

fn print_sweep(table: &SweepTable) {
    let mut report = Report::default();
    let key = match table.kind {
        colorproj::harness::SweepKind::Intensity => "intensity",
        colorproj::harness::SweepKind::Edges => "edges",
        colorproj::harness::SweepKind::Colors => "colors",
    };
    report.sweeps.insert(key, table.clone());
    print!("{}", report.render_text());
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Attack(args) => {
            let config = args.run.resolve(args.seed)?;
            let metrics = run_attack_batch(&config)?;
            print_metrics_summary(&metrics, &config.output);
            Ok(())
        }
        Command::Sweep(args) => {
            let config = args.run.resolve(args.seed)?;
            let table = if let Some(list) = &args.intensity {
                let values = if list.is_empty() {
                    default_intensities()
                } else {
                    parse_list(list, "--intensity")?
                };
                sweep_intensity(&config, &values)?
            } else if let Some(list) = &args.edges {
                let values = if list.is_empty() {
                    default_edge_counts()
                } else {
                    parse_list(list, "--edges")?
                };
                sweep_edges(&config, &values)?
            } else {
                sweep_color_grid(&config)?
            };
            print_sweep(&table);
            println!(
                "sweep table written to {}",
                config.output.join(table.kind.csv_name()).display()
            );
            Ok(())
        }
        Command::Augment(args) => {
            let manifest = augment_dataset(&args.input, &args.output, args.intensity)?;
            println!(
                "{} inputs -> {} composites at intensity {} ({} skipped), manifest in {}",
                manifest.inputs,
                manifest.outputs,
                manifest.intensity,
                manifest.skipped.len(),
                args.output.join("manifest.json").display()
            );
            Ok(())
        }
        Command::Report(args) => {
            let report = build_report(&args.inputs)?;
            print!("{}", report.render_text());
            let written = report.write_plot_data(&args.output)?;
            for path in written {
                println!("plot data: {}", path.display());
            }
            Ok(())
        }
        Command::GenToyDataset(args) => {
            let spec = ToyDatasetSpec {
                count: args.count,
                width: args.size,
                height: args.size,
                tint: args.tint,
                noise: args.noise,
                seed: args.seed,
                ..ToyDatasetSpec::default()
            };
            let dataset = generate_toy_dataset(&args.output, &spec)?;
            println!(
                "wrote {} labeled images to {}",
                dataset.entries.len(),
                args.output.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
