//! `synth-bench`: benchmark synthetic phenotype data from the command line.
//!
//! Exit codes: 0 success, 1 a report failed validation, 2 configuration
//! error, 3 data error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use synthbench::baselines::{Baseline, GenerationConfig, DEFAULT_TARGET_SIZE};
use synthbench::orchestrator::{
    load_real, rank_methods, run_pipeline, run_scaling_experiment, validate_report, write_atomic,
    write_matrix, MetricReport, RunConfig, ScalingAxis,
};
use synthbench::seed::derive_seed;
use synthbench::{Error, Result};

#[derive(Parser)]
#[command(name = "synth-bench", version, about = "Fidelity, utility and privacy benchmarks for synthetic phenotype data")]
struct Cli {
    /// Root seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; overrides `workers` in the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Run config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Pbr,
    Resample,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    /// Vary the synthetic size M.
    M,
    /// Vary the training size N.
    N,
}

#[derive(Subcommand)]
enum Command {
    /// Build the real phenotype matrix from the config and write it out.
    Ingest {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Matrix file to write (default: <out>/real_matrix.txt).
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Fit a built-in baseline to the real data and write the synthetic matrix.
    Generate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum)]
        baseline: BaselineArg,
        /// Rows to generate.
        #[arg(long, default_value_t = DEFAULT_TARGET_SIZE)]
        size: usize,
        /// Matrix file to write (default: <out>/<baseline>_matrix.txt).
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Fidelity metrics only.
    Fidelity(ConfigArgs),
    /// Utility metrics only.
    Utility(ConfigArgs),
    /// Privacy metrics only.
    Privacy(ConfigArgs),
    /// Every metric family enabled in the config.
    Evaluate(ConfigArgs),
    /// Scaling curve over M or N.
    Scale {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
        /// Comma-separated grid, e.g. 1000,5000,10000.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Rank methods from their report files.
    Rank {
        /// report.json files, one per method.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Metric weight as family.name=w; repeatable. Default: all metrics, equal weight.
        #[arg(long = "weight", value_parser = parse_weight)]
        weights: Vec<(String, f64)>,
        /// Also write the ranking as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a report file against the shipped schema.
    Validate { report: PathBuf },
}

fn parse_weight(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected metric=weight, got {s:?}"))?;
    let w: f64 = v.trim().parse().map_err(|_| format!("bad weight {v:?}"))?;
    Ok((k.trim().to_string(), w))
}

fn load_config(cli: &Cli, args: &ConfigArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_file(&args.config).map_err(|e| match e {
        Error::Io { path, source } => Error::config(format!("cannot read {}: {source}", path.display())),
        other => other,
    })?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if let Some(out) = &args.out {
        // relative to the working directory, not the config file
        cfg.output_dir = std::path::absolute(out).map_err(|e| Error::io(out, e))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn only(cfg: &mut RunConfig, family: &str) {
    cfg.fidelity.enabled = family == "fidelity";
    cfg.utility.enabled = family == "utility";
    cfg.privacy.enabled = family == "privacy";
}

fn evaluate(cfg: &RunConfig) -> Result<()> {
    let report = run_pipeline(cfg)?;
    let out = cfg.output_path().join("report.json");
    println!("{}", out.display());
    for (path, s) in report.flat_metrics() {
        let v = s.value.map_or("null".to_string(), |v| format!("{v:.6}"));
        println!("  {path:<32} {v}");
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest { cfg, matrix } => {
            let c = load_config(cli, cfg)?;
            let (real, _) = load_real(&c, false)?;
            let path = matrix.clone().unwrap_or_else(|| c.output_path().join("real_matrix.txt"));
            write_matrix(&real.matrix, &path)?;
            let summary = serde_json::to_string_pretty(&real.summary).expect("summary serializes");
            write_atomic(&c.output_path().join("ingest_summary.json"), summary.as_bytes())?;
            println!("{} ({} x {})", path.display(), real.matrix.n_rows(), real.matrix.n_cols());
        }
        Command::Generate { cfg, baseline, size, matrix } => {
            let c = load_config(cli, cfg)?;
            let (real, _) = load_real(&c, false)?;
            let b = match baseline {
                BaselineArg::Pbr => Baseline::Pbr,
                BaselineArg::Resample => Baseline::Resample,
            };
            let syn = b.generate(
                &real.matrix,
                &GenerationConfig {
                    target_size: *size,
                    seed: derive_seed(c.seed, "baseline"),
                },
            )?;
            let name = format!("{b:?}").to_ascii_lowercase();
            let path = matrix
                .clone()
                .unwrap_or_else(|| c.output_path().join(format!("{name}_matrix.txt")));
            write_matrix(&syn, &path)?;
            println!("{} ({} x {})", path.display(), syn.n_rows(), syn.n_cols());
        }
        Command::Fidelity(a) | Command::Utility(a) | Command::Privacy(a) => {
            let mut c = load_config(cli, a)?;
            let family = match &cli.command {
                Command::Fidelity(_) => "fidelity",
                Command::Utility(_) => "utility",
                _ => "privacy",
            };
            only(&mut c, family);
            evaluate(&c)?;
        }
        Command::Evaluate(a) => evaluate(&load_config(cli, a)?)?,
        Command::Scale { cfg, axis, grid, replicates } => {
            let mut c = load_config(cli, cfg)?;
            let mut sc = c.scaling.clone().unwrap_or_default();
            if let Some(a) = axis {
                sc.axis = match a {
                    AxisArg::M => ScalingAxis::SynthSize,
                    AxisArg::N => ScalingAxis::TrainSize,
                };
            }
            if grid.is_some() {
                sc.grid = grid.clone();
            }
            if let Some(r) = replicates {
                sc.replicates = *r;
            }
            c.scaling = Some(sc);
            let table = run_scaling_experiment(&c)?;
            let dir = c.output_path();
            table.write(&dir)?;
            println!("{}", dir.join("scaling.csv").display());
            print!("{}", String::from_utf8_lossy(&table.to_csv()?));
        }
        Command::Rank { reports, weights, out } => {
            let loaded = reports.iter().map(|p| read_report(p)).collect::<Result<Vec<_>>>()?;
            let w: BTreeMap<String, f64> = weights.iter().cloned().collect();
            let ranking = rank_methods(&loaded, &w)?;
            for (i, m) in ranking.methods.iter().enumerate() {
                println!("{:>2}. {:<24} {:.3}", i + 1, m.method, m.score);
            }
            if let Some(p) = out {
                let text = serde_json::to_string_pretty(&ranking).expect("ranking serializes");
                write_atomic(p, text.as_bytes())?;
            }
        }
        Command::Validate { .. } => unreachable!("handled in main"),
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<MetricReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::data(format!("{} is not a report: {e}", path.display())))
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config() {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Command::Validate { report } = &cli.command {
        return match validate_report(report) {
            Ok(v) if v.valid => {
                println!("valid");
                ExitCode::SUCCESS
            }
            Ok(v) => {
                for e in &v.errors {
                    println!("{e}");
                }
                ExitCode::from(1)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        };
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
