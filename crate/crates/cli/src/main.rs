use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pcrlab::harness::{
    write_replications_csv, write_summary_csv, EigencheckConfig, Experiment, ExperimentConfig, GcRateConfig,
    LaplaceRatesConfig, PcrRunResult, PoincareConfig,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Monte Carlo and deterministic experiments on Wasserstein posterior
/// contraction rates.
#[derive(Parser, Debug)]
#[command(name = "pcrlab", version)]
struct Cli {
    /// Overrides the seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate ε_n over the ladder; writes per-replication and summary tables.
    RunPcr { config: PathBuf },
    /// Evaluate the four bound terms per ladder point.
    Decompose { config: PathBuf },
    /// Series and max-term rates for power-law spectral decay.
    LaplaceRates { config: PathBuf },
    /// Grid Poincaré constants of one-dimensional densities.
    Poincare { config: PathBuf },
    /// Glivenko–Cantelli rate of the empirical measure.
    GcRate { config: PathBuf },
    /// Check the eigen-system of the covariance operator.
    Eigencheck { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Returns `false` on a run-level failure.
fn run(cli: &Cli) -> Result<bool> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().context("building worker pool")?;
    }
    std::fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    match &cli.command {
        Command::RunPcr { config } => {
            let result = run_experiment(cli, config)?;
            let stem = stem(config);
            match cli.format {
                Format::Json => write_json(&cli.out_dir.join(format!("{stem}.json")), &result)?,
                Format::Csv => {
                    write_replications_csv(&result, create(&cli.out_dir.join(format!("{stem}_replications.csv")))?)?;
                    write_summary_csv(&result, create(&cli.out_dir.join(format!("{stem}_summary.csv")))?)?;
                }
            }
            report_pcr(&result);
            Ok(result.run_failure.is_none())
        }
        Command::Decompose { config } => {
            let result = run_experiment(cli, config)?;
            let path = cli.out_dir.join(format!("{}_terms.{}", stem(config), ext(cli.format)));
            match cli.format {
                Format::Json => write_json(&path, &result.levels.iter().map(|l| (&l.n, &l.terms)).collect::<Vec<_>>())?,
                Format::Csv => write_rows(
                    &path,
                    &["n", "delta_n", "jn", "l0n", "term1", "term2", "term3", "term4", "bound_total", "tail_ratio"],
                    result.levels.iter().map(|l| {
                        vec![
                            l.n as f64,
                            l.delta_n,
                            l.jn,
                            l.l0n,
                            l.terms.term1,
                            l.terms.term2,
                            l.terms.term3,
                            l.terms.term4,
                            l.terms.total,
                            l.terms.tail_ratio(),
                        ]
                    }),
                )?,
            }
            report_pcr(&result);
            if let Some(fit) = &result.bound_fit {
                println!("bound slope {:.4} (90% CI {:.4}, {:.4})", fit.slope, fit.bootstrap_ci90.0, fit.bootstrap_ci90.1);
            }
            Ok(result.run_failure.is_none())
        }
        Command::LaplaceRates { config } => {
            let cfg: LaplaceRatesConfig = read_config(config)?;
            let res = cfg.run()?;
            let path = cli.out_dir.join(format!("{}.{}", stem(config), ext(cli.format)));
            match cli.format {
                Format::Json => write_json(&path, &res)?,
                Format::Csv => write_rows(
                    &path,
                    &["n", "series1", "series2", "maxterm"],
                    res.rows.iter().map(|r| vec![r.n, r.series1, r.series2, r.maxterm]),
                )?,
            }
            println!("series1 slope {:.4} (predicted {:.4})", res.series1_slope, res.series1_predicted);
            println!("maxterm slope {:.4} (predicted {:.4})", res.maxterm_slope, res.maxterm_predicted);
            Ok(true)
        }
        Command::Poincare { config } => {
            let cfg: PoincareConfig = read_config(config)?;
            let rows = cfg.run()?;
            let path = cli.out_dir.join(format!("{}.{}", stem(config), ext(cli.format)));
            match cli.format {
                Format::Json => write_json(&path, &rows)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(create(&path)?);
                    w.write_record(["density", "constant", "constant_sq"])?;
                    for r in &rows {
                        w.write_record([serde_json::to_string(&r.density)?, r.constant.to_string(), r.constant_sq.to_string()])?;
                    }
                    w.flush()?;
                }
            }
            for r in &rows {
                println!("{} constant {:.6}", serde_json::to_string(&r.density)?, r.constant);
            }
            Ok(true)
        }
        Command::GcRate { config } => {
            let mut cfg: GcRateConfig = read_config(config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let res = cfg.run()?;
            let path = cli.out_dir.join(format!("{}.{}", stem(config), ext(cli.format)));
            match cli.format {
                Format::Json => write_json(&path, &res)?,
                Format::Csv => write_rows(
                    &path,
                    &["n", "mean", "se"],
                    res.levels.iter().map(|l| vec![l.n as f64, l.mean, l.se]),
                )?,
            }
            println!(
                "slope {:.4} (90% CI {:.4}, {:.4})",
                res.fit.slope, res.fit.bootstrap_ci90.0, res.fit.bootstrap_ci90.1
            );
            Ok(true)
        }
        Command::Eigencheck { config } => {
            let cfg: EigencheckConfig = read_config(config)?;
            let res = cfg.run()?;
            let path = cli.out_dir.join(format!("{}.{}", stem(config), ext(cli.format)));
            match cli.format {
                Format::Json => write_json(&path, &res)?,
                Format::Csv => write_rows(
                    &path,
                    &["k", "eigenvalue", "sup_relative_error"],
                    res.rows.iter().map(|r| vec![r.k as f64, r.eigenvalue, r.sup_relative_error]),
                )?,
            }
            let worst = res.rows.iter().map(|r| r.sup_relative_error).fold(0.0, f64::max);
            println!("max sup relative error {worst:.3e}, orthonormality error {:.3e}", res.orthonormality_error);
            Ok(true)
        }
    }
}

fn run_experiment(cli: &Cli, path: &Path) -> Result<PcrRunResult> {
    let mut cfg = ExperimentConfig::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(Experiment::new(cfg)?.run()?)
}

fn report_pcr(result: &PcrRunResult) {
    for l in &result.levels {
        println!("n {:>8}  eps {:.5} ± {:.5}  bound {:.5}", l.n, l.eps_hat, l.eps_se, l.terms.total);
    }
    if let Some(fit) = &result.eps_fit {
        println!("eps slope {:.4} (90% CI {:.4}, {:.4})", fit.slope, fit.bootstrap_ci90.0, fit.bootstrap_ci90.1);
    }
    if let Some(msg) = &result.run_failure {
        eprintln!("run failure: {msg}");
    }
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned())
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(create(path)?, value)?;
    Ok(())
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
