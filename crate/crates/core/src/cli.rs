//! Command-line front end: `sa`, `risk` and `validate`.
//!
//! Exit codes: 0 on success, 2 for configuration and usage errors, 3 for
//! failures while running.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::riskbench::{self, Estimator, RiskCurve};
use crate::rng;
use crate::study::{self, format_float, StudyConfig};
use crate::validate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "setsa",
    version,
    about = "HSIC-ANOVA sensitivity analysis for set-valued outputs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Overrides `master_seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory (default: `[output] dir` from the config, else `.`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replicated screening and ranking study.
    Sa {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Quadratic-risk benchmark against the theoretical bounds.
    Risk {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated sizes with n = m, overriding `[risk] grid`.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        /// Replicates per grid point, overriding `[risk] replicates`.
        #[arg(long)]
        replicates: Option<usize>,
        /// `shared` or `independent_nmc`; repeatable.
        #[arg(long)]
        estimator: Vec<Estimator>,
        #[command(flatten)]
        common: Common,
    },
    /// Fast invariant checks on the built-in cases.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(k) = threads {
        if k == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn out_dir(common: &Common, config: &StudyConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn load(path: &Path, common: &Common) -> Result<StudyConfig> {
    let mut config = StudyConfig::load(path)?;
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn run_sa(config: &Path, common: &Common) -> Result<String> {
    let config = load(config, common)?;
    let report = study::run_study(&config)?;
    let files = study::write_outputs(&report, &out_dir(common, &config))?;
    let mut s = study::summary_table(&report);
    let _ = writeln!(
        s,
        "wrote {} and {}",
        files.csv.display(),
        files.json.display()
    );
    Ok(s)
}

/// Writes one CSV row per grid point and estimator.
pub fn write_risk_csv<W: std::io::Write>(curves: &[RiskCurve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "m",
        "estimator",
        "empirical_risk",
        "bound_shared",
        "bound_independent",
    ])?;
    for p in curves.iter().flat_map(|c| &c.points) {
        w.write_record([
            p.n.to_string(),
            p.m.to_string(),
            p.estimator.name().to_string(),
            format_float(p.empirical_risk),
            format_float(p.bound_shared),
            format_float(p.bound_independent),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run_risk(
    config: &Path,
    grid: Option<&[usize]>,
    replicates: Option<usize>,
    estimators: &[Estimator],
    common: &Common,
) -> Result<String> {
    let config = load(config, common)?;
    let mut risk = config.risk.clone();
    if let Some(g) = grid {
        risk.grid = g.to_vec();
    }
    if let Some(r) = replicates {
        risk.replicates = r;
    }
    if !estimators.is_empty() {
        risk.estimators = estimators.to_vec();
    }
    if risk.grid.iter().any(|&n| n < 2) || risk.grid.is_empty() {
        return Err(Error::Config("risk grid needs sizes of at least 2".into()));
    }
    if risk.replicates < 20 {
        return Err(Error::Config(format!(
            "{} risk replicates, need at least 20",
            risk.replicates
        )));
    }
    if risk.n_ref < 1000 || risk.m_ref < 1 {
        return Err(Error::Config(format!(
            "n_ref = {} must be at least 1000",
            risk.n_ref
        )));
    }
    let seed = config.master_seed;
    let constants =
        riskbench::estimate_constants(risk.n_ref, risk.m_ref, rng::derive_seed(seed, &[0]))?;
    let grid: Vec<(usize, usize)> = risk.grid.iter().map(|&n| (n, n)).collect();
    let curves = risk
        .estimators
        .iter()
        .enumerate()
        .map(|(e, &est)| {
            riskbench::risk_curve(
                &constants,
                &grid,
                risk.replicates,
                est,
                rng::derive_seed(seed, &[1, e as u64]),
                risk.budget_cap,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let dir = out_dir(common, &config);
    fs::create_dir_all(&dir)?;
    let csv_path = dir.join("risk.csv");
    let json_path = dir.join("risk.json");
    write_risk_csv(&curves, fs::File::create(&csv_path)?)?;
    fs::write(&json_path, serde_json::to_string_pretty(&curves)?)?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "H_ref = {:.6e}  sigma2 = {:.4}  L = {:.4}  (n_ref = {}, m_ref = {}, R = {})",
        constants.h_ref,
        constants.bandwidth,
        constants.lipschitz,
        risk.n_ref,
        risk.m_ref,
        risk.replicates
    );
    let _ = writeln!(
        s,
        "{:>6} {:>16} {:>12} {:>12} {:>12}",
        "n=m", "estimator", "risk", "bound_sh", "bound_ind"
    );
    for c in &curves {
        for p in &c.points {
            let _ = writeln!(
                s,
                "{:>6} {:>16} {:>12.4e} {:>12.4e} {:>12.4e}",
                p.n,
                p.estimator.name(),
                p.empirical_risk,
                p.bound_shared,
                p.bound_independent
            );
        }
        if c.points.len() > 1 {
            let _ = writeln!(
                s,
                "log-log slope ({}): {:.3}",
                c.points[0].estimator.name(),
                c.log_log_slope()
            );
        }
    }
    let _ = writeln!(
        s,
        "wrote {} and {}",
        csv_path.display(),
        json_path.display()
    );
    Ok(s)
}

fn run_validate(common: &Common) -> Result<(String, bool)> {
    let checks = validate::run_suite(common.seed.unwrap_or(0))?;
    let mut s = String::new();
    for c in &checks {
        let _ = writeln!(
            s,
            "{} {:<40} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    Ok((s, checks.iter().all(|c| c.passed)))
}

/// Runs a parsed command and returns its exit code.
pub fn run(cli: Cli) -> i32 {
    let common = match &cli.command {
        Command::Sa { common, .. }
        | Command::Risk { common, .. }
        | Command::Validate { common } => common,
    };
    if let Err(e) = set_threads(common.threads) {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    let outcome = match &cli.command {
        Command::Sa { config, common } => run_sa(config, common).map(|s| (s, true)),
        Command::Risk {
            config,
            grid,
            replicates,
            estimator,
            common,
        } => run_risk(config, grid.as_deref(), *replicates, estimator, common).map(|s| (s, true)),
        Command::Validate { common } => run_validate(common),
    };
    match outcome {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                EXIT_OK
            } else {
                EXIT_RUNTIME
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `std::env::args` and runs; usage errors exit with code 2.
pub fn main() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}
