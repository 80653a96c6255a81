//! Command-line driver: chipping runs, exports, dimension estimates and the
//! invariant suites, each leaving hashed reports in an output directory.
//!
//! Exit status is 0 on success, 1 when an invariant fails or a run errors,
//! and 2 when the configuration is rejected.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chipnet::{SeedShape, SigmaChoice};
use config::{PolicyKind, RunConfig};
use report::RunReport;

#[derive(Parser)]
#[command(name = "chipnet", version, about = "Iterated vertex chipping and dimension estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Chip the seed and write one OBJ per generation plus the rates.
    Chip,
    /// Box-count and pressure-root dimension estimates.
    Dim,
    /// Run every invariant check; exit 1 if any fails.
    Verify,
    /// Write edge nets and a CSV of matrix words.
    Export,
    /// Re-check the hashes of every report in the output directory.
    Report,
}

/// Overrides of the config file keys of the same name.
#[derive(clap::Args, Default)]
struct Flags {
    /// Flat TOML file of run settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed_shape: Option<SeedShape>,
    #[arg(long, global = true, value_enum)]
    policy: Option<PolicyKind>,
    /// Constant chipping rate.
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Lower bound of uniform rates.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Upper bound of uniform rates.
    #[arg(long, global = true)]
    pmax: Option<f64>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    rng_seed: Option<u64>,
    /// Neighbour order at the seed vertices: sorted, reversed or rotated.
    #[arg(long, global = true)]
    sigma: Option<SigmaChoice>,
    /// Box-count exponents k, box size diameter·2^-k, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    scales: Option<Vec<i32>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pressure_depths: Option<Vec<usize>>,
    /// Pressure-root tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory, created when missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Constant rates for the spectral checks, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    spectral_p: Option<Vec<f64>>,
    #[arg(long, global = true)]
    word_depth: Option<usize>,
    #[arg(long, global = true)]
    disjoint_depth: Option<usize>,
    #[arg(long, global = true)]
    export_word_depth: Option<usize>,
    /// Replace one seed rate before the regularity check.
    #[arg(long, global = true)]
    inject_rate: Option<f64>,
    /// Estimate the pressure root of equal diagonal words with this factor.
    #[arg(long, global = true)]
    synthetic_c: Option<f64>,
}

impl Flags {
    fn apply(self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(seed_shape, policy, p, delta, pmax, depth, rng_seed, sigma, scales, pressure_depths, tol, out);
        set!(spectral_p, word_depth, disjoint_depth, export_word_depth);
        if self.inject_rate.is_some() {
            cfg.inject_rate = self.inject_rate;
        }
        if self.synthetic_c.is_some() {
            cfg.synthetic_c = self.synthetic_c;
        }
    }
}

fn load_config(mut flags: Flags) -> anyhow::Result<RunConfig> {
    let mut cfg = match flags.config.take() {
        Some(path) => RunConfig::from_file(&path)?,
        None => RunConfig::default(),
    };
    flags.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(report: &RunReport) {
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!(
        "{}: {} files in {}, report hash {}",
        report.command,
        report.files.len(),
        report.config.out.display(),
        report.report_hash
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(cli.flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Chip => commands::chip(&cfg).map(Some),
        Command::Dim => commands::dim(&cfg).map(Some),
        Command::Verify => commands::verify(&cfg).map(Some),
        Command::Export => commands::export(&cfg).map(Some),
        Command::Report => commands::summary(&cfg),
    };
    match outcome {
        Ok(Some(report)) => {
            print_report(&report);
            let failed: Vec<_> = report.failures().collect();
            if failed.is_empty() {
                return ExitCode::SUCCESS;
            }
            eprintln!("{} check(s) failed:", failed.len());
            for (i, c) in failed.iter().enumerate() {
                eprintln!("  {}. {}: {}", i + 1, c.name, c.detail);
            }
            ExitCode::from(1)
        }
        Ok(None) => {
            eprintln!("config error: no reports found in {}", cfg.out.display());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
