use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use staggered_njl::scan::{run_scan, write_records, Format, Overrides, ScanConfig, Suite};

/// Parameter scans and verification suites for the staggered-fermion
/// lattice NJL model.
#[derive(Parser, Debug)]
#[command(name = "njl-lab", version)]
struct Args {
    /// TOML scan configuration; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long, value_parser = ["identities", "bounds", "continuum", "all"])]
    suite: Option<String>,

    #[arg(long)]
    nu: Option<usize>,

    /// Half side length.
    #[arg(long = "L", allow_negative_numbers = true)]
    half_length: Option<i32>,

    /// Comma-separated values replace the config grid.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    g: Option<Vec<f64>>,

    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    kappa: Option<Vec<f64>>,

    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    beta: Option<Vec<f64>>,

    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    mass: Option<Vec<f64>>,

    #[arg(long)]
    seed: Option<u64>,

    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_parser = ["csv", "jsonl"])]
    format: Option<String>,

    /// Relative tolerance for the inequality checks.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn run(args: Args) -> staggered_njl::Result<bool> {
    let mut config = match &args.config {
        Some(p) => ScanConfig::load(p)?,
        None => ScanConfig::default(),
    };
    let overrides = Overrides {
        suite: args.suite.as_deref().map(str::parse::<Suite>).transpose()?,
        nu: args.nu,
        half_length: args.half_length,
        g: args.g,
        kappa: args.kappa,
        beta: args.beta,
        mass: args.mass,
        seed: args.seed,
        out: args.out,
        format: args.format.as_deref().map(str::parse::<Format>).transpose()?,
        tolerance: args.tolerance,
    };
    config.apply(&overrides)?;
    let outcome = run_scan(&config)?;
    write_records(&outcome.records, config.output.format, config.output.path.as_deref())?;
    for r in &outcome.records {
        for e in &r.errors {
            eprintln!("nu={} L={} {:?}: {e}", r.nu, r.half_length, r.params);
        }
        for c in r.checks.iter().filter(|c| !c.passed) {
            eprintln!("FAILED nu={} L={} {:?}: {} (lhs {}, rhs {})", r.nu, r.half_length, r.params, c.name, c.lhs, c.rhs);
        }
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("njl-lab: {e}");
            ExitCode::from(2)
        }
    }
}
