//! A small scan through the library API, written as CSV to standard output.

use staggered_njl::scan::{emit, run_scan, Format, ScanConfig, Suite};

fn main() -> staggered_njl::Result<()> {
    let mut config = ScanConfig::from_toml(include_str!("scan.toml"))?;
    config.suite = Suite::Bounds;
    let outcome = run_scan(&config)?;
    eprintln!("{} points, all checks passed: {}", outcome.records.len(), outcome.passed);
    emit(&outcome.records, Format::Csv, std::io::stdout().lock())
}
