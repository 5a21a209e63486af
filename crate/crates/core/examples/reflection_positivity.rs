//! tr(A theta(A)) for random operators supported on one half of the
//! lattice, with the antilinear reflection theta.

use std::sync::Arc;

use staggered_njl::fock::FockBasis;
use staggered_njl::lattice::LatticeConfig;
use staggered_njl::symmetry::{reflection_positivity_check, Half, ReflectionMap};

fn main() -> staggered_njl::Result<()> {
    let cfg = LatticeConfig::new(2, 1)?;
    let basis = Arc::new(FockBasis::full(cfg)?);
    let map = ReflectionMap::standard(cfg);
    println!("minus half: {:?}", map.sites_in(Half::Minus));
    let report = reflection_positivity_check(&basis, &map, 100, 42, 1e-10)?;
    println!("even operators: min trace {:.3e}, max |imag| {:.1e}", report.min_even_trace, report.max_imag);
    let odd_min = report.odd.iter().map(|s| s.trace_re).fold(f64::INFINITY, f64::min);
    println!("odd operators (no positivity expected): min trace {odd_min:.3e}");
    println!("Cauchy-Schwarz excess {:.1e}; passed = {}", report.max_cauchy_schwarz_excess, report.passed);
    Ok(())
}
