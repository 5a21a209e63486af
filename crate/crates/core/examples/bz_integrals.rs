//! Brillouin-zone integrals by refined midpoint quadrature, and the
//! coupling region where the long-range-order bound stays positive.

use staggered_njl::continuum::{bz_constants, bz_ladder, theorem_region, IntegralKind, QuadratureSpec};

fn main() -> staggered_njl::Result<()> {
    let spec = QuadratureSpec::default();
    for (kind, nu) in [(IntegralKind::I, 3), (IntegralKind::J, 3), (IntegralKind::J, 2), (IntegralKind::I, 2)] {
        let est = bz_ladder(kind, nu, &spec)?;
        let ladder: Vec<String> = est.ladder.iter().map(|(m, v)| format!("{m}:{v:.6}")).collect();
        println!(
            "{kind:?}_{nu}: {} -> {:.8} +/- {:.1e} (ratio {:.2}, converged {})",
            ladder.join(" "),
            est.value,
            est.error,
            est.ratio,
            est.converged
        );
    }
    let ints = bz_constants(3, &spec)?;
    for kappa_over_g in [0.0, 0.01, 0.02, 0.03] {
        let gs = theorem_region(kappa_over_g, 1.0, None, 3, &ints)?;
        let ft = theorem_region(kappa_over_g, 1.0, Some(50.0), 3, &ints)?;
        println!(
            "kappa/g = {kappa_over_g:.2}: ground-state bound {:+.5}, beta g = 50 bound {:+.5} (threshold {:.5})",
            gs.lower_bound, ft.lower_bound, gs.threshold
        );
    }
    Ok(())
}
