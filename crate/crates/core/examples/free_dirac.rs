//! The free three-dimensional staggered Hamiltonian in momentum space: its
//! one-particle spectrum, Dirac spinor assembly and chiral selection rule.

use staggered_njl::continuum::{chiral_selection_check, compare_with_closed_form, dirac_form_scan, sgn_selection_rule};
use staggered_njl::lattice::LatticeConfig;

fn main() -> staggered_njl::Result<()> {
    let cfg = LatticeConfig::new(3, 2)?;
    let (kappa, mass) = (0.8, 0.25);
    let spec = compare_with_closed_form(&cfg, kappa, mass)?;
    println!(
        "{} levels ({} positive, {} negative), max deviation from closed form {:.1e}",
        spec.eigenvalues.len(),
        spec.positive,
        spec.negative,
        spec.max_deviation
    );
    for r in dirac_form_scan(&cfg, kappa, 0.0)? {
        println!(
            "k = pi {:?}/{}: energies {:?}, chirality {:?}",
            r.numerators,
            r.denominator,
            r.up_energies.iter().map(|e| (e * 1e6).round() / 1e6).collect::<Vec<_>>(),
            r.chirality.unwrap_or_default().iter().map(|c| c.round()).collect::<Vec<_>>()
        );
    }
    let small = LatticeConfig::new(3, 1)?;
    for m in [0.0, 0.5] {
        let c = chiral_selection_check(&small, kappa, m, 3.0, 1e-10)?;
        println!("m = {m}: largest opposite-signature correlator {:.2e}", c.max_opposite);
    }
    let sgn = sgn_selection_rule();
    println!("sgn rule: {} conserving tuples, {} violations", sgn.conserving, sgn.violations);
    Ok(())
}
