//! Occupation-number basis, Jordan-Wigner ladder operators and Majoranas on
//! the smallest two-dimensional lattice.

use std::sync::Arc;

use num_complex::Complex64;
use staggered_njl::fock::{annihilator, charge_density, creator, majorana, FermionPoly, FockBasis, MajoranaKind};
use staggered_njl::lattice::LatticeConfig;
use staggered_njl::operator::Operator;

fn main() -> staggered_njl::Result<()> {
    let cfg = LatticeConfig::new(2, 1)?;
    let basis = Arc::new(FockBasis::full(cfg)?);
    println!("{} sites, Fock dimension {}", cfg.num_sites(), basis.dim());

    let id = Operator::identity(&basis);
    for x in 0..cfg.num_sites() {
        let a = annihilator(&basis, x)?;
        let ad = creator(&basis, x)?;
        let dev = a.anticommutator(&ad)?.max_abs_diff(&id)?;
        let rho = charge_density(&basis, x)?;
        let rho2 = (&*rho * &*rho).max_abs_diff(&id.scale(Complex64::new(0.25, 0.0)))?;
        let xi = majorana(&basis, x, MajoranaKind::Xi)?;
        let eta = majorana(&basis, x, MajoranaKind::Eta)?;
        let mixed = xi.anticommutator(&eta)?.max_abs();
        println!("site {x} {:?}: |{{psi, psi^dag}} - 1| = {dev:.1e}, |rho^2 - 1/4| = {rho2:.1e}, |{{xi, eta}}| = {mixed:.1e}", cfg.site(x).coords);
    }

    let hop = FermionPoly::creator(0) * FermionPoly::annihilator(3);
    println!("polynomial {hop} has {} nonzeros on the full basis", hop.to_operator(&basis, "hop")?.to_dense().iter().filter(|z| z.norm() > 0.0).count());

    let half = Arc::new(FockBasis::half_filling(cfg)?);
    println!("half-filling sector: dimension {}", half.dim());
    Ok(())
}
