//! Ground state of the half-filled 4x4 lattice, beyond the dense limit,
//! with sparse Lanczos. A single Krylov space sees each degenerate level
//! once, so at kappa = 0 the second value is the first excitation.

use std::sync::Arc;

use staggered_njl::fock::FockBasis;
use staggered_njl::hamiltonian::{build_hamiltonian, ModelParams};
use staggered_njl::lattice::LatticeConfig;
use staggered_njl::spectra::lanczos_lowest;

fn main() -> staggered_njl::Result<()> {
    let cfg = LatticeConfig::new(2, 2)?;
    let basis = Arc::new(FockBasis::half_filling(cfg)?);
    println!("half-filling dimension {}", basis.dim());
    for kappa in [0.0, 0.2] {
        let h = build_hamiltonian(&basis, &ModelParams::new(kappa, 0.0, 1.0, 1.0)?)?;
        let r = lanczos_lowest(&h, 2, 300, 1e-9, 7)?;
        println!(
            "kappa = {kappa}: lowest {:?} after {} iterations (residuals {:?})",
            r.eigenvalues, r.iterations, r.residuals
        );
    }
    Ok(())
}
