//! Gibbs-state observables by exact diagonalization: free energy, energy
//! and the long-range-order parameter across temperatures and hoppings.

use std::sync::Arc;

use staggered_njl::bounds::lro_parameter;
use staggered_njl::fock::FockBasis;
use staggered_njl::hamiltonian::{build_hamiltonian, ModelParams};
use staggered_njl::lattice::LatticeConfig;
use staggered_njl::spectra::{diagonalize, ThermalState};

fn main() -> staggered_njl::Result<()> {
    let cfg = LatticeConfig::new(2, 1)?;
    let basis = Arc::new(FockBasis::full(cfg)?);
    println!("{:>6} {:>6} {:>12} {:>12} {:>10}", "kappa", "beta", "log Z", "energy", "m_LRO");
    for kappa in [0.0, 0.25, 0.5, 1.0] {
        let h = build_hamiltonian(&basis, &ModelParams::new(kappa, 0.0, 1.0, 1.0)?)?;
        let dec = diagonalize(&h)?;
        for beta in [0.5, 2.0, 10.0] {
            let st = ThermalState::new(&dec, beta)?;
            println!(
                "{kappa:>6.2} {beta:>6.1} {:>12.6} {:>12.6} {:>10.6}",
                st.log_partition_function(),
                st.energy(),
                lro_parameter(&st)?
            );
        }
    }
    Ok(())
}
