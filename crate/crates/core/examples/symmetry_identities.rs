//! Conjugation identities of the particle-hole, sublattice, gauge and
//! boundary unitaries, checked as matrix identities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use staggered_njl::hamiltonian::{FieldH, ModelParams};
use staggered_njl::lattice::LatticeConfig;
use staggered_njl::symmetry::verify_identities;

fn main() -> staggered_njl::Result<()> {
    let nu: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let cfg = LatticeConfig::new(nu, 1)?;
    let params = ModelParams::new(0.8, 0.3, 1.2, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let field = FieldH::random(&cfg, 0.5, &mut rng);
    let checks = verify_identities(cfg, &params, &field, 1e-10)?;
    for c in &checks {
        println!("{:<6} {:>10.2e}  {}", if c.passed { "ok" } else { "FAIL" }, c.deviation, c.name);
    }
    println!("{} of {} identities hold", checks.iter().filter(|c| c.passed).count(), checks.len());
    Ok(())
}
