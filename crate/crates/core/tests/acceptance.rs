//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
//! if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use staggered_njl::bounds::{
    gaussian_domination_check, lro_parameter, mode_reports, mode_table, sum_rule_check, BOUND_REL_TOL,
};
use staggered_njl::continuum::{
    bz_constants, bz_integral, bz_ladder, chiral_selection_check, compare_with_closed_form, dirac_form_scan,
    gamma_identities, sgn_selection_rule, theorem_region, IntegralKind, QuadratureSpec,
};
use staggered_njl::fock::FockBasis;
use staggered_njl::hamiltonian::{build_hamiltonian, build_order_parameter, FieldH, ModelParams};
use staggered_njl::lattice::LatticeConfig;
use staggered_njl::spectra::{diagonalize, ground_degeneracy, ground_expectation, ThermalState};
use staggered_njl::symmetry::{reflection_positivity_check, verify_algebra, verify_identities, ReflectionMap};
use staggered_njl::Error;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lattice(nu: usize, l: i32) -> LatticeConfig {
    LatticeConfig::new(nu, l).unwrap()
}

fn full(nu: usize, l: i32) -> Arc<FockBasis> {
    Arc::new(FockBasis::full(lattice(nu, l)).unwrap())
}

/// Ten seeded `(g, kappa, beta, m)` draws.
fn parameter_draws() -> Vec<ModelParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    (0..10)
        .map(|_| {
            let g = rng.random_range(0.2..2.0);
            let kappa = rng.random_range(-1.0..1.0);
            let beta = rng.random_range(0.1..5.0);
            let mass = rng.random_range(-1.0..1.0);
            ModelParams::new(kappa, mass, g, beta).unwrap()
        })
        .collect()
}

fn operator_algebra() -> Outcome {
    let mut worst: f64 = 0.0;
    for nu in [2, 3] {
        for c in verify_algebra(lattice(nu, 1), 1e-12).map_err(|e| e.to_string())? {
            ensure(c.passed, || format!("nu={nu}: {} deviates by {:e}", c.name, c.deviation))?;
            worst = worst.max(c.deviation);
        }
    }
    Ok(format!("max deviation {worst:e}"))
}

fn symmetry_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for nu in [2, 3] {
        let cfg = lattice(nu, 1);
        let params = ModelParams::new(0.73, 0.41, 1.3, 1.0).unwrap();
        let field = FieldH::random(&cfg, 0.6, &mut rng);
        let checks = verify_identities(cfg, &params, &field, 1e-10).map_err(|e| e.to_string())?;
        if nu == 3 {
            ensure(checks.iter().any(|c| c.name.contains("U_free")), || "no U_free check at nu=3".into())?;
        }
        for c in checks {
            ensure(c.passed, || format!("nu={nu}: {} deviates by {:e}", c.name, c.deviation))?;
            worst = worst.max(c.deviation);
            count += 1;
        }
    }
    Ok(format!("{count} identities, max deviation {worst:e}"))
}

fn reflection_positivity() -> Outcome {
    let b = full(2, 1);
    let r = reflection_positivity_check(&b, &ReflectionMap::standard(*b.lattice()), 200, 3, 1e-10)
        .map_err(|e| e.to_string())?;
    ensure(r.even.len() == 200, || format!("{} samples", r.even.len()))?;
    ensure(r.even.iter().all(|s| s.trace_re >= -1e-10), || format!("min trace {:e}", r.min_even_trace))?;
    Ok(format!("200 even operators, min tr(A theta(A)) = {:e}", r.min_even_trace))
}

fn gaussian_domination() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_eq: f64 = 0.0;
    let mut count = 0;
    for nu in [2, 3] {
        let b = full(nu, 1);
        let cfg = *b.lattice();
        for p in parameter_draws() {
            let eq = gaussian_domination_check(&b, &p, &FieldH::zero(&cfg)).map_err(|e| e.to_string())?;
            let rel = (eq.lhs - eq.rhs).abs() / eq.rhs;
            ensure(rel <= 1e-10, || format!("h=0 mismatch {rel:e} at {p:?}"))?;
            worst_eq = worst_eq.max(rel);
            for k in 0..10 {
                let f = FieldH::random(&cfg, 0.1 * (k + 1) as f64, &mut rng);
                let r = gaussian_domination_check(&b, &p, &f).map_err(|e| e.to_string())?;
                ensure(r.satisfied, || format!("nu={nu} {p:?}: Z(h) = {} > Z(0) = {}", r.lhs, r.rhs))?;
                worst_ratio = worst_ratio.max(r.lhs / r.rhs);
                count += 1;
            }
        }
    }
    Ok(format!("{count} fields, max Z(h)/Z(0) = {worst_ratio:.12}, h=0 deviation {worst_eq:e}"))
}

fn sum_rule() -> Outcome {
    let mut worst: f64 = 0.0;
    for nu in [2, 3] {
        let b = full(nu, 1);
        let n = b.num_sites() as f64;
        for p in parameter_draws() {
            let h = build_hamiltonian(&b, &p).unwrap();
            let dec = diagonalize(&h).unwrap();
            let st = ThermalState::new(&dec, p.beta).unwrap();
            let r = sum_rule_check(&st).map_err(|e| e.to_string())?;
            let dev = (r.lhs - n / 2.0).abs();
            ensure(dev <= 1e-9, || format!("nu={nu} {p:?}: sum {} vs {}", r.lhs, n / 2.0))?;
            worst = worst.max(dev);
        }
    }
    Ok(format!("20 states, max deviation {worst:e}"))
}

fn infrared_and_coth() -> Outcome {
    let mut checked = 0;
    let mut min_slack = f64::INFINITY;
    for nu in [2, 3] {
        let b = full(nu, 1);
        let cfg = *b.lattice();
        for p in parameter_draws() {
            let p = p.with_mass(0.0);
            let h = build_hamiltonian(&b, &p).unwrap();
            let dec = diagonalize(&h).unwrap();
            let st = ThermalState::new(&dec, p.beta).unwrap();
            let table = mode_table(&st, &h).map_err(|e| e.to_string())?;
            let cap = 8.0 * p.kappa.abs() * nu as f64;
            for m in &table {
                let c = m.double_commutator;
                ensure(c >= -1e-10 && c <= cap * (1.0 + BOUND_REL_TOL), || format!("C_p = {c} outside [0, {cap}]"))?;
            }
            for r in mode_reports(&table, &cfg, &p) {
                ensure(r.satisfied, || format!("nu={nu} {p:?}: {} ({} > {})", r.name, r.lhs, r.rhs))?;
                if r.name.starts_with("infrared") || r.name.starts_with("coth") {
                    min_slack = min_slack.min(r.slack);
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} infrared/coth inequalities, min slack {min_slack:e}"))
}

/// Classical enumeration at `kappa = 0`, written against the occupation
/// bits directly.
struct Classical {
    energies: Vec<f64>,
    order: Vec<f64>,
}

fn classical(nu: usize, l: i32, g: f64) -> Classical {
    let side = 2 * l as usize;
    let n = side.pow(nu as u32);
    let coords = |i: usize| -> Vec<usize> { (0..nu).rev().map(|a| (i / side.pow(a as u32)) % side).collect() };
    let index = |c: &[usize]| -> usize { c.iter().fold(0, |acc, &x| acc * side + x) };
    let mut energies = Vec::new();
    let mut order = Vec::new();
    for s in 0..(1u64 << n) {
        let rho = |i: usize| if s >> i & 1 == 1 { 0.5 } else { -0.5 };
        let mut e = 0.0;
        let mut o = 0.0;
        for x in 0..n {
            let c = coords(x);
            for mu in 0..nu {
                let mut y = c.clone();
                y[mu] = (y[mu] + 1) % side;
                e += g * rho(x) * rho(index(&y));
            }
            let parity = if c.iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 };
            o += parity * rho(x);
        }
        energies.push(e);
        order.push(o);
    }
    Classical { energies, order }
}

fn classical_oracle() -> Outcome {
    let g = 1.0;
    let beta = 50.0;
    let b = full(2, 1);
    let n = b.num_sites() as f64;
    let cl = classical(2, 1, g);
    let e0 = cl.energies.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure((e0 + 2.0 * g).abs() < 1e-12, || format!("classical minimum {e0}"))?;

    let p = ModelParams::new(0.0, 0.0, g, beta).unwrap();
    let h = build_hamiltonian(&b, &p).unwrap();
    let dec = diagonalize(&h).unwrap();
    let ground = dec.ground_energy().unwrap();
    ensure((ground - e0).abs() < 1e-10, || format!("ground energy {ground} vs {e0}"))?;
    let deg = ground_degeneracy(&dec, 1e-8).unwrap();
    let cl_deg = cl.energies.iter().filter(|&&e| (e - e0).abs() < 1e-12).count();
    ensure(deg == cl_deg && deg == 2, || format!("degeneracy {deg} vs {cl_deg}"))?;

    let st = ThermalState::new(&dec, beta).unwrap();
    let m = lro_parameter(&st).map_err(|e| e.to_string())?;
    let z: f64 = cl.energies.iter().map(|e| (-beta * (e - e0)).exp()).sum();
    let o2: f64 = cl.energies.iter().zip(&cl.order).map(|(e, o)| (-beta * (e - e0)).exp() * o * o).sum::<f64>() / z;
    let m_oracle = o2.sqrt() / n;
    ensure((m - m_oracle).abs() < 1e-10, || format!("m_LRO {m} vs enumeration {m_oracle}"))?;
    ensure((m - 0.5).abs() < 1e-10, || format!("m_LRO {m} not 1/2"))?;

    let o = build_order_parameter(&b).unwrap();
    let o2_ground = ground_expectation(&dec, &(&*o * &*o), 1e-8).unwrap().re / (n * n);
    ensure((o2_ground - 0.25).abs() < 1e-10, || format!("omega_0(O^2)/|Lambda|^2 = {o2_ground}"))?;

    let table = mode_table(&st, &h).unwrap();
    let cmax = table.iter().map(|m| m.double_commutator.abs()).fold(0.0, f64::max);
    ensure(cmax < 1e-10, || format!("C_p up to {cmax:e}"))?;
    Ok(format!("E0 = {ground}, m_LRO = {m}, omega_0(O^2)/|Lambda|^2 = {o2_ground}, max |C_p| = {cmax:e}"))
}

fn free_dispersion() -> Outcome {
    let mut worst: f64 = 0.0;
    for l in [1, 2] {
        let cfg = lattice(3, l);
        for (kappa, m) in [(1.0, 0.0), (0.7, 0.3), (-0.45, 1.2)] {
            let r = compare_with_closed_form(&cfg, kappa, m).map_err(|e| e.to_string())?;
            ensure(r.passed, || format!("L={l} kappa={kappa} m={m}: deviation {:e}", r.max_deviation))?;
            worst = worst.max(r.max_deviation);
            for d in dirac_form_scan(&cfg, kappa, m).map_err(|e| e.to_string())? {
                ensure(d.passed, || format!("Dirac form fails at {:?}/{}", d.numerators, d.denominator))?;
            }
        }
    }
    for (name, dev) in gamma_identities() {
        ensure(dev == 0.0, || format!("{name} deviates by {dev:e}"))?;
    }
    Ok(format!("max spectral deviation {worst:e}; gamma identities exact"))
}

fn chiral_selection() -> Outcome {
    let sgn = sgn_selection_rule();
    ensure(sgn.passed, || format!("{} violations", sgn.violations))?;
    let cfg = lattice(3, 1);
    let massless = chiral_selection_check(&cfg, 0.8, 0.0, 2.0, 1e-10).map_err(|e| e.to_string())?;
    ensure(massless.vanishes, || format!("m=0 opposite-sign max {:e}", massless.max_opposite))?;
    let massive = chiral_selection_check(&cfg, 0.8, 0.5, 2.0, 1e-10).map_err(|e| e.to_string())?;
    ensure(!massive.vanishes, || "m=0.5 shows no violation".into())?;
    Ok(format!(
        "{} conserving tuples of {}; m=0 max {:e}, m=0.5 max {:.6}",
        sgn.conserving, sgn.tuples, massless.max_opposite, massive.max_opposite
    ))
}

/// `I_3 = (2/3) W_3` with Watson's simple-cubic integral
/// `W_3 = sqrt(6) / (32 pi^3) Gamma(1/24) Gamma(5/24) Gamma(7/24) Gamma(11/24)`.
fn i3_closed_form() -> f64 {
    use statrs::function::gamma::gamma;
    let pi = std::f64::consts::PI;
    2.0 / 3.0 * 6f64.sqrt() / (32.0 * pi.powi(3))
        * gamma(1.0 / 24.0)
        * gamma(5.0 / 24.0)
        * gamma(7.0 / 24.0)
        * gamma(11.0 / 24.0)
}

fn bz_integrals() -> Outcome {
    let spec = QuadratureSpec::default();
    let oracle = i3_closed_form();
    let i3 = bz_integral(IntegralKind::I, 3, &spec).map_err(|e| e.to_string())?;
    ensure((i3.value - oracle).abs() <= 1e-3, || format!("I_3 = {} vs {oracle}", i3.value))?;
    let mut js = Vec::new();
    for nu in [2, 3] {
        let j = bz_integral(IntegralKind::J, nu, &spec).map_err(|e| e.to_string())?;
        let diffs: Vec<f64> = j.ladder.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
        ensure(diffs.windows(2).all(|d| d[1] < d[0]), || format!("J_{nu} increments {diffs:?}"))?;
        js.push(j.value);
    }
    let i2 = bz_ladder(IntegralKind::I, 2, &spec).map_err(|e| e.to_string())?;
    ensure(!i2.converged, || "I_2 reported converged".into())?;
    ensure(matches!(bz_integral(IntegralKind::I, 2, &spec), Err(Error::Divergent { .. })), || "I_2 not refused".into())?;
    Ok(format!(
        "I_3 = {:.9} (closed form {oracle:.9}), J_2 = {:.9}, J_3 = {:.9}, I_2 ratio {:.3}",
        i3.value, js[0], js[1], i2.ratio
    ))
}

fn theorem_certificate() -> Outcome {
    let ints3 = bz_constants(3, &QuadratureSpec::default()).map_err(|e| e.to_string())?;
    let gs = theorem_region(0.0, 1.0, None, 3, &ints3).map_err(|e| e.to_string())?;
    ensure(gs.lower_bound == 0.25, || format!("ground-state bound {}", gs.lower_bound))?;
    let ints2 = bz_constants(2, &QuadratureSpec::default()).map_err(|e| e.to_string())?;
    ensure(ints2.i_nu.is_none(), || "I_2 reported finite".into())?;
    let refused = theorem_region(0.01, 1.0, Some(10.0), 2, &ints2);
    ensure(matches!(refused, Err(Error::FiniteTemperatureUnavailable { nu: 2 })), || format!("{refused:?}"))?;
    Ok(format!("kappa=0 bound = {}, nu=2 finite beta refused, threshold nu=3 = {:.6}", gs.lower_bound, gs.threshold))
}

fn physics_trend() -> Outcome {
    let b = full(2, 1);
    let beta = 20.0;
    let mut values = Vec::new();
    for i in 0..=10 {
        let kappa = i as f64 / 10.0;
        let p = ModelParams::new(kappa, 0.0, 1.0, beta).unwrap();
        let dec = diagonalize(&build_hamiltonian(&b, &p).unwrap()).unwrap();
        let st = ThermalState::new(&dec, beta).unwrap();
        values.push(lro_parameter(&st).map_err(|e| e.to_string())?);
    }
    ensure(values.windows(2).all(|w| w[1] <= w[0] + 1e-12), || format!("not monotone: {values:?}"))?;
    ensure(values[10] < values[0], || "no decrease".into())?;
    Ok(format!("m_LRO from {:.6} (kappa=0) to {:.6} (kappa=g)", values[0], values[10]))
}

struct Criterion {
    id: usize,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: 1, title: "operator algebra", budget: secs(1), run: operator_algebra },
        Criterion { id: 2, title: "symmetry identities", budget: secs(30), run: symmetry_identities },
        Criterion { id: 3, title: "reflection positivity", budget: secs(30), run: reflection_positivity },
        Criterion { id: 4, title: "Gaussian domination", budget: secs(300), run: gaussian_domination },
        Criterion { id: 5, title: "sum rule", budget: None, run: sum_rule },
        Criterion { id: 6, title: "infrared, double-commutator and coth bounds", budget: None, run: infrared_and_coth },
        Criterion { id: 7, title: "classical kappa=0 oracle", budget: None, run: classical_oracle },
        Criterion { id: 8, title: "free dispersion and gamma matrices", budget: None, run: free_dispersion },
        Criterion { id: 9, title: "sgn and chiral selection rules", budget: None, run: chiral_selection },
        Criterion { id: 10, title: "Brillouin-zone integrals", budget: secs(120), run: bz_integrals },
        Criterion { id: 11, title: "theorem-region certificate", budget: None, run: theorem_certificate },
        Criterion { id: 12, title: "m_LRO trend in kappa/g", budget: None, run: physics_trend },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let result = match (result, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {:.2} s, budget {} s", elapsed.as_secs_f64(), b.as_secs())),
            (r, _) => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d.clone()),
            Err(d) => {
                failed += 1;
                ("FAIL", d.clone())
            }
        };
        println!("{tag} criterion {:>2} {} [{:.2} s]: {detail}", c.id, c.title, elapsed.as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
