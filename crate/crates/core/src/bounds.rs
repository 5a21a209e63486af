//! Density Fourier modes and numerical checks of the rigorous inequalities:
//! Gaussian domination, the infrared bound, the double-commutator bound, the
//! coth bound, the sum rule and the long-range-order chain.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::hamiltonian::{build_deformed, build_hamiltonian, build_order_parameter, FieldH, ModelParams};
use crate::lattice::{dispersion, GridKind, LatticeConfig, Momentum};
use crate::operator::Operator;
use crate::spectra::{common_shift_traces, diagonalize, ground_expectation, ThermalState};

/// Relative tolerance shared by all inequality checks.
pub const BOUND_REL_TOL: f64 = 1e-8;

/// Absolute tolerance for the sum rule.
pub const SUM_RULE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckKind {
    /// `lhs <= rhs + tol * max(1, |rhs|)`.
    UpperBound,
    /// `|lhs - rhs| <= tol`.
    Equality,
}

/// Outcome of one inequality or identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub kind: CheckKind,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs` for bounds, `-|rhs - lhs|` for equalities.
    pub slack: f64,
    pub tolerance: f64,
    pub satisfied: bool,
    pub parameters: Vec<(String, f64)>,
}

impl BoundReport {
    pub fn upper(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let satisfied = lhs <= rhs + tol * rhs.abs().max(1.0);
        BoundReport {
            name: name.into(),
            kind: CheckKind::UpperBound,
            lhs,
            rhs,
            slack: rhs - lhs,
            tolerance: tol,
            satisfied,
            parameters: Vec::new(),
        }
    }

    pub fn equality(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let diff = (lhs - rhs).abs();
        BoundReport {
            name: name.into(),
            kind: CheckKind::Equality,
            lhs,
            rhs,
            slack: -diff,
            tolerance: tol,
            satisfied: diff <= tol,
            parameters: Vec::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.parameters.push((key.to_string(), value));
        self
    }

    fn with_params(mut self, params: &ModelParams) -> Self {
        for (k, v) in [("kappa", params.kappa), ("mass", params.mass), ("g", params.g), ("beta", params.beta)] {
            self.parameters.push((k.to_string(), v));
        }
        self
    }
}

fn check_density_momentum(cfg: &LatticeConfig, p: &Momentum) -> Result<()> {
    cfg.density_index(p).map(|_| ())
}

/// Diagonal entries of `rho~_p = |Lambda|^{-1/2} sum_x rho(x) exp(i p.x)`.
fn mode_diagonal(basis: &FockBasis, p: &Momentum) -> Vec<Complex64> {
    let cfg = basis.lattice();
    let phases: Vec<Complex64> = cfg.sites().map(|x| Complex64::from_polar(1.0, p.dot(&x))).collect();
    let norm = (cfg.num_sites() as f64).sqrt();
    basis
        .states()
        .iter()
        .map(|&s| {
            phases
                .iter()
                .enumerate()
                .map(|(x, ph)| ph * if s >> x & 1 == 1 { 0.5 } else { -0.5 })
                .sum::<Complex64>()
                / norm
        })
        .collect()
}

/// `rho~_p` on `basis`; diagonal in the occupation basis.
pub fn rho_mode(basis: &Arc<FockBasis>, p: &Momentum) -> Result<Operator> {
    check_density_momentum(basis.lattice(), p)?;
    Ok(Operator::from_diagonal(basis, mode_diagonal(basis, p), &format!("rho~{p}")))
}

/// `E_{p+Q}`.
pub fn shifted_dispersion(p: &Momentum) -> f64 {
    dispersion(&p.plus_q())
}

/// `[rho~_p, [H, rho~_{-p}]]`, assembled entrywise from the diagonal modes.
pub fn double_commutator_operator(h: &Operator, p: &Momentum) -> Result<Operator> {
    let basis = h.basis().clone();
    check_density_momentum(basis.lattice(), p)?;
    let dp = mode_diagonal(&basis, p);
    let dm = mode_diagonal(&basis, &p.neg());
    let mut triplets = Vec::new();
    let mut push = |i: usize, j: usize, v: Complex64| {
        let w = v * (dm[j] - dm[i]) * (dp[i] - dp[j]);
        if w != Complex64::new(0.0, 0.0) {
            triplets.push((i, j, w));
        }
    };
    match h.storage() {
        crate::operator::Storage::Dense(m) => {
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    push(i, j, m[(i, j)]);
                }
            }
        }
        crate::operator::Storage::Sparse(s) => {
            for (i, j, v) in s.iter() {
                push(i, j, v);
            }
        }
    }
    Ok(Operator::from_triplets(basis.clone(), basis, triplets, format!("C{p}")))
}

/// `C_p = <[rho~_p, [H(0), rho~_{-p}]]>`, real part. `h` must be the
/// operator the state was built from.
pub fn double_commutator(state: &ThermalState<'_>, h: &Operator, p: &Momentum) -> Result<f64> {
    Ok(state.expectation(&double_commutator_operator(h, p)?)?.re)
}

/// Per-momentum correlation data in a Gibbs state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeData {
    pub momentum: Vec<f64>,
    pub numerators: Vec<i32>,
    pub is_q: bool,
    /// `E_{p+Q}`.
    pub e_shifted: f64,
    /// `<rho~_p rho~_{-p} + rho~_{-p} rho~_p>`.
    pub symmetrized: f64,
    /// `(rho~_p, rho~_{-p})`.
    pub duhamel: f64,
    /// `C_p`.
    pub double_commutator: f64,
}

/// Symmetrized, Duhamel and double-commutator data for every density
/// momentum.
pub fn mode_table(state: &ThermalState<'_>, h: &Operator) -> Result<Vec<ModeData>> {
    let basis = state.basis().clone();
    basis
        .lattice()
        .density_momenta()
        .into_iter()
        .map(|p| {
            let a = rho_mode(&basis, &p)?;
            let b = rho_mode(&basis, &p.neg())?;
            let sym = state.expectation(&(&(&a * &b) + &(&b * &a)))?.re;
            let duh = state.duhamel(&a, &b)?.re;
            let c = double_commutator(state, h, &p)?;
            Ok(ModeData {
                momentum: p.components(),
                numerators: p.numerators().to_vec(),
                is_q: p.is_q(),
                e_shifted: shifted_dispersion(&p),
                symmetrized: sym,
                duhamel: duh,
                double_commutator: c,
            })
        })
        .collect()
}

fn momentum_from(cfg: &LatticeConfig, m: &ModeData) -> Momentum {
    Momentum::from_numerators(m.numerators.clone(), cfg.half_length(), GridKind::PeriodicDensity)
}

/// `m_LRO = |Lambda|^{-1} sqrt(<O^2>)`, together with the same quantity
/// computed from `<rho~_Q rho~_Q>`.
pub fn lro_parameter_pair(state: &ThermalState<'_>) -> Result<(f64, f64)> {
    let basis = state.basis();
    let n = basis.num_sites() as f64;
    let o = build_order_parameter(basis)?;
    let o2 = state.expectation(&(&*o * &*o))?.re;
    let rq = rho_mode(basis, &basis.lattice().q_vector())?;
    let q2 = state.expectation(&(&rq * &rq))?.re;
    let root = |x: f64| -> Result<f64> {
        if x < -1e-12 {
            return Err(Error::NegativeRadicand(x));
        }
        Ok(x.max(0.0).sqrt())
    };
    Ok((root(o2)? / n, root(q2 / n)?))
}

/// `m_LRO`; errors if the two evaluations disagree beyond `1e-12`.
pub fn lro_parameter(state: &ThermalState<'_>) -> Result<f64> {
    let (a, b) = lro_parameter_pair(state)?;
    if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!("order-parameter and Q-mode evaluations disagree: {a} vs {b}")));
    }
    Ok(a)
}

/// `sum_p <rho~_p rho~_{-p} + rho~_{-p} rho~_p> = |Lambda| / 2`.
pub fn sum_rule_check(state: &ThermalState<'_>) -> Result<BoundReport> {
    let basis = state.basis().clone();
    let mut total = 0.0;
    for p in basis.lattice().density_momenta() {
        let a = rho_mode(&basis, &p)?;
        let b = rho_mode(&basis, &p.neg())?;
        total += state.expectation(&(&(&a * &b) + &(&b * &a)))?.re;
    }
    Ok(BoundReport::equality("sum rule", total, basis.num_sites() as f64 / 2.0, SUM_RULE_TOL)
        .with_param("beta", state.beta()))
}

/// `tr exp(-beta H(m, h)) <= tr exp(-beta H(m, 0))`, both traces taken
/// relative to the lowest eigenvalue of either Hamiltonian.
pub fn gaussian_domination_check(basis: &Arc<FockBasis>, params: &ModelParams, field: &FieldH) -> Result<BoundReport> {
    let hh = build_deformed(basis, params, field)?;
    let h0 = build_hamiltonian(basis, params)?;
    let (zh, z0) = common_shift_traces(&diagonalize(&hh)?, &diagonalize(&h0)?, params.beta)?;
    Ok(BoundReport::upper("Gaussian domination", zh, z0, BOUND_REL_TOL).with_params(params))
}

fn reject_q(p: &Momentum) -> Result<()> {
    if p.is_q() {
        return Err(Error::InvalidParameter("the bound is singular at p = Q".into()));
    }
    Ok(())
}

fn require_coupling(params: &ModelParams) -> Result<()> {
    if !(params.g > 0.0) {
        return Err(Error::InvalidParameter("bound needs g > 0".into()));
    }
    Ok(())
}

/// `(rho~_p, rho~_{-p}) <= 1 / (2 beta g E_{p+Q})` for `p != Q`.
pub fn infrared_check(state: &ThermalState<'_>, params: &ModelParams, p: &Momentum) -> Result<BoundReport> {
    reject_q(p)?;
    require_coupling(params)?;
    let basis = state.basis().clone();
    let a = rho_mode(&basis, p)?;
    let b = rho_mode(&basis, &p.neg())?;
    let lhs = state.duhamel(&a, &b)?.re;
    Ok(infrared_report(lhs, state.beta(), params, shifted_dispersion(p)))
}

fn infrared_report(duhamel: f64, beta: f64, params: &ModelParams, e: f64) -> BoundReport {
    BoundReport::upper("infrared bound", duhamel, 1.0 / (2.0 * beta * params.g * e), BOUND_REL_TOL).with_params(params)
}

/// The coth bound and its weaker `1/x` form:
/// `<sym> <= sqrt(C/(2gE)) coth(sqrt(C beta^2 g E / 2))`
/// `<sym> <= sqrt(C/(2gE)) + 1/(beta g E)`.
/// For `C = 0` the strong form is its limit `1/(beta g E)`.
pub fn dls_bounds(c_p: f64, beta: f64, g: f64, e: f64) -> (f64, f64) {
    let c = c_p.max(0.0);
    let amp = (c / (2.0 * g * e)).sqrt();
    let x = (c * beta * beta * g * e / 2.0).sqrt();
    let strong = if x < 1e-8 { 1.0 / (beta * g * e) + amp * x / 3.0 } else { amp / x.tanh() };
    let weak = amp + 1.0 / (beta * g * e);
    (strong, weak)
}

pub fn dls_check(
    state: &ThermalState<'_>,
    h: &Operator,
    params: &ModelParams,
    p: &Momentum,
) -> Result<(BoundReport, BoundReport)> {
    reject_q(p)?;
    require_coupling(params)?;
    let basis = state.basis().clone();
    let a = rho_mode(&basis, p)?;
    let b = rho_mode(&basis, &p.neg())?;
    let sym = state.expectation(&(&(&a * &b) + &(&b * &a)))?.re;
    let c = double_commutator(state, h, p)?;
    Ok(dls_reports(sym, c, state.beta(), params, shifted_dispersion(p)))
}

fn dls_reports(sym: f64, c: f64, beta: f64, params: &ModelParams, e: f64) -> (BoundReport, BoundReport) {
    let (strong, weak) = dls_bounds(c, beta, params.g, e);
    (
        BoundReport::upper("coth bound", sym, strong, BOUND_REL_TOL).with_params(params),
        BoundReport::upper("coth bound, weak form", sym, weak, BOUND_REL_TOL).with_params(params),
    )
}

/// `-C_p <= 0` and `C_p <= 8 |kappa| nu`.
pub fn double_commutator_reports(c: f64, params: &ModelParams, nu: usize) -> (BoundReport, BoundReport) {
    (
        BoundReport::upper("double commutator non-negative", -c, 0.0, 1e-10).with_params(params),
        BoundReport::upper("double commutator upper bound", c, 8.0 * params.kappa.abs() * nu as f64, BOUND_REL_TOL)
            .with_params(params),
    )
}

/// The finite-volume long-range-order chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LroChain {
    /// `|Lambda|^{-1} sum_p <sym_p>`; equals `1/2` by the sum rule.
    pub lhs: f64,
    /// `|Lambda|^{-1} sum_{p != Q} [1/(beta g E_{p+Q}) + sqrt(C_p/(2 g E_{p+Q}))]`.
    pub correction: f64,
    /// `2 <rho~_Q rho~_Q> / |Lambda|`.
    pub q_term: f64,
    /// `(m_LRO)^2 = <O^2> / |Lambda|^2`.
    pub m_lro_squared: f64,
    /// `1/4 - correction / 2`.
    pub lower_bound: f64,
    /// The chain `lhs <= correction + q_term` holds.
    pub chain_holds: bool,
    /// `m_LRO^2 >= lower_bound`.
    pub bound_holds: bool,
    /// `lower_bound > 0`.
    pub certificate_positive: bool,
    pub report: BoundReport,
}

pub fn lro_chain_from_table(table: &[ModeData], n_sites: usize, params: &ModelParams) -> Result<LroChain> {
    require_coupling(params)?;
    let n = n_sites as f64;
    let beta = params.beta;
    let lhs = table.iter().map(|m| m.symmetrized).sum::<f64>() / n;
    let mut correction = 0.0;
    let mut q_term = 0.0;
    for m in table {
        if m.is_q {
            q_term = m.symmetrized / n;
        } else {
            let e = m.e_shifted;
            correction += 1.0 / (beta * params.g * e) + (m.double_commutator.max(0.0) / (2.0 * params.g * e)).sqrt();
        }
    }
    correction /= n;
    let m_lro_squared = q_term / 2.0;
    let lower_bound = 0.25 - correction / 2.0;
    let report = BoundReport::upper("long-range-order chain", lhs, correction + q_term, BOUND_REL_TOL).with_params(params);
    Ok(LroChain {
        lhs,
        correction,
        q_term,
        m_lro_squared,
        lower_bound,
        chain_holds: report.satisfied,
        bound_holds: m_lro_squared >= lower_bound - BOUND_REL_TOL,
        certificate_positive: lower_bound > 0.0,
        report,
    })
}

/// Evaluates both sides of the chain in `state`; `h` is the `m = 0`
/// Hamiltonian the state was built from.
pub fn lro_chain(state: &ThermalState<'_>, h: &Operator, params: &ModelParams) -> Result<LroChain> {
    let table = mode_table(state, h)?;
    lro_chain_from_table(&table, state.basis().num_sites(), params)
}

/// All per-momentum reports (infrared, coth in both forms, double
/// commutator range) from a precomputed table.
pub fn mode_reports(table: &[ModeData], cfg: &LatticeConfig, params: &ModelParams) -> Vec<BoundReport> {
    let mut out = Vec::new();
    for m in table {
        let label = momentum_from(cfg, m).to_string();
        let (lo, hi) = double_commutator_reports(m.double_commutator, params, cfg.nu());
        out.push(lo.with_param_label(&label));
        out.push(hi.with_param_label(&label));
        if m.is_q || params.g <= 0.0 {
            continue;
        }
        out.push(infrared_report(m.duhamel, params.beta, params, m.e_shifted).with_param_label(&label));
        let (s, w) = dls_reports(m.symmetrized, m.double_commutator, params.beta, params, m.e_shifted);
        out.push(s.with_param_label(&label));
        out.push(w.with_param_label(&label));
    }
    out
}

impl BoundReport {
    fn with_param_label(mut self, momentum: &str) -> Self {
        self.name = format!("{} at p = {momentum}", self.name);
        self
    }
}

/// `omega_{0,m}(O) / |Lambda|` at mass `m > 0`, averaging over the ground
/// space within `degeneracy_tol`.
pub fn spontaneous_magnetization(basis: &Arc<FockBasis>, params: &ModelParams, degeneracy_tol: f64) -> Result<f64> {
    if !(params.mass > 0.0) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {}", params.mass)));
    }
    let h = build_hamiltonian(basis, params)?;
    let dec = diagonalize(&h)?;
    let o = build_order_parameter(basis)?;
    Ok(ground_expectation(&dec, &o, degeneracy_tol)?.re / basis.num_sites() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(nu: usize, l: i32) -> Arc<FockBasis> {
        Arc::new(FockBasis::full(LatticeConfig::new(nu, l).unwrap()).unwrap())
    }

    #[test]
    fn mode_at_zero_and_q() {
        let b = full(2, 1);
        let cfg = *b.lattice();
        let n = cfg.num_sites() as f64;
        let zero = Momentum::from_numerators(vec![0, 0], 1, GridKind::PeriodicDensity);
        let r0 = rho_mode(&b, &zero).unwrap();
        let total = crate::fock::total_number(&b);
        let expected = (&*total - &Operator::identity(&b).scale(Complex64::new(n / 2.0, 0.0))).scale(Complex64::new(1.0 / n.sqrt(), 0.0));
        assert!(r0.max_abs_diff(&expected).unwrap() < 1e-14);
        let rq = rho_mode(&b, &cfg.q_vector()).unwrap();
        let o = build_order_parameter(&b).unwrap();
        assert!(rq.scale(Complex64::new(n.sqrt(), 0.0)).max_abs_diff(&o).unwrap() < 1e-14);
        for p in cfg.density_momenta() {
            let a = rho_mode(&b, &p).unwrap();
            assert!(a.adjoint().max_abs_diff(&rho_mode(&b, &p.neg()).unwrap()).unwrap() < 1e-14);
        }
        let off = Momentum::from_numerators(vec![1, 1], 2, GridKind::AntiperiodicFermion);
        assert!(matches!(rho_mode(&b, &off), Err(Error::OffGrid(_))));
    }

    #[test]
    fn dls_zero_commutator_limit() {
        let (strong, weak) = dls_bounds(0.0, 2.0, 1.5, 0.7);
        let expected = 1.0 / (2.0 * 1.5 * 0.7);
        assert!((strong - expected).abs() < 1e-15);
        assert!((weak - expected).abs() < 1e-15);
        let (strong, weak) = dls_bounds(1e-20, 2.0, 1.5, 0.7);
        assert!((strong - expected).abs() < 1e-9);
        assert!(weak >= strong);
    }

    #[test]
    fn classical_limit_has_vanishing_double_commutators() {
        let b = full(2, 1);
        let p = ModelParams::new(0.0, 0.0, 1.0, 3.0).unwrap();
        let h = build_hamiltonian(&b, &p).unwrap();
        let dec = diagonalize(&h).unwrap();
        let st = ThermalState::new(&dec, p.beta).unwrap();
        for m in mode_table(&st, &h).unwrap() {
            assert!(m.double_commutator.abs() < 1e-12);
        }
    }

    #[test]
    fn infrared_rhs_at_zero_momentum() {
        let b = full(2, 1);
        let p = ModelParams::new(0.3, 0.0, 2.0, 1.5).unwrap();
        let h = build_hamiltonian(&b, &p).unwrap();
        let dec = diagonalize(&h).unwrap();
        let st = ThermalState::new(&dec, p.beta).unwrap();
        let zero = Momentum::from_numerators(vec![0, 0], 1, GridKind::PeriodicDensity);
        let r = infrared_check(&st, &p, &zero).unwrap();
        assert!((r.rhs - 1.0 / (4.0 * p.beta * p.g)).abs() < 1e-15);
        assert!(matches!(infrared_check(&st, &p, &b.lattice().q_vector()), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn magnetization_requires_positive_mass() {
        let b = full(2, 1);
        let p = ModelParams::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(spontaneous_magnetization(&b, &p, 1e-8).is_err());
    }

    fn state_for(b: &Arc<FockBasis>, p: &ModelParams) -> (crate::operator::HermitianOperator, crate::spectra::SpectralDecomposition) {
        let h = build_hamiltonian(b, p).unwrap();
        let dec = diagonalize(&h).unwrap();
        (h, dec)
    }

    #[test]
    fn classical_order_parameter_limits() {
        let b = full(2, 1);
        let p = ModelParams::new(0.0, 0.0, 1.0, 40.0).unwrap();
        let (_, dec) = state_for(&b, &p);
        let cold = ThermalState::new(&dec, 40.0).unwrap();
        assert!((lro_parameter(&cold).unwrap() - 0.5).abs() < 1e-10);
        let hot = ThermalState::new(&dec, 1e-14).unwrap();
        assert!((lro_parameter(&hot).unwrap() - 0.25).abs() < 1e-10);
    }

    #[test]
    fn sum_rule_is_parameter_free() {
        for (nu, expected) in [(2usize, 2.0), (3, 4.0)] {
            let b = full(nu, 1);
            let p = ModelParams::new(0.37, 0.2, 1.3, 0.9).unwrap();
            let (_, dec) = state_for(&b, &p);
            let st = ThermalState::new(&dec, p.beta).unwrap();
            let r = sum_rule_check(&st).unwrap();
            assert!(r.satisfied);
            assert!((r.lhs - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_domination_on_random_fields() {
        use rand::SeedableRng;
        let b = full(2, 1);
        let cfg = *b.lattice();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let p = ModelParams::new(0.6, 0.1, 1.0, 1.7).unwrap();
        for _ in 0..5 {
            let f = FieldH::random(&cfg, 0.8, &mut rng);
            assert!(gaussian_domination_check(&b, &p, &f).unwrap().satisfied);
        }
        let eq = gaussian_domination_check(&b, &p, &FieldH::zero(&cfg)).unwrap();
        assert!((eq.lhs - eq.rhs).abs() < 1e-10 * eq.rhs);
    }

    #[test]
    fn mode_bounds_hold_at_zero_mass() {
        let b = full(2, 1);
        let cfg = *b.lattice();
        for (kappa, g, beta) in [(0.5, 1.0, 2.0), (1.2, 0.7, 5.0), (-0.3, 2.0, 0.4)] {
            let p = ModelParams::new(kappa, 0.0, g, beta).unwrap();
            let (h, dec) = state_for(&b, &p);
            let st = ThermalState::new(&dec, beta).unwrap();
            let table = mode_table(&st, &h).unwrap();
            for m in &table {
                assert!(m.double_commutator >= -1e-10 && m.double_commutator <= 8.0 * kappa.abs() * 2.0 + 1e-10);
            }
            assert!(mode_reports(&table, &cfg, &p).iter().all(|r| r.satisfied));
            let chain = lro_chain_from_table(&table, cfg.num_sites(), &p).unwrap();
            assert!(chain.chain_holds && chain.bound_holds);
        }
    }

    #[test]
    fn classical_magnetization_is_neel() {
        let b = full(2, 1);
        let p = ModelParams::new(0.0, 1e-3, 1.0, 1.0).unwrap();
        assert!((spontaneous_magnetization(&b, &p, 1e-8).unwrap() + 0.5).abs() < 1e-12);
    }
}
