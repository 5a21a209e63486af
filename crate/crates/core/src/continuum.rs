//! One-particle analysis of the free three-dimensional staggered
//! Hamiltonian: momentum-space spectrum, Dirac spinor assembly, the
//! `sgn(K)` chiral selection rules, and the Brillouin-zone integrals that
//! control the long-range-order region.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::free_nu3_poly;
use crate::lattice::{GridKind, LatticeConfig, Momentum};

/// Tolerance for the one-particle identities.
pub const CONTINUUM_TOL: f64 = 1e-10;

const DEGENERACY_TOL: f64 = 1e-9;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn max_norm<'a>(entries: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    entries.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn require_nu3(cfg: &LatticeConfig) -> Result<()> {
    if cfg.nu() != 3 {
        return Err(Error::WrongDimension { expected: 3, found: cfg.nu() });
    }
    Ok(())
}

/// The `|Lambda| x |Lambda|` matrix `h` with `H_free = sum psi^dag(x) h_xy psi(y)`.
pub fn one_particle_matrix(cfg: &LatticeConfig, kappa: f64, mass: f64) -> Result<DMatrix<Complex64>> {
    let poly = free_nu3_poly(cfg, kappa, mass)?;
    let n = cfg.num_sites();
    let mut h = DMatrix::zeros(n, n);
    for (word, coef) in poly.terms() {
        match word {
            [a, b] if a.dagger && !b.dagger => h[(a.site, b.site)] += coef,
            _ => return Err(Error::InvalidParameter("free Hamiltonian is not a one-body bilinear".into())),
        }
    }
    Ok(h)
}

fn hermitian_eigen(h: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Ascending one-particle spectrum of `H_free`.
pub fn one_particle_spectrum(cfg: &LatticeConfig, kappa: f64, mass: f64) -> Result<Vec<f64>> {
    require_nu3(cfg)?;
    Ok(hermitian_eigen(&one_particle_matrix(cfg, kappa, mass)?).0)
}

/// `sqrt(4 kappa^2 sum_i sin^2 k_i + m^2)`.
pub fn free_energy(k: &[f64], kappa: f64, mass: f64) -> f64 {
    (4.0 * kappa * kappa * k.iter().map(|x| x.sin().powi(2)).sum::<f64>() + mass * mass).sqrt()
}

/// Lattice spectrum against the closed form over the anti-periodic grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumComparison {
    pub eigenvalues: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub max_deviation: f64,
    pub positive: usize,
    pub negative: usize,
    pub passed: bool,
}

/// Compares sorted `|E|` with the sorted closed-form energies, one per grid
/// momentum, and requires equal numbers of positive and negative levels.
pub fn compare_with_closed_form(cfg: &LatticeConfig, kappa: f64, mass: f64) -> Result<SpectrumComparison> {
    let eigenvalues = one_particle_spectrum(cfg, kappa, mass)?;
    let mut closed_form: Vec<f64> =
        cfg.fermion_momenta().iter().map(|k| free_energy(&k.components(), kappa, mass)).collect();
    closed_form.sort_by(f64::total_cmp);
    let mut abs: Vec<f64> = eigenvalues.iter().map(|e| e.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let max_deviation = abs.iter().zip(&closed_form).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let positive = eigenvalues.iter().filter(|&&e| e > 0.0).count();
    let negative = eigenvalues.iter().filter(|&&e| e < 0.0).count();
    Ok(SpectrumComparison {
        passed: max_deviation <= CONTINUUM_TOL && positive == negative,
        eigenvalues,
        closed_form,
        max_deviation,
        positive,
        negative,
    })
}

/// A point of `{0, pi}^3`, stored as which axes carry `pi`.
pub type PiShift = [bool; 3];

/// `(-1)^{number of pi components}`.
pub fn sgn(k: &PiShift) -> i32 {
    if k.iter().filter(|&&b| b).count() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// All eight shifts in lexicographic order.
pub fn pi_shifts() -> Vec<PiShift> {
    (0..8u8).map(|b| [b & 4 != 0, b & 2 != 0, b & 1 != 0]).collect()
}

/// `{0, pi_3, pi_12, pi_123}`.
pub const UP_GROUP: [PiShift; 4] =
    [[false, false, false], [false, false, true], [true, true, false], [true, true, true]];

/// `{pi_1, pi_2, pi_23, pi_13}`.
pub const DOWN_GROUP: [PiShift; 4] =
    [[true, false, false], [false, true, false], [false, true, true], [true, false, true]];

/// Four-component up/down blocks of the free Hamiltonian at one small
/// momentum, rotated into the Dirac basis.
#[derive(Clone, Debug)]
pub struct SpinorBlock {
    pub momentum: Momentum,
    /// `U_u M_u(k) U_u^T`.
    pub up: Matrix4<Complex64>,
    /// `U_d M_d(k) U_d^T`.
    pub down: Matrix4<Complex64>,
    /// `|| h W - W (W^dag h W) ||`, maximized over the two groups.
    pub leakage: f64,
}

impl SpinorBlock {
    pub fn assembly_up() -> Matrix4<f64> {
        Matrix4::new(
            1.0, 1.0, 1.0, 1.0, //
            1.0, -1.0, -1.0, 1.0, //
            1.0, -1.0, 1.0, -1.0, //
            1.0, 1.0, -1.0, -1.0,
        ) * 0.5
    }

    pub fn assembly_down() -> Matrix4<f64> {
        Matrix4::new(
            -1.0, 1.0, -1.0, 1.0, //
            -1.0, -1.0, -1.0, -1.0, //
            1.0, -1.0, -1.0, 1.0, //
            1.0, 1.0, -1.0, -1.0,
        ) * 0.5
    }

    pub fn gamma0() -> Matrix4<Complex64> {
        Matrix4::from_diagonal(&Vector4::new(c(1.0), c(1.0), c(-1.0), c(-1.0)))
    }

    pub fn gamma5() -> Matrix4<Complex64> {
        let mut g = Matrix4::zeros();
        for i in 0..2 {
            g[(i, i + 2)] = c(1.0);
            g[(i + 2, i)] = c(1.0);
        }
        g
    }

    pub fn sigma(i: usize) -> Matrix2<Complex64> {
        let (o, z, j) = (c(1.0), c(0.0), Complex64::new(0.0, 1.0));
        match i {
            0 => Matrix2::new(z, o, o, z),
            1 => Matrix2::new(z, -j, j, z),
            2 => Matrix2::new(o, z, z, -o),
            _ => panic!("Pauli index {i} out of range"),
        }
    }

    /// `[[0, A], [A, 0]]` for a 2x2 block `A`.
    pub fn off_diagonal(a: &Matrix2<Complex64>) -> Matrix4<Complex64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(a);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(a);
        m
    }

    /// `-2 kappa [[0, sin k . sigma], [sin k . sigma, 0]] + m gamma_0`.
    pub fn dirac_matrix(kappa: f64, mass: f64, k: &[f64]) -> Matrix4<Complex64> {
        let mut s = Matrix2::zeros();
        for (i, ki) in k.iter().enumerate() {
            s += Self::sigma(i) * c(ki.sin());
        }
        Self::off_diagonal(&s) * c(-2.0 * kappa) + Self::gamma0() * c(mass)
    }

    /// Projects the lattice one-particle matrix onto the plane waves
    /// `|Lambda|^{-1/2} e^{i pi x_2} e^{i (k + K) . x}` of each group.
    pub fn assemble(cfg: &LatticeConfig, kappa: f64, mass: f64, k: &Momentum) -> Result<Self> {
        require_nu3(cfg)?;
        check_small_momentum(cfg, k)?;
        let h = one_particle_matrix(cfg, kappa, mass)?;
        Self::from_matrix(cfg, &h, k)
    }

    fn from_matrix(cfg: &LatticeConfig, h: &DMatrix<Complex64>, k: &Momentum) -> Result<Self> {
        let project = |group: &[PiShift; 4], u: Matrix4<f64>| {
            let w = plane_waves(cfg, k, group);
            let hw = h * &w;
            let m = w.adjoint() * &hw;
            let leak = max_norm((&hw - &w * &m).iter());
            let block = Matrix4::from_fn(|i, j| m[(i, j)]);
            let uc = u.map(c);
            (uc * block * uc.transpose(), leak)
        };
        let (up, lu) = project(&UP_GROUP, Self::assembly_up());
        let (down, ld) = project(&DOWN_GROUP, Self::assembly_down());
        Ok(Self { momentum: k.clone(), up, down, leakage: lu.max(ld) })
    }
}

fn plane_waves(cfg: &LatticeConfig, k: &Momentum, group: &[PiShift]) -> DMatrix<Complex64> {
    let n = cfg.num_sites();
    let norm = 1.0 / (n as f64).sqrt();
    let mut w = DMatrix::zeros(n, group.len());
    for (col, shift) in group.iter().enumerate() {
        let q = k.shifted_by_pi(shift);
        for (row, site) in cfg.sites().enumerate() {
            let phase = q.dot(&site) + PI * site.coords[1] as f64;
            w[(row, col)] = Complex64::from_polar(norm, phase);
        }
    }
    w
}

/// Fermion-grid momentum with every component in `(-pi/2, pi/2]`.
pub fn check_small_momentum(cfg: &LatticeConfig, k: &Momentum) -> Result<()> {
    let l = cfg.half_length();
    let on_grid = k.grid() == GridKind::AntiperiodicFermion
        && k.denominator() == 2 * l
        && k.dim() == cfg.nu()
        && k.numerators().iter().all(|n| n.rem_euclid(2) == 1);
    if !on_grid {
        return Err(Error::OffGrid(k.to_string()));
    }
    if k.numerators().iter().any(|&n| n <= -l || n > l) {
        return Err(Error::InvalidParameter(format!("{k} lies outside the first folded zone (-pi/2, pi/2]")));
    }
    Ok(())
}

/// Fermion-grid momenta in the first folded zone.
pub fn small_momenta(cfg: &LatticeConfig) -> Vec<Momentum> {
    cfg.fermion_momenta().into_iter().filter(|k| check_small_momentum(cfg, k).is_ok()).collect()
}

/// Outcome of the Dirac-form check at one momentum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiracReport {
    pub numerators: Vec<i32>,
    pub denominator: i32,
    /// Max entry of `U M U^T - D`, up and down blocks.
    pub block_residual: f64,
    pub leakage: f64,
    /// Max of `|| D v - E v ||` over the assembled eigenvectors.
    pub eigen_residual: f64,
    pub up_energies: Vec<f64>,
    pub down_energies: Vec<f64>,
    /// `<v| gamma_5 |v>` of the assembled eigenvectors, up then down; only at `m = 0`.
    pub chirality: Option<Vec<f64>>,
    /// Number of eigenspaces of dimension above one.
    pub degenerate_spaces: usize,
    pub passed: bool,
}

/// Eigenvectors of a 4x4 Hermitian block in a deterministic basis: within
/// each degenerate eigenspace `gamma_5` is diagonalized when `chiral`, and
/// every vector is phased so its first largest component is real positive.
pub fn assembled_eigenvectors(block: &Matrix4<Complex64>, chiral: bool) -> (Vec<f64>, Vec<Vector4<Complex64>>, usize) {
    let dm = DMatrix::from_fn(4, 4, |i, j| block[(i, j)]);
    let (values, vecs) = hermitian_eigen(&dm);
    let mut out: Vec<Vector4<Complex64>> = (0..4).map(|k| Vector4::from_fn(|r, _| vecs[(r, k)])).collect();
    let mut degenerate = 0;
    let mut start = 0;
    while start < 4 {
        let mut end = start + 1;
        while end < 4 && (values[end] - values[start]).abs() < DEGENERACY_TOL * values[start].abs().max(1.0) {
            end += 1;
        }
        let d = end - start;
        if d > 1 {
            degenerate += 1;
            if chiral {
                let g5 = SpinorBlock::gamma5();
                let sub = DMatrix::from_fn(d, d, |i, j| (out[start + i].adjoint() * g5 * out[start + j])[(0, 0)]);
                let (_, rot) = hermitian_eigen(&sub);
                let old: Vec<_> = out[start..end].to_vec();
                for (j, slot) in out[start..end].iter_mut().enumerate() {
                    *slot = old.iter().enumerate().fold(Vector4::zeros(), |acc, (i, v)| acc + v * rot[(i, j)]);
                }
            }
        }
        start = end;
    }
    for v in out.iter_mut() {
        let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lead = v.iter().find(|z| z.norm() >= max - 1e-12).copied().unwrap_or(c(1.0));
        *v *= lead.conj() / lead.norm();
    }
    (values, out, degenerate)
}

/// Assembles the up and down spinors at `k` and checks them against the
/// continuum Dirac matrix.
pub fn dirac_form_check(cfg: &LatticeConfig, kappa: f64, mass: f64, k: &Momentum) -> Result<DiracReport> {
    let block = SpinorBlock::assemble(cfg, kappa, mass, k)?;
    Ok(dirac_report(&block, kappa, mass))
}

fn dirac_report(block: &SpinorBlock, kappa: f64, mass: f64) -> DiracReport {
    let k = &block.momentum;
    let d = SpinorBlock::dirac_matrix(kappa, mass, &k.components());
    let chiral = mass == 0.0;
    let g5 = SpinorBlock::gamma5();
    let mut block_residual: f64 = 0.0;
    let mut eigen_residual: f64 = 0.0;
    let mut degenerate_spaces = 0;
    let mut chirality = Vec::new();
    let mut energies = Vec::new();
    for b in [&block.up, &block.down] {
        block_residual = block_residual.max(max_norm((b - d).iter()));
        let (values, vecs, deg) = assembled_eigenvectors(b, chiral);
        degenerate_spaces += deg;
        for (e, v) in values.iter().zip(&vecs) {
            eigen_residual = eigen_residual.max((d * v - v * c(*e)).norm());
            chirality.push((v.adjoint() * g5 * v)[(0, 0)].re);
        }
        energies.push(values);
    }
    let down_energies = energies.pop().unwrap_or_default();
    let up_energies = energies.pop().unwrap_or_default();
    DiracReport {
        numerators: k.numerators().to_vec(),
        denominator: k.denominator(),
        passed: block_residual <= CONTINUUM_TOL && block.leakage <= CONTINUUM_TOL && eigen_residual <= CONTINUUM_TOL,
        block_residual,
        leakage: block.leakage,
        eigen_residual,
        up_energies,
        down_energies,
        chirality: chiral.then_some(chirality),
        degenerate_spaces,
    }
}

/// [`dirac_form_check`] at every small momentum.
pub fn dirac_form_scan(cfg: &LatticeConfig, kappa: f64, mass: f64) -> Result<Vec<DiracReport>> {
    require_nu3(cfg)?;
    let h = one_particle_matrix(cfg, kappa, mass)?;
    small_momenta(cfg)
        .par_iter()
        .map(|k| Ok(dirac_report(&SpinorBlock::from_matrix(cfg, &h, k)?, kappa, mass)))
        .collect()
}

/// Named deviations of the exact gamma-matrix and assembly identities.
pub fn gamma_identities() -> Vec<(&'static str, f64)> {
    let g0 = SpinorBlock::gamma0();
    let g5 = SpinorBlock::gamma5();
    let id = Matrix4::<Complex64>::identity();
    let uu = SpinorBlock::assembly_up();
    let ud = SpinorBlock::assembly_down();
    let comm = (0..3)
        .map(|i| {
            let a = SpinorBlock::off_diagonal(&SpinorBlock::sigma(i));
            max_norm((g5 * a - a * g5).iter())
        })
        .fold(0.0, f64::max);
    vec![
        ("gamma5^2 = 1", max_norm((g5 * g5 - id).iter())),
        ("gamma5 gamma0 gamma5 = -gamma0", max_norm((g5 * g0 * g5 + g0).iter())),
        ("[gamma5, offdiag(sigma)] = 0", comm),
        ("U_u^T U_u = 1", (uu.transpose() * uu - Matrix4::identity()).amax()),
        ("U_d^T U_d = 1", (ud.transpose() * ud - Matrix4::identity()).amax()),
    ]
}

/// `[(1 + e^{beta h})^{-1}]`, so that `<psi^dag(x) psi(y)> = F[y, x]`.
pub fn fermi_matrix(h: &DMatrix<Complex64>, beta: f64) -> DMatrix<Complex64> {
    let (values, vecs) = hermitian_eigen(h);
    let occ = values.iter().map(|&e| {
        let x = beta * e;
        if x > 0.0 {
            let t = (-x).exp();
            t / (1.0 + t)
        } else {
            1.0 / (1.0 + x.exp())
        }
    });
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(values.len(), occ.map(c)));
    &vecs * d * vecs.adjoint()
}

/// Free two-point functions `<psi^hat^dag(p + K1) psi^hat(p + K2)>` sorted by
/// the relative signature of `K1, K2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChiralReport {
    pub beta: f64,
    pub mass: f64,
    pub kappa: f64,
    pub max_opposite: f64,
    pub max_same: f64,
    pub pairs_checked: usize,
    /// `max_opposite <= tolerance`.
    pub vanishes: bool,
}

pub fn chiral_selection_check(cfg: &LatticeConfig, kappa: f64, mass: f64, beta: f64, tol: f64) -> Result<ChiralReport> {
    require_nu3(cfg)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")));
    }
    let f = fermi_matrix(&one_particle_matrix(cfg, kappa, mass)?, beta);
    let shifts = pi_shifts();
    let mut max_opposite: f64 = 0.0;
    let mut max_same: f64 = 0.0;
    let mut pairs = 0;
    for p in small_momenta(cfg) {
        let w = plane_waves(cfg, &p, &shifts);
        // C[a, b] = phi_b^dag F phi_a = <psi^hat^dag(p + K_a) psi^hat(p + K_b)>
        let cm = w.adjoint() * &f * &w;
        for (a, ka) in shifts.iter().enumerate() {
            for (b, kb) in shifts.iter().enumerate() {
                let v = cm[(b, a)].norm();
                if sgn(ka) * sgn(kb) < 0 {
                    max_opposite = max_opposite.max(v);
                    pairs += 1;
                } else {
                    max_same = max_same.max(v);
                }
            }
        }
    }
    Ok(ChiralReport { beta, mass, kappa, max_opposite, max_same, pairs_checked: pairs, vanishes: max_opposite <= tol })
}

/// Exhaustive check of `sgn(K1) sgn(K2) sgn(K3) sgn(K4) = +1` under
/// `K1 + K3 = K2 + K4 mod 2 pi`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SgnRuleReport {
    pub tuples: usize,
    pub conserving: usize,
    pub violations: usize,
    pub passed: bool,
}

pub fn sgn_selection_rule() -> SgnRuleReport {
    let shifts = pi_shifts();
    let (mut tuples, mut conserving, mut violations) = (0, 0, 0);
    for k1 in &shifts {
        for k2 in &shifts {
            for k3 in &shifts {
                for k4 in &shifts {
                    tuples += 1;
                    if (0..3).all(|i| (k1[i] ^ k3[i]) == (k2[i] ^ k4[i])) {
                        conserving += 1;
                        if sgn(k1) * sgn(k2) * sgn(k3) * sgn(k4) != 1 {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    SgnRuleReport { tuples, conserving, violations, passed: violations == 0 }
}

/// `I_nu = (2 pi)^{-nu} int dp / E_p` or `J_nu = (2 pi)^{-nu} int dp / sqrt(E_p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegralKind {
    I,
    J,
}

/// Midpoint resolutions per axis, each double the previous, and a radius
/// around `p = 0` whose cells are dropped.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadratureSpec {
    resolutions: Vec<usize>,
    excision_radius: f64,
}

/// Successive-difference ratio above which a ladder is called divergent.
pub const DIVERGENCE_RATIO: f64 = 0.75;

impl QuadratureSpec {
    pub fn new(resolutions: Vec<usize>, excision_radius: f64) -> Result<Self> {
        if resolutions.len() < 3 {
            return Err(Error::InvalidParameter("refinement ladder needs at least three levels".into()));
        }
        if resolutions[0] == 0 || resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(Error::InvalidParameter(format!("resolutions {resolutions:?} must double at each level")));
        }
        if !(excision_radius >= 0.0) {
            return Err(Error::InvalidParameter(format!("excision radius {excision_radius} must be non-negative")));
        }
        Ok(Self { resolutions, excision_radius })
    }

    /// `levels` doublings starting from `start`.
    pub fn doubling(start: usize, levels: usize) -> Result<Self> {
        Self::new((0..levels).map(|i| start << i).collect(), 0.0)
    }

    pub fn resolutions(&self) -> &[usize] {
        &self.resolutions
    }

    pub fn excision_radius(&self) -> f64 {
        self.excision_radius
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { resolutions: vec![16, 32, 64, 128, 256], excision_radius: 0.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BzEstimate {
    pub kind: IntegralKind,
    pub nu: usize,
    pub ladder: Vec<(usize, f64)>,
    /// Aitken extrapolation of the last three levels.
    pub value: f64,
    pub error: f64,
    /// Last successive-difference ratio.
    pub ratio: f64,
    pub converged: bool,
}

/// Midpoint rule on `[0, pi]^nu` (the integrand is even in each component).
pub fn midpoint_sum(kind: IntegralKind, nu: usize, m: usize, excision_radius: f64) -> f64 {
    let h = PI / m as f64;
    let x: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * h).collect();
    let one_minus_cos: Vec<f64> = x.iter().map(|v| 1.0 - v.cos()).collect();
    let r2 = excision_radius * excision_radius;

    fn walk(kind: IntegralKind, depth: usize, e: f64, p2: f64, ctx: (&[f64], &[f64], f64)) -> f64 {
        let (x, omc, r2) = ctx;
        if depth == 0 {
            if r2 > 0.0 && p2 < r2 {
                return 0.0;
            }
            let e = 0.5 * e;
            return match kind {
                IntegralKind::I => 1.0 / e,
                IntegralKind::J => 1.0 / e.sqrt(),
            };
        }
        (0..x.len()).map(|i| walk(kind, depth - 1, e + omc[i], p2 + x[i] * x[i], ctx)).sum()
    }

    let ctx = (x.as_slice(), one_minus_cos.as_slice(), r2);
    let total: f64 = (0..m)
        .into_par_iter()
        .map(|i| walk(kind, nu - 1, one_minus_cos[i], x[i] * x[i], ctx))
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    total / (m as f64).powi(nu as i32)
}

/// Runs the refinement ladder without judging convergence.
pub fn bz_ladder(kind: IntegralKind, nu: usize, spec: &QuadratureSpec) -> Result<BzEstimate> {
    if nu < 2 {
        return Err(Error::InvalidParameter(format!("Brillouin-zone integrals need nu >= 2, got {nu}")));
    }
    let ladder: Vec<(usize, f64)> =
        spec.resolutions.iter().map(|&m| (m, midpoint_sum(kind, nu, m, spec.excision_radius))).collect();
    let v: Vec<f64> = ladder.iter().map(|&(_, v)| v).collect();
    let aitken = |i: usize| -> (f64, f64) {
        let (d0, d1) = (v[i - 1] - v[i - 2], v[i] - v[i - 1]);
        let r = d1 / d0;
        (v[i] + d1 * r / (1.0 - r), r)
    };
    let last = v.len() - 1;
    let (value, ratio) = aitken(last);
    let error = if last >= 3 { (value - aitken(last - 1).0).abs() } else { (v[last] - v[last - 1]).abs() };
    let converged = ratio.is_finite() && ratio.abs() < DIVERGENCE_RATIO;
    Ok(BzEstimate { kind, nu, ladder, value, error, ratio, converged })
}

/// Converged estimate, or [`Error::Divergent`] with the ladder.
pub fn bz_integral(kind: IntegralKind, nu: usize, spec: &QuadratureSpec) -> Result<BzEstimate> {
    let est = bz_ladder(kind, nu, spec)?;
    if !est.converged {
        return Err(Error::Divergent { ladder: est.ladder });
    }
    Ok(est)
}

/// The integrals entering the certificate; `i_nu` is absent when divergent.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BzConstants {
    pub i_nu: Option<f64>,
    pub j_nu: f64,
}

pub fn bz_constants(nu: usize, spec: &QuadratureSpec) -> Result<BzConstants> {
    let j_nu = bz_integral(IntegralKind::J, nu, spec)?.value;
    let i_nu = match bz_integral(IntegralKind::I, nu, spec) {
        Ok(e) => Some(e.value),
        Err(Error::Divergent { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(BzConstants { i_nu, j_nu })
}

/// Lower bound on `m_LRO^2` implied by the infrared and coth bounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionCertificate {
    pub nu: usize,
    pub kappa: f64,
    pub g: f64,
    /// `None` for the ground state.
    pub beta: Option<f64>,
    pub lower_bound: f64,
    /// `(1 / (4 J_nu))^2 / nu`: the ground-state bound is positive iff `|kappa|/g` is below it.
    pub threshold: f64,
    pub kappa_over_g: f64,
    pub positive: bool,
}

/// `1/4 - I_nu/(2 beta g) - sqrt(|kappa| nu / g) J_nu`, dropping the `I_nu`
/// term when `beta` is `None`.
pub fn theorem_region(kappa: f64, g: f64, beta: Option<f64>, nu: usize, integrals: &BzConstants) -> Result<RegionCertificate> {
    if !(g > 0.0) {
        return Err(Error::InvalidParameter(format!("coupling must be positive, got {g}")));
    }
    let quantum = (kappa.abs() * nu as f64 / g).sqrt() * integrals.j_nu;
    let thermal = match beta {
        None => 0.0,
        Some(b) => {
            if !(b > 0.0) {
                return Err(Error::InvalidParameter(format!("beta must be positive, got {b}")));
            }
            let i = integrals.i_nu.ok_or(Error::FiniteTemperatureUnavailable { nu })?;
            if nu < 3 {
                return Err(Error::FiniteTemperatureUnavailable { nu });
            }
            i / (2.0 * b * g)
        }
    };
    let lower_bound = 0.25 - thermal - quantum;
    Ok(RegionCertificate {
        nu,
        kappa,
        g,
        beta,
        lower_bound,
        threshold: (1.0 / (4.0 * integrals.j_nu)).powi(2) / nu as f64,
        kappa_over_g: kappa.abs() / g,
        positive: lower_bound > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nu3(l: i32) -> LatticeConfig {
        LatticeConfig::new(3, l).unwrap()
    }

    #[test]
    fn spectrum_matches_closed_form() {
        for l in [1, 2] {
            for (kappa, m) in [(1.0, 0.0), (0.7, 0.3), (-0.4, -1.1)] {
                let r = compare_with_closed_form(&nu3(l), kappa, m).unwrap();
                assert!(r.passed, "L={l} kappa={kappa} m={m}: {}", r.max_deviation);
            }
        }
    }

    #[test]
    fn spectrum_contains_corner_energy() {
        let ev = one_particle_spectrum(&nu3(1), 1.0, 0.0).unwrap();
        let e = 2.0 * 3f64.sqrt();
        assert!(ev.iter().any(|x| (x - e).abs() < 1e-12));
        assert!(ev.iter().any(|x| (x + e).abs() < 1e-12));
    }

    #[test]
    fn massive_gap_is_at_least_mass() {
        let ev = one_particle_spectrum(&nu3(2), 0.9, 0.4).unwrap();
        assert!(ev.iter().all(|e| e.abs() >= 0.4 - 1e-12));
    }

    #[test]
    fn one_body_matrix_matches_single_particle_sector() {
        use crate::fock::FockBasis;
        use std::sync::Arc;
        let cfg = nu3(1);
        let h = one_particle_matrix(&cfg, 0.8, 0.3).unwrap();
        let basis = Arc::new(FockBasis::sector(cfg, 1).unwrap());
        let op = crate::hamiltonian::build_free_nu3(&basis, 0.8, 0.3).unwrap();
        let dense = op.to_dense();
        for (i, &si) in basis.states().iter().enumerate() {
            for (j, &sj) in basis.states().iter().enumerate() {
                let (x, y) = (si.trailing_zeros() as usize, sj.trailing_zeros() as usize);
                assert!((dense[(i, j)] - h[(x, y)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn wrong_dimension_rejected() {
        let cfg = LatticeConfig::new(2, 1).unwrap();
        assert!(matches!(one_particle_spectrum(&cfg, 1.0, 0.0), Err(Error::WrongDimension { .. })));
    }

    #[test]
    fn dirac_form_is_exact() {
        for l in [1, 2] {
            for (kappa, m) in [(0.8, 0.37), (1.0, 0.0)] {
                for r in dirac_form_scan(&nu3(l), kappa, m).unwrap() {
                    assert!(r.passed, "{r:?}");
                }
            }
        }
    }

    #[test]
    fn massless_dirac_energies() {
        let cfg = nu3(2);
        let kappa = 0.6;
        for r in dirac_form_scan(&cfg, kappa, 0.0).unwrap() {
            let k: Vec<f64> = r.numerators.iter().map(|&n| PI * n as f64 / r.denominator as f64).collect();
            let e = 2.0 * kappa * k.iter().map(|x| x.sin().powi(2)).sum::<f64>().sqrt();
            for v in r.up_energies.iter().chain(&r.down_energies) {
                assert!((v.abs() - e).abs() < 1e-12);
            }
            let chir = r.chirality.unwrap();
            assert!(chir.iter().all(|x| (x.abs() - 1.0).abs() < 1e-10));
        }
    }

    #[test]
    fn zero_momentum_rejected() {
        let cfg = nu3(1);
        let zero = Momentum::from_numerators(vec![0, 0, 0], 2, GridKind::AntiperiodicFermion);
        assert!(matches!(dirac_form_check(&cfg, 1.0, 0.0, &zero), Err(Error::OffGrid(_))));
        let outer = Momentum::from_numerators(vec![-1, 1, 1], 2, GridKind::AntiperiodicFermion);
        assert!(dirac_form_check(&cfg, 1.0, 0.0, &outer).is_err());
    }

    #[test]
    fn gamma_identities_exact() {
        for (name, dev) in gamma_identities() {
            assert_eq!(dev, 0.0, "{name}");
        }
    }

    #[test]
    fn sgn_values_and_rule() {
        assert_eq!(sgn(&[true, true, false]), 1);
        assert_eq!(sgn(&[true, false, false]), -1);
        let r = sgn_selection_rule();
        assert_eq!((r.tuples, r.conserving, r.violations), (4096, 512, 0));
    }

    #[test]
    fn fermi_matrix_matches_many_body_state() {
        use crate::fock::{annihilator, creator, FockBasis};
        use crate::spectra::{diagonalize, ThermalState};
        use std::sync::Arc;
        let cfg = nu3(1);
        let (kappa, m, beta) = (0.7, 0.5, 1.3);
        let f = fermi_matrix(&one_particle_matrix(&cfg, kappa, m).unwrap(), beta);
        let basis = Arc::new(FockBasis::full(cfg).unwrap());
        let h = crate::hamiltonian::build_free_nu3(&basis, kappa, m).unwrap();
        let dec = diagonalize(&h).unwrap();
        let st = ThermalState::new(&dec, beta).unwrap();
        for (x, y) in [(0, 0), (0, 3), (5, 2), (7, 6)] {
            let op = &creator(&basis, x).unwrap() * &annihilator(&basis, y).unwrap();
            let v = st.expectation(&op).unwrap();
            assert!((v - f[(y, x)]).norm() < 1e-12, "({x},{y})");
        }
    }

    #[test]
    fn chiral_selection() {
        let cfg = nu3(1);
        let massless = chiral_selection_check(&cfg, 0.9, 0.0, 2.0, 1e-10).unwrap();
        assert!(massless.vanishes, "{massless:?}");
        assert!(massless.max_same > 1e-3);
        let massive = chiral_selection_check(&cfg, 0.9, 0.5, 2.0, 1e-10).unwrap();
        assert!(!massive.vanishes);
    }

    #[test]
    fn quadrature_spec_validation() {
        assert!(QuadratureSpec::new(vec![16, 32], 0.0).is_err());
        assert!(QuadratureSpec::new(vec![16, 24, 48], 0.0).is_err());
        assert!(QuadratureSpec::new(vec![8, 16, 32], -1.0).is_err());
        assert_eq!(QuadratureSpec::doubling(4, 3).unwrap().resolutions(), &[4, 8, 16]);
    }

    #[test]
    fn two_dimensional_i_diverges() {
        let spec = QuadratureSpec::doubling(16, 4).unwrap();
        let est = bz_ladder(IntegralKind::I, 2, &spec).unwrap();
        assert!(est.ladder.windows(2).all(|w| w[1].1 > w[0].1));
        assert!(!est.converged);
        assert!(matches!(bz_integral(IntegralKind::I, 2, &spec), Err(Error::Divergent { .. })));
    }

    #[test]
    fn region_certificate() {
        let ints = BzConstants { i_nu: Some(1.0109), j_nu: 0.9107 };
        let gs = theorem_region(0.0, 1.0, None, 3, &ints).unwrap();
        assert_eq!(gs.lower_bound, 0.25);
        assert!(gs.positive);
        let at = gs.threshold * 1.0;
        assert!(theorem_region(at * 0.999, 1.0, None, 3, &ints).unwrap().positive);
        assert!(!theorem_region(at * 1.001, 1.0, None, 3, &ints).unwrap().positive);
        let two = BzConstants { i_nu: None, j_nu: 1.2858 };
        assert!(matches!(theorem_region(0.01, 1.0, Some(10.0), 2, &two), Err(Error::FiniteTemperatureUnavailable { nu: 2 })));
        assert!(theorem_region(0.01, 1.0, None, 2, &two).is_ok());
        assert!(theorem_region(0.01, 0.0, None, 3, &ints).is_err());
    }
}
