//! Exact diagonalization by particle-number sector, Gibbs states, ground
//! states and the Duhamel two-point function.
//!
//! All Boltzmann factors are taken relative to the lowest eigenvalue, so
//! `Z` below is `sum_n exp(-beta (E_n - E_min))`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::operator::{HermitianOperator, Operator, DENSE_LIMIT};

/// Default ground-state degeneracy window.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

/// Relative gap below which the Duhamel kernel uses its diagonal limit.
pub const KERNEL_DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagOptions {
    /// Largest block handed to the dense eigensolver.
    pub max_block_dim: usize,
    /// Split a full-basis operator into particle-number blocks when it
    /// conserves particle number.
    pub block_by_number: bool,
}

impl Default for DiagOptions {
    fn default() -> Self {
        DiagOptions { max_block_dim: DENSE_LIMIT, block_by_number: true }
    }
}

/// Eigenpairs of one block.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    /// Particle number of the block, `None` for an unblocked operator.
    pub particles: Option<usize>,
    /// Positions of the block's states in the operator's basis.
    pub indices: Vec<usize>,
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// Columns are eigenvectors in block coordinates.
    pub eigenvectors: DMatrix<Complex64>,
}

impl SectorSpectrum {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    basis: Arc<FockBasis>,
    sectors: Vec<SectorSpectrum>,
    label: String,
}

fn eigh(block: DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let n = block.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = block.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// True if no entry of `h` connects different particle numbers.
fn conserves_number(h: &Operator) -> bool {
    let states = h.basis().states();
    match h.storage() {
        crate::operator::Storage::Dense(m) => {
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    if m[(i, j)] != Complex64::new(0.0, 0.0) && states[i].count_ones() != states[j].count_ones() {
                        return false;
                    }
                }
            }
            true
        }
        crate::operator::Storage::Sparse(s) => {
            s.iter().all(|(i, j, _)| states[i].count_ones() == states[j].count_ones())
        }
    }
}

/// Diagonalize with default options.
pub fn diagonalize(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    diagonalize_with(h, &DiagOptions::default())
}

pub fn diagonalize_with(h: &HermitianOperator, opts: &DiagOptions) -> Result<SpectralDecomposition> {
    let basis = h.basis().clone();
    let blocks: Vec<(Option<usize>, Vec<usize>)> = if basis.is_full() && opts.block_by_number && conserves_number(h) {
        basis
            .sector_indices()
            .into_iter()
            .enumerate()
            .filter(|(_, idx)| !idx.is_empty())
            .map(|(n, idx)| (Some(n), idx))
            .collect()
    } else {
        vec![(basis.particle_sector(), (0..basis.dim()).collect())]
    };
    if let Some(big) = blocks.iter().map(|(_, idx)| idx.len()).max() {
        if big > opts.max_block_dim {
            return Err(Error::DimensionTooLarge { dim: big, limit: opts.max_block_dim });
        }
    }
    let sectors = blocks
        .into_par_iter()
        .map(|(particles, indices)| {
            let block = h.block(&indices, &indices);
            let (eigenvalues, eigenvectors) = eigh(block);
            SectorSpectrum { particles, indices, eigenvalues, eigenvectors }
        })
        .collect();
    Ok(SpectralDecomposition { basis, sectors, label: h.label().to_string() })
}

impl SpectralDecomposition {
    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn sectors(&self) -> &[SectorSpectrum] {
        &self.sectors
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.sectors.iter().map(|s| s.dim()).sum()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.sectors.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn ground_energy(&self) -> Result<f64> {
        self.sectors
            .iter()
            .filter_map(|s| s.eigenvalues.iter().next().copied())
            .min_by(f64::total_cmp)
            .ok_or(Error::EmptySpectrum)
    }

    /// `max |H - V diag(E) V^dag|` against the operator that was diagonalized.
    pub fn reconstruction_error(&self, h: &Operator) -> f64 {
        let mut worst: f64 = 0.0;
        for s in &self.sectors {
            let d = DMatrix::from_diagonal(&s.eigenvalues.map(|e| Complex64::new(e, 0.0)));
            let rebuilt = &s.eigenvectors * d * s.eigenvectors.adjoint();
            let block = h.block(&s.indices, &s.indices);
            worst = worst.max((rebuilt - block).iter().fold(0.0, |m, v| m.max(v.norm())));
        }
        worst
    }

    fn check_operator(&self, a: &Operator) -> Result<()> {
        if a.rows() != &self.basis || a.cols() != &self.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }

    /// `V_s^dag A[s, t] V_t`.
    fn eigen_block(&self, a: &Operator, s: usize, t: usize) -> DMatrix<Complex64> {
        let (bs, bt) = (&self.sectors[s], &self.sectors[t]);
        let block = a.block(&bs.indices, &bt.indices);
        bs.eigenvectors.adjoint() * block * &bt.eigenvectors
    }

    fn block_is_zero(&self, a: &Operator, s: usize, t: usize) -> bool {
        let (bs, bt) = (&self.sectors[s], &self.sectors[t]);
        bs.indices.iter().all(|&i| bt.indices.iter().all(|&j| a.get(i, j) == Complex64::new(0.0, 0.0)))
    }

    /// Expectation values `<n|A|n>` for every eigenvector, by sector.
    fn diagonal_elements(&self, a: &Operator) -> Vec<Vec<Complex64>> {
        self.sectors
            .par_iter()
            .map(|s| {
                let block = a.block(&s.indices, &s.indices);
                let av = block * &s.eigenvectors;
                (0..s.dim()).map(|n| s.eigenvectors.column(n).dotc(&av.column(n))).collect()
            })
            .collect()
    }
}

/// Gibbs state `exp(-beta H) / Z` built from a decomposition.
#[derive(Debug, Clone)]
pub struct ThermalState<'a> {
    dec: &'a SpectralDecomposition,
    beta: f64,
    e_min: f64,
    weights: Vec<DVector<f64>>,
    z: f64,
}

impl<'a> ThermalState<'a> {
    pub fn new(dec: &'a SpectralDecomposition, beta: f64) -> Result<Self> {
        Self::with_shift(dec, beta, dec.ground_energy()?)
    }

    /// Weights `exp(-beta (E - shift))`; used to compare traces of two
    /// operators under one common shift.
    pub fn with_shift(dec: &'a SpectralDecomposition, beta: f64, shift: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")));
        }
        let weights: Vec<DVector<f64>> =
            dec.sectors.iter().map(|s| s.eigenvalues.map(|e| (-beta * (e - shift)).exp())).collect();
        let z: f64 = weights.iter().map(|w| w.sum()).sum();
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::InvalidParameter(format!("partition function not representable (Z = {z})")));
        }
        Ok(ThermalState { dec, beta, e_min: shift, weights, z })
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        self.dec
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        self.dec.basis()
    }

    /// `sum_n exp(-beta (E_n - shift))`.
    pub fn shifted_partition_function(&self) -> f64 {
        self.z
    }

    pub fn shift(&self) -> f64 {
        self.e_min
    }

    /// `ln tr exp(-beta H)`.
    pub fn log_partition_function(&self) -> f64 {
        self.z.ln() - self.beta * self.e_min
    }

    /// `<H>`.
    pub fn energy(&self) -> f64 {
        let mut acc = 0.0;
        for (s, w) in self.dec.sectors.iter().zip(&self.weights) {
            acc += s.eigenvalues.dot(w);
        }
        acc / self.z
    }

    /// `tr(A exp(-beta H)) / Z`.
    pub fn expectation(&self, a: &Operator) -> Result<Complex64> {
        self.dec.check_operator(a)?;
        let diag = self.dec.diagonal_elements(a);
        let mut acc = Complex64::new(0.0, 0.0);
        for (d, w) in diag.iter().zip(&self.weights) {
            for (v, &wn) in d.iter().zip(w.iter()) {
                acc += v * wn;
            }
        }
        Ok(acc / self.z)
    }

    /// `(A, B) = Z^{-1} sum_{m,n} A_mn B_nm K(E_m, E_n)`.
    pub fn duhamel(&self, a: &Operator, b: &Operator) -> Result<Complex64> {
        self.dec.check_operator(a)?;
        self.dec.check_operator(b)?;
        let k = self.dec.sectors.len();
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|s| (0..k).map(move |t| (s, t))).collect();
        let total: Complex64 = pairs
            .par_iter()
            .filter(|&&(s, t)| !self.dec.block_is_zero(a, s, t) && !self.dec.block_is_zero(b, t, s))
            .map(|&(s, t)| {
                let am = self.dec.eigen_block(a, s, t);
                let bm = self.dec.eigen_block(b, t, s);
                let (es, et) = (&self.dec.sectors[s].eigenvalues, &self.dec.sectors[t].eigenvalues);
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..es.len() {
                    for n in 0..et.len() {
                        let kernel = duhamel_kernel(self.beta, es[m] - self.e_min, et[n] - self.e_min, es[m]);
                        acc += am[(m, n)] * bm[(n, m)] * kernel;
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        Ok(total / self.z)
    }
}

/// `(exp(-beta e_n) - exp(-beta e_m)) / (beta (e_m - e_n))` with `e` shifted
/// energies; `raw_em` sets the degeneracy scale.
pub fn duhamel_kernel(beta: f64, em: f64, en: f64, raw_em: f64) -> f64 {
    let delta = em - en;
    if delta.abs() < KERNEL_DEGENERACY_TOL * raw_em.abs().max(1.0) {
        return (-beta * em).exp();
    }
    let low = em.min(en);
    let x = beta * delta.abs();
    (-beta * low).exp() * (-(-x).exp_m1()) / x
}

/// `tr(A exp(-beta H)) / Z`.
pub fn thermal_expectation(state: &ThermalState<'_>, a: &Operator) -> Result<Complex64> {
    state.expectation(a)
}

/// `(A, B)` in the Gibbs state.
pub fn duhamel(state: &ThermalState<'_>, a: &Operator, b: &Operator) -> Result<Complex64> {
    state.duhamel(a, b)
}

/// Equal-weight average of `<psi|A|psi>` over all eigenvectors within
/// `degeneracy_tol` of the lowest eigenvalue.
pub fn ground_expectation(dec: &SpectralDecomposition, a: &Operator, degeneracy_tol: f64) -> Result<Complex64> {
    if !(degeneracy_tol > 0.0) {
        return Err(Error::InvalidParameter("degeneracy tolerance must be positive".into()));
    }
    dec.check_operator(a)?;
    let e0 = dec.ground_energy()?;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut count = 0usize;
    for s in &dec.sectors {
        let ground: Vec<usize> = (0..s.dim()).filter(|&n| s.eigenvalues[n] - e0 <= degeneracy_tol).collect();
        if ground.is_empty() {
            continue;
        }
        let block = a.block(&s.indices, &s.indices);
        for n in ground {
            let v = s.eigenvectors.column(n);
            acc += v.dotc(&(&block * v));
            count += 1;
        }
    }
    Ok(acc / count as f64)
}

/// Number of eigenvalues within `degeneracy_tol` of the minimum.
pub fn ground_degeneracy(dec: &SpectralDecomposition, degeneracy_tol: f64) -> Result<usize> {
    let e0 = dec.ground_energy()?;
    Ok(dec.eigenvalues().iter().filter(|&&e| e - e0 <= degeneracy_tol).count())
}

/// `(tr exp(-beta (A - E*)), tr exp(-beta (B - E*)))` with `E*` the lowest
/// eigenvalue of either spectrum.
pub fn common_shift_traces(a: &SpectralDecomposition, b: &SpectralDecomposition, beta: f64) -> Result<(f64, f64)> {
    let shift = a.ground_energy()?.min(b.ground_energy()?);
    let za = ThermalState::with_shift(a, beta, shift)?.shifted_partition_function();
    let zb = ThermalState::with_shift(b, beta, shift)?.shifted_partition_function();
    Ok((za, zb))
}

/// Lowest eigenvalues and Ritz vectors by Lanczos with full
/// reorthogonalization, for blocks too large to diagonalize densely.
#[derive(Debug, Clone)]
pub struct LanczosResult {
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<DVector<Complex64>>,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

pub fn lanczos_lowest(h: &HermitianOperator, count: usize, max_iter: usize, tol: f64, seed: u64) -> Result<LanczosResult> {
    let n = h.basis().dim();
    if n == 0 {
        return Err(Error::EmptySpectrum);
    }
    let count = count.min(n).max(1);
    let max_iter = max_iter.min(n).max(count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    v /= Complex64::new(v.norm(), 0.0);
    let mut basis: Vec<DVector<Complex64>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta_off: Vec<f64> = Vec::new();
    let mut result = None;
    for it in 0..max_iter {
        let q = &basis[it];
        let mut w = h.matvec(q);
        let a = q.dotc(&w).re;
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&w);
                w -= b * c;
            }
        }
        let bnorm = w.norm();
        let m = alpha.len();
        if m >= count && (m % 5 == 0 || bnorm < 1e-12 || m == max_iter) {
            let t = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta_off[i]
                } else if j + 1 == i {
                    beta_off[j]
                } else {
                    0.0
                }
            });
            let eig = t.symmetric_eigen();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
            let residuals: Vec<f64> = order[..count].iter().map(|&k| (bnorm * eig.eigenvectors[(m - 1, k)]).abs()).collect();
            let converged = residuals.iter().all(|&r| r < tol) || bnorm < 1e-12 || m == max_iter;
            if converged {
                let eigenvalues = order[..count].iter().map(|&k| eig.eigenvalues[k]).collect();
                let vectors = order[..count]
                    .iter()
                    .map(|&k| {
                        let mut x = DVector::zeros(n);
                        for (i, b) in basis.iter().enumerate() {
                            x += b * Complex64::new(eig.eigenvectors[(i, k)], 0.0);
                        }
                        let nrm = x.norm();
                        x / Complex64::new(nrm, 0.0)
                    })
                    .collect();
                result = Some(LanczosResult { eigenvalues, vectors, iterations: m, residuals });
                break;
            }
        }
        if bnorm < 1e-12 {
            break;
        }
        beta_off.push(bnorm);
        basis.push(w / Complex64::new(bnorm, 0.0));
    }
    result.ok_or(Error::EmptySpectrum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_hamiltonian, ModelParams};
    use crate::lattice::LatticeConfig;

    fn full(nu: usize, l: i32) -> Arc<FockBasis> {
        Arc::new(FockBasis::full(LatticeConfig::new(nu, l).unwrap()).unwrap())
    }

    #[test]
    fn identity_spectrum_and_expectation() {
        let b = full(2, 1);
        let id = HermitianOperator::new(Operator::identity(&b)).unwrap();
        let dec = diagonalize(&id).unwrap();
        assert!(dec.eigenvalues().iter().all(|&e| (e - 1.0).abs() < 1e-14));
        let st = ThermalState::new(&dec, 2.0).unwrap();
        assert!((st.expectation(&id).unwrap().re - 1.0).abs() < 1e-14);
        assert!((st.duhamel(&id, &id).unwrap().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn blocked_and_unblocked_traces_agree() {
        let b = full(2, 1);
        let p = ModelParams::new(0.6, 0.3, 1.1, 1.7).unwrap();
        let h = build_hamiltonian(&b, &p).unwrap();
        let blocked = diagonalize(&h).unwrap();
        let flat = diagonalize_with(&h, &DiagOptions { block_by_number: false, ..Default::default() }).unwrap();
        assert_eq!(blocked.sectors().len(), 5);
        assert_eq!(flat.sectors().len(), 1);
        assert!(blocked.reconstruction_error(&h) < 1e-10);
        for (x, y) in blocked.eigenvalues().iter().zip(flat.eigenvalues()) {
            assert!((x - y).abs() < 1e-10);
        }
        let o = crate::hamiltonian::build_order_parameter(&b).unwrap();
        let o2 = &*o * &*o;
        let (sb, sf) = (ThermalState::new(&blocked, p.beta).unwrap(), ThermalState::new(&flat, p.beta).unwrap());
        assert!((sb.expectation(&o2).unwrap() - sf.expectation(&o2).unwrap()).norm() < 1e-10);
        assert!((sb.duhamel(&o, &o).unwrap() - sf.duhamel(&o, &o).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn dimension_limit_is_enforced() {
        let b = full(2, 1);
        let h = build_hamiltonian(&b, &ModelParams::new(0.6, 0.0, 1.0, 1.0).unwrap()).unwrap();
        let opts = DiagOptions { max_block_dim: 4, block_by_number: true };
        assert!(matches!(diagonalize_with(&h, &opts), Err(Error::DimensionTooLarge { dim: 6, limit: 4 })));
    }

    #[test]
    fn kernel_is_continuous_across_degeneracy_threshold() {
        let beta = 3.0;
        let exact = duhamel_kernel(beta, 0.5, 0.5, 0.5);
        let near = duhamel_kernel(beta, 0.5 + 1e-7, 0.5, 0.5);
        assert!((exact - near).abs() < 1e-6);
        let (em, en) = (0.2, 1.1);
        let direct = ((-beta * en).exp() - (-beta * em).exp()) / (beta * (em - en));
        assert!((duhamel_kernel(beta, em, en, em) - direct).abs() < 1e-15);
        assert_eq!(duhamel_kernel(beta, em, en, em), duhamel_kernel(beta, en, em, en));
    }

    #[test]
    fn lanczos_matches_dense_ground_energy() {
        let cfg = LatticeConfig::new(2, 1).unwrap();
        let b = Arc::new(FockBasis::half_filling(cfg).unwrap());
        let h = build_hamiltonian(&b, &ModelParams::new(0.5, 0.0, 1.0, 1.0).unwrap()).unwrap();
        let dense = diagonalize(&h).unwrap().ground_energy().unwrap();
        let lz = lanczos_lowest(&h, 1, 50, 1e-10, 1).unwrap();
        assert!((lz.eigenvalues[0] - dense).abs() < 1e-9);
    }
}
