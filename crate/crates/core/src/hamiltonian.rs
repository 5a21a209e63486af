//! Hamiltonians of the staggered-fermion model as [`FermionPoly`] sums, and
//! their matrices on a [`FockBasis`].
//!
//! `H(m) = i kappa sum_{x,mu} (-1)^{theta_mu(x)} [psi^dag(x) psi(x+e_mu) - h.c.]
//!        + m O + g sum_{x,mu} rho(x) rho(x+e_mu)`
//!
//! The double sum runs over every site and every direction, so on `L = 1`
//! each bond appears twice.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FermionPoly, FockBasis, Ladder};
use crate::lattice::{parity, LatticeConfig, Momentum, Site};
use crate::operator::HermitianOperator;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn im(x: f64) -> Complex64 {
    Complex64::new(0.0, x)
}

/// Couplings and inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kappa: f64,
    pub mass: f64,
    pub g: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(kappa: f64, mass: f64, g: f64, beta: f64) -> Result<Self> {
        let p = ModelParams { kappa, mass, g, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.kappa.is_finite() || !self.mass.is_finite() || !self.g.is_finite() {
            return Err(Error::InvalidParameter("couplings must be finite".into()));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParameter(format!("g must be non-negative, got {}", self.g)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn with_mass(self, mass: f64) -> Self {
        ModelParams { mass, ..self }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        ModelParams { beta, ..self }
    }
}

/// Bond fields `h^(mu)(x)`, indexed `[axis][flat site]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldH {
    values: Vec<Vec<f64>>,
}

impl FieldH {
    pub fn new(cfg: &LatticeConfig, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != cfg.nu() || values.iter().any(|v| v.len() != cfg.num_sites()) {
            return Err(Error::InvalidParameter(format!(
                "field must have {} axes of {} sites",
                cfg.nu(),
                cfg.num_sites()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field values must be finite".into()));
        }
        Ok(FieldH { values })
    }

    pub fn zero(cfg: &LatticeConfig) -> Self {
        FieldH { values: vec![vec![0.0; cfg.num_sites()]; cfg.nu()] }
    }

    /// Zero except `h^(axis)(site) = value`.
    pub fn single_bond(cfg: &LatticeConfig, axis: usize, site: usize, value: f64) -> Result<Self> {
        cfg.check_axis(axis)?;
        let mut f = Self::zero(cfg);
        *f.values
            .get_mut(axis)
            .and_then(|v| v.get_mut(site))
            .ok_or_else(|| Error::InvalidParameter(format!("site {site} out of range")))? = value;
        Self::new(cfg, f.values)
    }

    /// Independent uniform draws in `[-scale, scale]`.
    pub fn random(cfg: &LatticeConfig, scale: f64, rng: &mut impl rand::Rng) -> Self {
        let values = (0..cfg.nu())
            .map(|_| (0..cfg.num_sites()).map(|_| rng.random_range(-scale..=scale)).collect())
            .collect();
        FieldH { values }
    }

    pub fn get(&self, axis: usize, site: usize) -> f64 {
        self.values[axis][site]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().flatten().all(|&v| v == 0.0)
    }
}

/// `psi^dag(x) psi(y)`.
pub fn hop(x: usize, y: usize) -> FermionPoly {
    FermionPoly::word(vec![Ladder::create(x), Ladder::annihilate(y)], re(1.0))
}

/// `H_{K,mu}`: the hopping term along one axis, including `kappa`.
pub fn hopping_poly(cfg: &LatticeConfig, kappa: f64, axis: usize) -> Result<FermionPoly> {
    hopping_poly_with_phase(cfg, kappa, axis, |site| cfg.staggered_phase(site, axis).expect("axis checked"))
}

/// `i kappa sum_x s(x) [psi^dag(x) psi(x+e_axis) - h.c.]` for an arbitrary
/// sign pattern `s`.
pub fn hopping_poly_with_phase(
    cfg: &LatticeConfig,
    kappa: f64,
    axis: usize,
    phase: impl Fn(&Site) -> i32,
) -> Result<FermionPoly> {
    cfg.check_axis(axis)?;
    let mut p = FermionPoly::zero();
    for (x, site) in cfg.sites().enumerate() {
        let y = cfg.forward_neighbor(x, axis);
        let c = im(kappa * phase(&site) as f64);
        p = p + (hop(x, y) - hop(y, x)) * c;
    }
    Ok(p)
}

/// `H_K = sum_mu H_{K,mu}`.
pub fn kinetic_poly(cfg: &LatticeConfig, kappa: f64) -> FermionPoly {
    (0..cfg.nu()).fold(FermionPoly::zero(), |acc, mu| acc + hopping_poly(cfg, kappa, mu).expect("axis in range"))
}

/// `O = sum_x (-1)^{|x|} rho(x)`.
pub fn order_parameter_poly(cfg: &LatticeConfig) -> FermionPoly {
    cfg.sites()
        .enumerate()
        .fold(FermionPoly::zero(), |acc, (x, s)| acc + FermionPoly::density(x) * parity(&s) as f64)
}

/// `g sum_{x,mu} rho(x) rho(x+e_mu)`.
pub fn interaction_poly(cfg: &LatticeConfig, g: f64) -> FermionPoly {
    let mut p = FermionPoly::zero();
    for x in 0..cfg.num_sites() {
        for mu in 0..cfg.nu() {
            let y = cfg.forward_neighbor(x, mu);
            p = p + &FermionPoly::density(x) * &FermionPoly::density(y) * g;
        }
    }
    p
}

/// `(g/2) sum_{x,mu} [rho(x) + rho(x+e_mu) + (-1)^{|x|} h^(mu)(x)]^2 - g nu |Lambda| / 4`.
///
/// The square is expanded with `rho^2 = 1/4`, which cancels the constant
/// against `g nu |Lambda| / 4` and leaves
/// `g rho rho' + g s h (rho + rho') + g h^2 / 2` per bond. At `h = 0` the
/// result is term-for-term [`interaction_poly`].
pub fn deformed_interaction_poly(cfg: &LatticeConfig, g: f64, field: &FieldH) -> FermionPoly {
    let mut p = interaction_poly(cfg, g);
    for (x, site) in cfg.sites().enumerate() {
        for mu in 0..cfg.nu() {
            let shift = parity(&site) as f64 * field.get(mu, x);
            if shift == 0.0 {
                continue;
            }
            let y = cfg.forward_neighbor(x, mu);
            p = p + (FermionPoly::density(x) + FermionPoly::density(y)) * (g * shift)
                + FermionPoly::constant(re(g * shift * shift / 2.0));
        }
    }
    p
}

pub fn hamiltonian_poly(cfg: &LatticeConfig, params: &ModelParams) -> FermionPoly {
    kinetic_poly(cfg, params.kappa) + order_parameter_poly(cfg) * params.mass + interaction_poly(cfg, params.g)
}

pub fn deformed_hamiltonian_poly(cfg: &LatticeConfig, params: &ModelParams, field: &FieldH) -> FermionPoly {
    kinetic_poly(cfg, params.kappa)
        + order_parameter_poly(cfg) * params.mass
        + deformed_interaction_poly(cfg, params.g, field)
}

/// `H(m)` on `basis`.
pub fn build_hamiltonian(basis: &Arc<FockBasis>, params: &ModelParams) -> Result<HermitianOperator> {
    hamiltonian_poly(basis.lattice(), params).to_hermitian(basis, "H")
}

/// `O` on `basis`.
pub fn build_order_parameter(basis: &Arc<FockBasis>) -> Result<HermitianOperator> {
    order_parameter_poly(basis.lattice()).to_hermitian(basis, "O")
}

/// `H(m, h)` on `basis`.
pub fn build_deformed(basis: &Arc<FockBasis>, params: &ModelParams, field: &FieldH) -> Result<HermitianOperator> {
    if field.values.len() != basis.lattice().nu() || field.values[0].len() != basis.num_sites() {
        return Err(Error::InvalidParameter("field does not match the lattice".into()));
    }
    deformed_hamiltonian_poly(basis.lattice(), params, field).to_hermitian(basis, "H(h)")
}

/// The free three-dimensional staggered Hamiltonian in its textbook gauge:
///
/// `i kappa sum_x { [psi^dag(x) psi(x+e1) - h.c.]
///    + i (-1)^{x1+x2} [psi^dag(x) psi(x+e2) + h.c.]
///    + (-1)^{x1+x2} [psi^dag(x) psi(x+e3) - h.c.] }
///  + m sum_x (-1)^{|x|} psi^dag(x) psi(x)`
///
/// with `psi(x + 2L e_i) = -psi(x)` on every axis.
pub fn free_nu3_poly(cfg: &LatticeConfig, kappa: f64, mass: f64) -> Result<FermionPoly> {
    if cfg.nu() != 3 {
        return Err(Error::WrongDimension { expected: 3, found: cfg.nu() });
    }
    let l = cfg.half_length();
    let mut p = FermionPoly::zero();
    for (x, site) in cfg.sites().enumerate() {
        let c = &site.coords;
        let s12 = if (c[0] + c[1]).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        for mu in 0..3 {
            let y = cfg.forward_neighbor(x, mu);
            let wrap = if c[mu] == l { -1.0 } else { 1.0 };
            let term = match mu {
                0 => (hop(x, y) - hop(y, x)) * im(kappa * wrap),
                1 => (hop(x, y) + hop(y, x)) * re(-kappa * s12 * wrap),
                _ => (hop(x, y) - hop(y, x)) * im(kappa * s12 * wrap),
            };
            p = p + term;
        }
        p = p + FermionPoly::number(x) * (mass * parity(&site) as f64);
    }
    Ok(p)
}

pub fn build_free_nu3(basis: &Arc<FockBasis>, kappa: f64, mass: f64) -> Result<HermitianOperator> {
    free_nu3_poly(basis.lattice(), kappa, mass)?.to_hermitian(basis, "H_free")
}

/// Real-space kernel `G(x) = |Lambda|^{-1} sum_k Ghat(k) e^{ik.x}` over the
/// periodic density grid, indexed by flat site of `x`.
///
/// `Ghat` must be real; `support_cutoff = Some(eps0)` additionally requires
/// `Ghat(k) = 0` whenever some `|k^(i)| > eps0`.
pub fn general_kernel(
    cfg: &LatticeConfig,
    ghat: impl Fn(&Momentum) -> Complex64,
    support_cutoff: Option<f64>,
) -> Result<Vec<Complex64>> {
    let momenta = cfg.density_momenta();
    let values: Vec<f64> = momenta
        .iter()
        .map(|k| {
            let v = ghat(k);
            if v.im.abs() > 1e-14 * v.re.abs().max(1.0) {
                return Err(Error::ComplexKernel { momentum: k.to_string(), imag: v.im });
            }
            if let Some(eps0) = support_cutoff {
                if v.re != 0.0 && k.components().iter().any(|c| c.abs() > eps0) {
                    return Err(Error::SupportViolation { eps0, momentum: k.to_string() });
                }
            }
            Ok(v.re)
        })
        .collect::<Result<_>>()?;
    let n = cfg.num_sites() as f64;
    Ok(cfg
        .sites()
        .map(|x| {
            momenta
                .iter()
                .zip(&values)
                .map(|(k, &v)| Complex64::from_polar(v, k.dot(&x)))
                .sum::<Complex64>()
                / n
        })
        .collect())
}

/// `sum_{x,y} n(x) G(x - y) (-1)^{|x| + |y|} n(y)`.
pub fn general_interaction_poly(
    cfg: &LatticeConfig,
    ghat: impl Fn(&Momentum) -> Complex64,
    support_cutoff: Option<f64>,
) -> Result<FermionPoly> {
    let kernel = general_kernel(cfg, ghat, support_cutoff)?;
    let sites: Vec<_> = cfg.sites().collect();
    let mut p = FermionPoly::zero();
    for (x, sx) in sites.iter().enumerate() {
        for (y, sy) in sites.iter().enumerate() {
            let diff = Site::new(sx.coords.iter().zip(&sy.coords).map(|(a, b)| a - b).collect());
            let gxy = kernel[cfg.index(&diff)];
            if gxy.norm() < 1e-15 {
                continue;
            }
            let sign = (parity(sx) * parity(sy)) as f64;
            p = p + (&FermionPoly::number(x) * &FermionPoly::number(y)) * (gxy * sign);
        }
    }
    Ok(p)
}

pub fn build_general_interaction(
    basis: &Arc<FockBasis>,
    ghat: impl Fn(&Momentum) -> Complex64,
    support_cutoff: Option<f64>,
) -> Result<HermitianOperator> {
    general_interaction_poly(basis.lattice(), ghat, support_cutoff)?.to_hermitian(basis, "H_G")
}
