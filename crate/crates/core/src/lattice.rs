//! Hypercubic torus `[-L+1, L]^nu`, staggered hopping phases and the two
//! momentum grids.
//!
//! Sites are flattened row-major over coordinates shifted into `[0, 2L)`,
//! with the last axis varying fastest. This flat order is the fermion order
//! used by the Jordan-Wigner strings in [`crate::fock`].

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice dimension and half-length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeConfig {
    nu: usize,
    half_length: i32,
}

/// A lattice site with coordinates in `[-L+1, L]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Site {
    pub coords: Vec<i32>,
}

impl Site {
    pub fn new(coords: Vec<i32>) -> Self {
        Site { coords }
    }

    pub fn coordinate_sum(&self) -> i32 {
        self.coords.iter().sum()
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Which momentum grid a [`Momentum`] lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GridKind {
    /// `p = pi n / L`, `n` in `(-L, L]`; used for density modes.
    PeriodicDensity,
    /// `exp(2 i L k) = -1`; used for fermion modes.
    AntiperiodicFermion,
}

/// A lattice momentum stored exactly as `pi * numerator / denominator` per
/// component, with every numerator reduced into `(-denominator, denominator]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Momentum {
    numerators: Vec<i32>,
    denominator: i32,
    grid: GridKind,
}

fn wrap(n: i32, d: i32) -> i32 {
    (n + d - 1).rem_euclid(2 * d) - d + 1
}

impl Momentum {
    pub fn from_numerators(numerators: Vec<i32>, denominator: i32, grid: GridKind) -> Self {
        let numerators = numerators.into_iter().map(|n| wrap(n, denominator)).collect();
        Momentum { numerators, denominator, grid }
    }

    pub fn grid(&self) -> GridKind {
        self.grid
    }

    pub fn numerators(&self) -> &[i32] {
        &self.numerators
    }

    pub fn denominator(&self) -> i32 {
        self.denominator
    }

    pub fn dim(&self) -> usize {
        self.numerators.len()
    }

    pub fn components(&self) -> Vec<f64> {
        self.numerators
            .iter()
            .map(|&n| PI * n as f64 / self.denominator as f64)
            .collect()
    }

    pub fn component(&self, i: usize) -> f64 {
        PI * self.numerators[i] as f64 / self.denominator as f64
    }

    /// `-p` reduced back onto the grid.
    pub fn neg(&self) -> Momentum {
        Momentum::from_numerators(
            self.numerators.iter().map(|n| -n).collect(),
            self.denominator,
            self.grid,
        )
    }

    /// `p + pi * shift` componentwise, reduced mod `2 pi`.
    pub fn shifted_by_pi(&self, shift: &[bool]) -> Momentum {
        Momentum::from_numerators(
            self.numerators
                .iter()
                .zip(shift)
                .map(|(&n, &s)| if s { n + self.denominator } else { n })
                .collect(),
            self.denominator,
            self.grid,
        )
    }

    /// `p + Q` with `Q = (pi, ..., pi)`.
    pub fn plus_q(&self) -> Momentum {
        self.shifted_by_pi(&vec![true; self.dim()])
    }

    pub fn is_zero(&self) -> bool {
        self.numerators.iter().all(|&n| n == 0)
    }

    /// True when every component equals `pi`.
    pub fn is_q(&self) -> bool {
        self.numerators.iter().all(|&n| n == self.denominator)
    }

    /// `p . x` for a site.
    pub fn dot(&self, site: &Site) -> f64 {
        self.numerators
            .iter()
            .zip(&site.coords)
            .map(|(&n, &x)| PI * (n as i64 * x as i64) as f64 / self.denominator as f64)
            .sum()
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.numerators.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}pi/{}", self.denominator)?;
        }
        write!(f, ")")
    }
}

/// `E_p = (1/2) sum_mu (1 - cos p_mu)`.
pub fn dispersion(p: &Momentum) -> f64 {
    0.5 * p.components().iter().map(|k| 1.0 - k.cos()).sum::<f64>()
}

impl LatticeConfig {
    /// `nu >= 2`, `half_length >= 1`.
    pub fn new(nu: usize, half_length: i32) -> Result<Self> {
        if nu < 2 {
            return Err(Error::InvalidLattice(format!("dimension must be at least 2, got {nu}")));
        }
        if half_length < 1 {
            return Err(Error::InvalidLattice(format!(
                "half-length must be at least 1, got {half_length}"
            )));
        }
        let side = 2 * half_length as u64;
        if side.checked_pow(nu as u32).map_or(true, |n| n > (1 << 30)) {
            return Err(Error::InvalidLattice("lattice too large".into()));
        }
        Ok(LatticeConfig { nu, half_length })
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn half_length(&self) -> i32 {
        self.half_length
    }

    /// Number of sites per axis, `2L`.
    pub fn side(&self) -> usize {
        2 * self.half_length as usize
    }

    /// `|Lambda| = (2L)^nu`.
    pub fn num_sites(&self) -> usize {
        self.side().pow(self.nu as u32)
    }

    pub fn site(&self, index: usize) -> Site {
        let side = self.side();
        let mut coords = vec![0; self.nu];
        let mut rest = index;
        for c in coords.iter_mut().rev() {
            *c = (rest % side) as i32 - self.half_length + 1;
            rest /= side;
        }
        Site { coords }
    }

    pub fn index(&self, site: &Site) -> usize {
        let side = self.side();
        site.coords.iter().fold(0, |acc, &c| {
            let shifted = (c + self.half_length - 1).rem_euclid(side as i32) as usize;
            acc * side + shifted
        })
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.num_sites()).map(move |i| self.site(i))
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.nu {
            Err(Error::DirectionOutOfRange { axis, nu: self.nu })
        } else {
            Ok(())
        }
    }

    /// `x + e_axis` with periodic wrap `L + 1 -> -L + 1`.
    pub fn shift(&self, site: &Site, axis: usize, step: i32) -> Site {
        let side = self.side() as i32;
        let mut coords = site.coords.clone();
        coords[axis] = (coords[axis] + step + self.half_length - 1).rem_euclid(side) - self.half_length + 1;
        Site { coords }
    }

    /// Flat index of `x + e_axis`.
    pub fn forward_neighbor(&self, index: usize, axis: usize) -> usize {
        self.index(&self.shift(&self.site(index), axis, 1))
    }

    /// `theta_mu(x)` with a 0-based axis: the coordinates before `axis`
    /// summed, plus one on the `x^(axis) = L` boundary.
    pub fn theta(&self, site: &Site, axis: usize) -> Result<i32> {
        self.check_axis(axis)?;
        let lower: i32 = site.coords[..axis].iter().sum();
        let boundary = i32::from(site.coords[axis] == self.half_length);
        Ok(lower + boundary)
    }

    /// `(-1)^{theta_mu(x)}`.
    pub fn staggered_phase(&self, site: &Site, axis: usize) -> Result<i32> {
        Ok(sign_of(self.theta(site, axis)?))
    }

    pub fn q_vector(&self) -> Momentum {
        Momentum::from_numerators(vec![self.half_length; self.nu], self.half_length, GridKind::PeriodicDensity)
    }

    /// The periodic grid `pi n / L`, `n in {-L+1, ..., L}`, enumerated
    /// row-major in the same order as sites.
    pub fn density_momenta(&self) -> Vec<Momentum> {
        let l = self.half_length;
        self.sites()
            .map(|s| Momentum::from_numerators(s.coords.clone(), l, GridKind::PeriodicDensity))
            .collect()
    }

    /// The anti-periodic grid `k = pi (2j + 1) / (2L)`, `j in {-L, ..., L-1}`.
    pub fn fermion_momenta(&self) -> Vec<Momentum> {
        let l = self.half_length;
        self.sites()
            .map(|s| {
                let nums = s.coords.iter().map(|&c| 2 * c - 1).collect();
                Momentum::from_numerators(nums, 2 * l, GridKind::AntiperiodicFermion)
            })
            .collect()
    }

    /// Position of a density-grid momentum in [`Self::density_momenta`].
    pub fn density_index(&self, p: &Momentum) -> Result<usize> {
        if p.grid != GridKind::PeriodicDensity || p.denominator != self.half_length || p.dim() != self.nu {
            return Err(Error::OffGrid(p.to_string()));
        }
        Ok(self.index(&Site::new(p.numerators.clone())))
    }
}

/// `(-1)^{|x|}`.
pub fn parity(site: &Site) -> i32 {
    sign_of(site.coordinate_sum())
}

pub(crate) fn sign_of(n: i32) -> i32 {
    if n.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}
