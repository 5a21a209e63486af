//! Fock space of spinless fermions on the lattice, Jordan-Wigner ordered by
//! flat site index, and a small symbolic algebra of ladder-operator
//! polynomials that materializes onto any basis.
//!
//! Bit `i` of a basis state is the occupation of flat site `i`. Applying
//! `psi(i)` or `psi^dag(i)` picks up `(-1)^{n(0) + ... + n(i-1)}`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::LatticeConfig;
use crate::operator::{HermitianOperator, Operator};

/// Largest lattice for which the unrestricted `2^|Lambda|` basis is built.
pub const MAX_FULL_SITES: usize = 16;

/// Upper bound on any basis dimension this crate will enumerate.
pub const MAX_BASIS_DIM: usize = 1 << 22;

/// Either the full Fock space or a fixed particle-number sector.
#[derive(Debug, Clone)]
pub struct FockBasis {
    lattice: LatticeConfig,
    sector: Option<usize>,
    states: Vec<u64>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice && self.sector == other.sector
    }
}

impl Eq for FockBasis {}

impl FockBasis {
    /// All `2^|Lambda|` occupation states; states are their own indices.
    pub fn full(lattice: LatticeConfig) -> Result<Self> {
        let n = lattice.num_sites();
        if n > MAX_FULL_SITES {
            return Err(Error::DimensionTooLarge {
                dim: 1usize.checked_shl(n as u32).unwrap_or(usize::MAX),
                limit: 1 << MAX_FULL_SITES,
            });
        }
        let states = (0..1u64 << n).collect();
        Ok(FockBasis { lattice, sector: None, states })
    }

    /// States with exactly `particles` fermions, sorted ascending.
    pub fn sector(lattice: LatticeConfig, particles: usize) -> Result<Self> {
        let n = lattice.num_sites();
        if n > 64 {
            return Err(Error::DimensionTooLarge { dim: usize::MAX, limit: MAX_BASIS_DIM });
        }
        if particles > n {
            return Err(Error::SectorMismatch(format!("{particles} particles on {n} sites")));
        }
        let dim = binomial(n, particles);
        if dim > MAX_BASIS_DIM as u128 {
            return Err(Error::DimensionTooLarge { dim: dim.min(usize::MAX as u128) as usize, limit: MAX_BASIS_DIM });
        }
        let mut states = Vec::with_capacity(dim as usize);
        if particles == 0 {
            states.push(0);
        } else {
            // Gosper's hack enumerates fixed-popcount words in increasing order.
            let mut s: u64 = (1u64 << particles) - 1;
            let limit_bit = n as u32;
            loop {
                states.push(s);
                let c = s & s.wrapping_neg();
                let r = s.wrapping_add(c);
                if r == 0 || (64 - r.leading_zeros()) > limit_bit {
                    break;
                }
                s = (((r ^ s) >> 2) / c) | r;
            }
        }
        debug_assert_eq!(states.len() as u128, dim);
        Ok(FockBasis { lattice, sector: Some(particles), states })
    }

    /// Half filling, `|Lambda| / 2` particles.
    pub fn half_filling(lattice: LatticeConfig) -> Result<Self> {
        Self::sector(lattice, lattice.num_sites() / 2)
    }

    pub fn lattice(&self) -> &LatticeConfig {
        &self.lattice
    }

    pub fn num_sites(&self) -> usize {
        self.lattice.num_sites()
    }

    pub fn particle_sector(&self) -> Option<usize> {
        self.sector
    }

    pub fn is_full(&self) -> bool {
        self.sector.is_none()
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, index: usize) -> u64 {
        self.states[index]
    }

    pub fn index_of(&self, state: u64) -> Option<usize> {
        match self.sector {
            None => ((state as usize) < self.states.len()).then_some(state as usize),
            Some(_) => self.states.binary_search(&state).ok(),
        }
    }

    /// The basis a particle-number change of `delta` lands in.
    pub fn shifted(self: &Arc<Self>, delta: i64) -> Result<Arc<FockBasis>> {
        match self.sector {
            None => Ok(self.clone()),
            Some(_) if delta == 0 => Ok(self.clone()),
            Some(n) => {
                let target = n as i64 + delta;
                if target < 0 || target > self.num_sites() as i64 {
                    return Err(Error::SectorMismatch(format!(
                        "operator maps the {n}-particle sector to {target} particles"
                    )));
                }
                Ok(Arc::new(FockBasis::sector(self.lattice, target as usize)?))
            }
        }
    }

    /// Indices of full-basis states grouped by particle number.
    pub fn sector_indices(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_sites() + 1];
        for (i, s) in self.states.iter().enumerate() {
            groups[s.count_ones() as usize].push(i);
        }
        groups
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `psi(site)` or `psi^dag(site)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ladder {
    pub site: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn annihilate(site: usize) -> Self {
        Ladder { site, dagger: false }
    }

    pub fn create(site: usize) -> Self {
        Ladder { site, dagger: true }
    }

    pub fn adjoint(self) -> Self {
        Ladder { site: self.site, dagger: !self.dagger }
    }

    /// Action on a basis state: `None` if it annihilates it.
    #[inline]
    pub fn apply(self, state: u64) -> Option<(u64, bool)> {
        let bit = 1u64 << self.site;
        if (state & bit != 0) == self.dagger {
            return None;
        }
        let negative = (state & (bit - 1)).count_ones() % 2 == 1;
        Some((state ^ bit, negative))
    }
}

impl fmt::Display for Ladder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dagger {
            write!(f, "c+{}", self.site)
        } else {
            write!(f, "c{}", self.site)
        }
    }
}

/// Apply a word of ladder operators (rightmost first) to a basis state.
#[inline]
pub fn apply_word(word: &[Ladder], state: u64) -> Option<(u64, bool)> {
    let mut s = state;
    let mut negative = false;
    for l in word.iter().rev() {
        let (t, neg) = l.apply(s)?;
        s = t;
        negative ^= neg;
    }
    Some((s, negative))
}

/// A finite linear combination of ordered ladder-operator words.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FermionPoly {
    terms: BTreeMap<Vec<Ladder>, Complex64>,
}

impl FermionPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        let mut p = Self::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn identity() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn word(word: Vec<Ladder>, c: Complex64) -> Self {
        let mut p = Self::zero();
        p.add_term(word, c);
        p
    }

    pub fn annihilator(site: usize) -> Self {
        Self::word(vec![Ladder::annihilate(site)], Complex64::new(1.0, 0.0))
    }

    pub fn creator(site: usize) -> Self {
        Self::word(vec![Ladder::create(site)], Complex64::new(1.0, 0.0))
    }

    /// `n(x) = psi^dag(x) psi(x)`.
    pub fn number(site: usize) -> Self {
        Self::word(vec![Ladder::create(site), Ladder::annihilate(site)], Complex64::new(1.0, 0.0))
    }

    /// `rho(x) = n(x) - 1/2`.
    pub fn density(site: usize) -> Self {
        Self::number(site) - Self::constant(Complex64::new(0.5, 0.0))
    }

    /// `xi(x) = psi^dag(x) + psi(x)`.
    pub fn majorana_xi(site: usize) -> Self {
        Self::creator(site) + Self::annihilator(site)
    }

    /// `eta(x) = i (psi^dag(x) - psi(x))`.
    pub fn majorana_eta(site: usize) -> Self {
        (Self::creator(site) - Self::annihilator(site)) * Complex64::new(0.0, 1.0)
    }

    pub fn add_term(&mut self, word: Vec<Ladder>, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) || has_repeated_neighbor(&word) {
            return;
        }
        match self.terms.entry(word) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == Complex64::new(0.0, 0.0) {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Ladder], Complex64)> {
        self.terms.iter().map(|(w, c)| (w.as_slice(), *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn adjoint(&self) -> Self {
        let mut p = Self::zero();
        for (w, c) in &self.terms {
            p.add_term(w.iter().rev().map(|l| l.adjoint()).collect(), c.conj());
        }
        p
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut p = Self::zero();
        for (w, v) in &self.terms {
            p.add_term(w.clone(), v * c);
        }
        p
    }

    /// Coefficient of the empty word.
    pub fn constant_term(&self) -> Complex64 {
        self.terms.get(&Vec::new()).copied().unwrap_or_default()
    }

    /// Sites touched by any word.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.terms.keys().flat_map(|w| w.iter().map(|l| l.site)).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Change in particle number, if the same for every word.
    pub fn number_change(&self) -> Option<i64> {
        let mut change = None;
        for w in self.terms.keys() {
            let d: i64 = w.iter().map(|l| if l.dagger { 1 } else { -1 }).sum();
            match change {
                None => change = Some(d),
                Some(c) if c != d => return None,
                _ => {}
            }
        }
        Some(change.unwrap_or(0))
    }

    /// True when every word has even length.
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|w| w.len() % 2 == 0)
    }

    /// Relabel sites through `map`, keeping word order.
    pub fn map_sites(&self, map: impl Fn(usize) -> usize) -> Self {
        let mut p = Self::zero();
        for (w, c) in &self.terms {
            p.add_term(w.iter().map(|l| Ladder { site: map(l.site), dagger: l.dagger }).collect(), *c);
        }
        p
    }

    /// Matrix of the polynomial with columns in `domain`.
    pub fn to_operator(&self, domain: &Arc<FockBasis>, label: impl Into<String>) -> Result<Operator> {
        let n = domain.num_sites();
        if let Some(&max) = self.support().last() {
            if max >= n {
                return Err(Error::InvalidParameter(format!("site index {max} outside a lattice of {n} sites")));
            }
        }
        let codomain = if domain.is_full() {
            domain.clone()
        } else {
            let delta = self.number_change().ok_or_else(|| {
                Error::SectorMismatch("polynomial does not have a definite particle-number change".into())
            })?;
            domain.shifted(delta)?
        };
        let mut triplets = Vec::new();
        for (j, &s) in domain.states().iter().enumerate() {
            for (w, c) in &self.terms {
                if let Some((t, neg)) = apply_word(w, s) {
                    let i = codomain.index_of(t).expect("image state missing from codomain");
                    triplets.push((i, j, if neg { -c } else { *c }));
                }
            }
        }
        Ok(Operator::from_triplets(codomain, domain.clone(), triplets, label))
    }

    /// As [`Self::to_operator`], then checked Hermitian.
    pub fn to_hermitian(&self, domain: &Arc<FockBasis>, label: impl Into<String>) -> Result<HermitianOperator> {
        HermitianOperator::new(self.to_operator(domain, label)?)
    }
}

fn has_repeated_neighbor(word: &[Ladder]) -> bool {
    word.windows(2).any(|p| p[0] == p[1])
}

impl Add for FermionPoly {
    type Output = FermionPoly;
    fn add(mut self, rhs: FermionPoly) -> FermionPoly {
        for (w, c) in rhs.terms {
            self.add_term(w, c);
        }
        self
    }
}

impl Sub for FermionPoly {
    type Output = FermionPoly;
    fn sub(self, rhs: FermionPoly) -> FermionPoly {
        self + (-rhs)
    }
}

impl Neg for FermionPoly {
    type Output = FermionPoly;
    fn neg(self) -> FermionPoly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &FermionPoly {
    type Output = FermionPoly;
    fn mul(self, rhs: &FermionPoly) -> FermionPoly {
        let mut p = FermionPoly::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                let mut w = a.clone();
                w.extend_from_slice(b);
                p.add_term(w, ca * cb);
            }
        }
        p
    }
}

impl Mul for FermionPoly {
    type Output = FermionPoly;
    fn mul(self, rhs: FermionPoly) -> FermionPoly {
        &self * &rhs
    }
}

impl Mul<Complex64> for FermionPoly {
    type Output = FermionPoly;
    fn mul(self, rhs: Complex64) -> FermionPoly {
        self.scale(rhs)
    }
}

impl Mul<f64> for FermionPoly {
    type Output = FermionPoly;
    fn mul(self, rhs: f64) -> FermionPoly {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl fmt::Display for FermionPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (w, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for l in w {
                write!(f, " {l}")?;
            }
        }
        Ok(())
    }
}

/// Which Majorana combination to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MajoranaKind {
    /// `psi^dag + psi`
    Xi,
    /// `i (psi^dag - psi)`
    Eta,
}

fn check_site(basis: &FockBasis, x: usize) -> Result<()> {
    if x >= basis.num_sites() {
        return Err(Error::InvalidParameter(format!(
            "site index {x} outside a lattice of {} sites",
            basis.num_sites()
        )));
    }
    Ok(())
}

/// `psi(x)` on `basis`. On a sector basis the result maps `N` to `N - 1`.
pub fn annihilator(basis: &Arc<FockBasis>, x: usize) -> Result<Operator> {
    check_site(basis, x)?;
    FermionPoly::annihilator(x).to_operator(basis, format!("psi({x})"))
}

/// `psi^dag(x)` on `basis`. On a sector basis the result maps `N` to `N + 1`.
pub fn creator(basis: &Arc<FockBasis>, x: usize) -> Result<Operator> {
    check_site(basis, x)?;
    FermionPoly::creator(x).to_operator(basis, format!("psi+({x})"))
}

pub fn number_operator(basis: &Arc<FockBasis>, x: usize) -> Result<HermitianOperator> {
    check_site(basis, x)?;
    FermionPoly::number(x).to_hermitian(basis, format!("n({x})"))
}

/// `rho(x) = n(x) - 1/2`.
pub fn charge_density(basis: &Arc<FockBasis>, x: usize) -> Result<HermitianOperator> {
    check_site(basis, x)?;
    FermionPoly::density(x).to_hermitian(basis, format!("rho({x})"))
}

/// Total particle number.
pub fn total_number(basis: &Arc<FockBasis>) -> HermitianOperator {
    let diag = basis.states().iter().map(|s| Complex64::new(s.count_ones() as f64, 0.0));
    HermitianOperator::new(Operator::from_diagonal(basis, diag, "N")).expect("diagonal real")
}

/// Majorana operator; needs the full basis since it changes particle number.
pub fn majorana(basis: &Arc<FockBasis>, x: usize, kind: MajoranaKind) -> Result<HermitianOperator> {
    check_site(basis, x)?;
    if !basis.is_full() {
        return Err(Error::SectorMismatch("Majorana operators need the full Fock basis".into()));
    }
    let (p, name) = match kind {
        MajoranaKind::Xi => (FermionPoly::majorana_xi(x), "xi"),
        MajoranaKind::Eta => (FermionPoly::majorana_eta(x), "eta"),
    };
    p.to_hermitian(basis, format!("{name}({x})"))
}
