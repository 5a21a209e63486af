//! Unitary transformations of the model, the antilinear reflection, and a
//! battery of conjugation identities checked as matrix equations.
//!
//! Every unitary here is a phased permutation of occupation states, so it is
//! built by tracking where each basis state goes.

use std::f64::consts::PI;
use std::ops::Deref;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{annihilator, creator, FermionPoly, FockBasis, Ladder};
use crate::hamiltonian::{
    build_free_nu3, deformed_interaction_poly, hopping_poly, hopping_poly_with_phase, kinetic_poly,
    order_parameter_poly, FieldH, ModelParams,
};
use crate::lattice::{parity, LatticeConfig, Site};
use crate::operator::Operator;

/// Tolerance for the conjugation identities.
pub const IDENTITY_TOL: f64 = 1e-10;

/// An [`Operator`] checked to satisfy `U^dag U = 1` within `1e-12`.
#[derive(Debug, Clone)]
pub struct UnitaryOperator(Operator);

impl UnitaryOperator {
    pub fn new(op: Operator) -> Result<Self> {
        let id = Operator::identity(op.cols());
        let dev = op.adjoint().try_mul(&op)?.max_abs_diff(&id)?;
        if dev > 1e-12 {
            return Err(Error::InvalidParameter(format!("operator {} is not unitary (deviation {dev:e})", op.label())));
        }
        Ok(UnitaryOperator(op))
    }

    pub fn into_inner(self) -> Operator {
        self.0
    }

    /// `U^dag A U`.
    pub fn conjugate(&self, a: &Operator) -> Result<Operator> {
        a.conjugated_by(&self.0)
    }

    pub fn then(&self, other: &UnitaryOperator) -> Result<UnitaryOperator> {
        Ok(UnitaryOperator(self.0.try_mul(&other.0)?.with_label(format!("{} {}", self.0.label(), other.0.label()))))
    }
}

impl Deref for UnitaryOperator {
    type Target = Operator;
    fn deref(&self) -> &Operator {
        &self.0
    }
}

/// Image of every basis state under a phased permutation.
#[derive(Debug, Clone)]
struct PhasedPermutation {
    images: Vec<(u64, Complex64)>,
}

impl PhasedPermutation {
    fn identity(basis: &FockBasis) -> Self {
        PhasedPermutation { images: basis.states().iter().map(|&s| (s, Complex64::new(1.0, 0.0))).collect() }
    }

    /// Apply `f` after the current map (left multiplication).
    fn then_apply(&mut self, f: impl Fn(u64) -> (u64, Complex64)) {
        for (s, c) in self.images.iter_mut() {
            let (t, d) = f(*s);
            *s = t;
            *c *= d;
        }
    }

    fn into_operator(self, basis: &Arc<FockBasis>, label: &str) -> Result<UnitaryOperator> {
        let triplets = self
            .images
            .into_iter()
            .enumerate()
            .map(|(j, (s, c))| {
                basis
                    .index_of(s)
                    .map(|i| (i, j, c))
                    .ok_or_else(|| Error::SectorMismatch(format!("{label} leaves the particle-number sector")))
            })
            .collect::<Result<Vec<_>>>()?;
        UnitaryOperator::new(Operator::from_triplets(basis.clone(), basis.clone(), triplets, label))
    }
}

/// `u(x) = [prod_{y != x} (-1)^{n(y)}] xi(x)` acting on a state.
fn u_action(x: usize, s: u64) -> (u64, Complex64) {
    let bit = 1u64 << x;
    let jw = (s & (bit - 1)).count_ones();
    let others = (s & !bit).count_ones();
    let sign = if (jw + others) % 2 == 0 { 1.0 } else { -1.0 };
    (s ^ bit, Complex64::new(sign, 0.0))
}

fn require_full(basis: &FockBasis, what: &str) -> Result<()> {
    if basis.is_full() {
        Ok(())
    } else {
        Err(Error::SectorMismatch(format!("{what} mixes particle-number sectors; use the full basis")))
    }
}

/// `prod_x u(x)` over `sites`, leftmost factor first.
fn u_product(basis: &Arc<FockBasis>, sites: &[usize], label: &str) -> Result<UnitaryOperator> {
    let mut perm = PhasedPermutation::identity(basis);
    for &x in sites.iter().rev() {
        perm.then_apply(|s| u_action(x, s));
    }
    perm.into_operator(basis, label)
}

/// `prod_{x in sites} exp(i phi n(x))`.
fn number_phase(basis: &Arc<FockBasis>, sites: impl Iterator<Item = usize>, phi: f64, label: &str) -> Result<UnitaryOperator> {
    let mask = sites.fold(0u64, |m, x| m | 1 << x);
    let diag = basis.states().iter().map(|&s| Complex64::from_polar(1.0, phi * (s & mask).count_ones() as f64));
    UnitaryOperator::new(Operator::from_diagonal(basis, diag, label))
}

fn sites_where(cfg: &LatticeConfig, pred: impl Fn(&Site) -> bool) -> Vec<usize> {
    cfg.sites().enumerate().filter(|(_, s)| pred(s)).map(|(i, _)| i).collect()
}

fn is_odd(n: i32) -> bool {
    n.rem_euclid(2) == 1
}

/// `u(x)` for a single site: `u^dag psi(x) u = psi^dag(x)`, other sites fixed.
pub fn build_site_flip(basis: &Arc<FockBasis>, x: usize) -> Result<UnitaryOperator> {
    require_full(basis, "u(x)")?;
    u_product(basis, &[x], &format!("u({x})"))
}

/// Particle-hole transformation `prod_x u(x)`.
pub fn build_particle_hole(basis: &Arc<FockBasis>) -> Result<UnitaryOperator> {
    require_full(basis, "particle-hole")?;
    let sites: Vec<usize> = (0..basis.num_sites()).collect();
    u_product(basis, &sites, "U_PH")
}

/// `U_{1,j} = prod_{x^(j) even} exp(i pi n(x) / 2)`, `axis = j` zero-based.
pub fn build_u1_axis(basis: &Arc<FockBasis>, axis: usize) -> Result<UnitaryOperator> {
    let cfg = basis.lattice();
    cfg.check_axis(axis)?;
    let sites = sites_where(cfg, |s| !is_odd(s.coords[axis]));
    number_phase(basis, sites.into_iter(), PI / 2.0, &format!("U_1,{axis}"))
}

/// `U_1 = prod_{j >= 2} U_{1,j}`.
pub fn build_u1(basis: &Arc<FockBasis>) -> Result<UnitaryOperator> {
    let cfg = basis.lattice();
    let diag: Vec<Complex64> = basis
        .states()
        .iter()
        .map(|&s| {
            let quarter_turns: i32 = (0..cfg.num_sites())
                .filter(|&x| s >> x & 1 == 1)
                .map(|x| cfg.site(x).coords[1..].iter().filter(|&&c| !is_odd(c)).count() as i32)
                .sum();
            Complex64::from_polar(1.0, PI / 2.0 * quarter_turns as f64)
        })
        .collect();
    UnitaryOperator::new(Operator::from_diagonal(basis, diag, "U_1"))
}

/// `U_odd = prod_{|x| odd} u(x)`.
pub fn build_uodd(basis: &Arc<FockBasis>) -> Result<UnitaryOperator> {
    require_full(basis, "U_odd")?;
    let sites = sites_where(basis.lattice(), |s| parity(s) == -1);
    u_product(basis, &sites, "U_odd")
}

/// `U_1 U_odd`.
pub fn build_utilde1(basis: &Arc<FockBasis>) -> Result<UnitaryOperator> {
    build_u1(basis)?.then(&build_uodd(basis)?)
}

/// `prod_{x^(2) odd} exp(-i pi n(x) / 2)`, relating the textbook free
/// Hamiltonian to the hopping and mass terms of the model.
pub fn build_ufree(basis: &Arc<FockBasis>) -> Result<UnitaryOperator> {
    let sites = sites_where(basis.lattice(), |s| is_odd(s.coords[1]));
    number_phase(basis, sites.into_iter(), -PI / 2.0, "U_free")
}

/// `U_HA(i, j) = prod_{x^(i), x^(j) odd} exp(i pi n(x))`.
pub fn build_gauge_pair(basis: &Arc<FockBasis>, i: usize, j: usize) -> Result<UnitaryOperator> {
    let cfg = basis.lattice();
    cfg.check_axis(i)?;
    cfg.check_axis(j)?;
    let sites = sites_where(cfg, |s| is_odd(s.coords[i]) && is_odd(s.coords[j]));
    number_phase(basis, sites.into_iter(), PI, &format!("U_HA({i},{j})"))
}

/// `U_HA(j -> 1) = U_HA(j, j-1) ... U_HA(j, 1)` (zero-based `axis = j`).
/// After conjugation the hopping along `axis` carries only the boundary sign.
pub fn build_gauge_moves(basis: &Arc<FockBasis>, axis: usize) -> Result<UnitaryOperator> {
    basis.lattice().check_axis(axis)?;
    let mut u = UnitaryOperator::new(Operator::identity(basis).with_label("1"))?;
    for i in (0..axis).rev() {
        u = u.then(&build_gauge_pair(basis, axis, i)?)?;
    }
    Ok(UnitaryOperator(u.0.with_label(format!("U_HA({axis}->0)"))))
}

/// `U_BC,i(L -> l) = prod_{l <= x^(i) <= L} exp(i pi n(x))`: flips the sign
/// of `psi` on the slab and moves the antiperiodic seam to the bond
/// `(l-1, l)`.
pub fn build_boundary_move(basis: &Arc<FockBasis>, axis: usize, l: i32) -> Result<UnitaryOperator> {
    let cfg = basis.lattice();
    cfg.check_axis(axis)?;
    let big_l = cfg.half_length();
    if l < -big_l + 1 || l > big_l {
        return Err(Error::InvalidParameter(format!("slab start {l} outside [{}, {big_l}]", -big_l + 1)));
    }
    let sites = sites_where(cfg, |s| s.coords[axis] >= l);
    number_phase(basis, sites.into_iter(), PI, &format!("U_BC,{axis}({big_l}->{l})"))
}

/// Hopping phase pattern after [`build_gauge_moves`] along `axis`:
/// only the boundary sign remains on `axis`, lower axes pick up
/// `(-1)^{x^(axis)}`, higher axes are unchanged.
pub fn gauge_moved_phase(cfg: &LatticeConfig, axis: usize, mu: usize, site: &Site) -> i32 {
    let boundary = |a: usize| i32::from(site.coords[a] == cfg.half_length());
    let theta = if mu == axis {
        boundary(mu)
    } else if mu < axis {
        site.coords[..mu].iter().sum::<i32>() + site.coords[axis] + boundary(mu)
    } else {
        cfg.theta(site, mu).expect("axis in range")
    };
    if is_odd(theta) {
        -1
    } else {
        1
    }
}

/// Which half of the lattice a site lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Half {
    Minus,
    Plus,
}

/// Reflection through the hyperplane `x^(axis) = offset + 1/2`.
///
/// `Lambda_-` holds the `L` layers `offset - L + 1, ..., offset` and
/// `Lambda_+` the layers `offset + 1, ..., offset + L`, both taken mod `2L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionMap {
    cfg: LatticeConfig,
    axis: usize,
    offset: i32,
}

impl ReflectionMap {
    pub fn new(cfg: LatticeConfig, axis: usize, offset: i32) -> Result<Self> {
        cfg.check_axis(axis)?;
        Ok(ReflectionMap { cfg, axis, offset })
    }

    /// The `x^(1) = 1/2` hyperplane.
    pub fn standard(cfg: LatticeConfig) -> Self {
        ReflectionMap { cfg, axis: 0, offset: 0 }
    }

    pub fn lattice(&self) -> &LatticeConfig {
        &self.cfg
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn offset(&self) -> i32 {
        self.offset
    }

    pub fn reflect_site(&self, x: usize) -> usize {
        let site = self.cfg.site(x);
        let c = site.coords[self.axis];
        let target = 2 * self.offset + 1 - c;
        self.cfg.index(&self.cfg.shift(&site, self.axis, target - c))
    }

    pub fn half(&self, x: usize) -> Half {
        let l = self.cfg.half_length();
        let c = self.cfg.site(x).coords[self.axis];
        // distance above the hyperplane, reduced into [0, 2L)
        let d = (c - self.offset - 1).rem_euclid(2 * l);
        if d < l {
            Half::Plus
        } else {
            Half::Minus
        }
    }

    pub fn sites_in(&self, half: Half) -> Vec<usize> {
        (0..self.cfg.num_sites()).filter(|&x| self.half(x) == half).collect()
    }

    /// Which half a polynomial is supported on; `None` for constants.
    pub fn support_half(&self, poly: &FermionPoly) -> Result<Option<Half>> {
        let mut side = None;
        for x in poly.support() {
            let h = self.half(x);
            match side {
                None => side = Some(h),
                Some(s) if s != h => return Err(Error::StraddlesHyperplane),
                _ => {}
            }
        }
        Ok(side)
    }
}

/// The antilinear reflection: relabel every ladder operator through the
/// site map, keep word order, conjugate coefficients.
pub fn reflect_operator(map: &ReflectionMap, a: &FermionPoly) -> Result<FermionPoly> {
    map.support_half(a)?;
    let mut out = FermionPoly::zero();
    for (w, c) in a.terms() {
        let word = w.iter().map(|l| Ladder { site: map.reflect_site(l.site), dagger: l.dagger }).collect();
        out.add_term(word, c.conj());
    }
    Ok(out)
}

/// One sampled operator in the positivity test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivitySample {
    pub terms: usize,
    pub even: bool,
    pub trace_re: f64,
    pub trace_im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityReport {
    pub seed: u64,
    pub tolerance: f64,
    /// Even samples; these are asserted.
    pub even: Vec<PositivitySample>,
    /// Odd samples; recorded, not asserted.
    pub odd: Vec<PositivitySample>,
    pub min_even_trace: f64,
    pub max_imag: f64,
    /// Largest `|tr(A th(B))|^2 - tr(A th(A)) tr(B th(B))` over consecutive
    /// even pairs, relative to the right side.
    pub max_cauchy_schwarz_excess: f64,
    pub passed: bool,
}

/// A random real-coefficient polynomial on `sites` whose words all have
/// degree of the requested parity.
pub fn random_half_polynomial(sites: &[usize], even: bool, rng: &mut impl Rng) -> FermionPoly {
    let mut p = FermionPoly::zero();
    let n_terms = rng.random_range(1..=6);
    for _ in 0..n_terms {
        let degree = if even { 2 * rng.random_range(0..=2) } else { 2 * rng.random_range(0..=1) + 1 };
        let word = (0..degree)
            .map(|_| Ladder { site: sites[rng.random_range(0..sites.len())], dagger: rng.random_bool(0.5) })
            .collect();
        p.add_term(word, Complex64::new(rng.random_range(-1.0..1.0), 0.0));
    }
    p
}

fn reflected_trace(a: &FermionPoly, b: &FermionPoly, map: &ReflectionMap, basis: &Arc<FockBasis>) -> Result<Complex64> {
    let ma = a.to_operator(basis, "A")?;
    let mb = reflect_operator(map, b)?.to_operator(basis, "th(B)")?;
    Ok(ma.try_mul(&mb)?.trace())
}

/// Draws `samples` even polynomials on `Lambda_-` and checks
/// `tr(A th(A)) >= -tol` with a vanishing imaginary part. The same number of
/// odd polynomials is evaluated and recorded without being asserted.
pub fn reflection_positivity_check(
    basis: &Arc<FockBasis>,
    map: &ReflectionMap,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<PositivityReport> {
    require_full(basis, "the reflection")?;
    let minus = map.sites_in(Half::Minus);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut even = Vec::with_capacity(samples);
    let mut odd = Vec::with_capacity(samples);
    let mut prev: Option<(FermionPoly, f64)> = None;
    let mut cs_excess = f64::NEG_INFINITY;
    for _ in 0..samples {
        let a = random_half_polynomial(&minus, true, &mut rng);
        let t = reflected_trace(&a, &a, map, basis)?;
        if let Some((b, tb)) = &prev {
            let cross = reflected_trace(&a, b, map, basis)?;
            let rhs = t.re * tb;
            cs_excess = cs_excess.max((cross.norm_sqr() - rhs) / rhs.abs().max(1.0));
        }
        prev = Some((a.clone(), t.re));
        even.push(PositivitySample { terms: a.len(), even: true, trace_re: t.re, trace_im: t.im });

        let b = random_half_polynomial(&minus, false, &mut rng);
        let t = reflected_trace(&b, &b, map, basis)?;
        odd.push(PositivitySample { terms: b.len(), even: false, trace_re: t.re, trace_im: t.im });
    }
    let min_even_trace = even.iter().map(|s| s.trace_re).fold(f64::INFINITY, f64::min);
    let max_imag = even.iter().map(|s| s.trace_im.abs()).fold(0.0, f64::max);
    let passed = even.iter().all(|s| s.trace_re >= -tol && s.trace_im.abs() <= tol * s.trace_re.abs().max(1.0))
        && cs_excess <= tol;
    Ok(PositivityReport {
        seed,
        tolerance: tol,
        even,
        odd,
        min_even_trace,
        max_imag,
        max_cauchy_schwarz_excess: if samples > 1 { cs_excess } else { 0.0 },
        passed,
    })
}

/// Result of one matrix identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub deviation: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, deviation: f64, tol: f64) -> Self {
        IdentityCheck { name: name.into(), deviation, passed: deviation <= tol }
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn pair(x: usize, y: usize) -> FermionPoly {
    FermionPoly::word(vec![Ladder::create(x), Ladder::create(y)], re(1.0))
}

fn hop(x: usize, y: usize) -> FermionPoly {
    crate::hamiltonian::hop(x, y)
}

fn boundary_sign(cfg: &LatticeConfig, site: &Site, axis: usize) -> f64 {
    if site.coords[axis] == cfg.half_length() {
        -1.0
    } else {
        1.0
    }
}

/// `U_1^dag H_{K,j} U_1` for `j >= 2`: real hopping with
/// `(-1)^{x^(1) + ... + x^(j)}` and the boundary sign.
pub fn u1_hopping_form(cfg: &LatticeConfig, kappa: f64, axis: usize) -> FermionPoly {
    let mut p = FermionPoly::zero();
    for (x, s) in cfg.sites().enumerate() {
        let y = cfg.forward_neighbor(x, axis);
        let sum: i32 = s.coords[..=axis].iter().sum();
        let c = kappa * if is_odd(sum) { -1.0 } else { 1.0 } * boundary_sign(cfg, &s, axis);
        p = p + (hop(x, y) + hop(y, x)) * c;
    }
    p
}

/// `U~_1^dag H_{K,j} U~_1` for `j >= 2`: pairing terms with
/// `(-1)^{x^(j+1) + ... + x^(nu)}` and the boundary sign.
pub fn utilde1_pairing_form(cfg: &LatticeConfig, kappa: f64, axis: usize) -> FermionPoly {
    let mut p = FermionPoly::zero();
    for (x, s) in cfg.sites().enumerate() {
        let y = cfg.forward_neighbor(x, axis);
        let sum: i32 = s.coords[axis + 1..].iter().sum();
        let c = kappa * if is_odd(sum) { -1.0 } else { 1.0 } * boundary_sign(cfg, &s, axis);
        let term = pair(x, y);
        p = p + (term.clone() + term.adjoint()) * c;
    }
    p
}

/// `U~_1^dag H_{K,1} U~_1 = (i kappa / 2) sum_x (+-) [xi(x) xi(x+e1) - eta(x) eta(x+e1)]`.
pub fn utilde1_majorana_form(cfg: &LatticeConfig, kappa: f64) -> FermionPoly {
    let mut p = FermionPoly::zero();
    for (x, s) in cfg.sites().enumerate() {
        let y = cfg.forward_neighbor(x, 0);
        let c = Complex64::new(0.0, kappa / 2.0 * boundary_sign(cfg, &s, 0));
        let xx = &FermionPoly::majorana_xi(x) * &FermionPoly::majorana_xi(y);
        let ee = &FermionPoly::majorana_eta(x) * &FermionPoly::majorana_eta(y);
        p = p + (xx - ee) * c;
    }
    p
}

/// `(g/2) sum_{x,mu} [rho(x) - rho(x+e_mu) + h^(mu)(x)]^2 - g nu |Lambda| / 4`.
pub fn difference_interaction_form(cfg: &LatticeConfig, g: f64, field: &FieldH) -> FermionPoly {
    let n = cfg.num_sites() as f64;
    let mut p = FermionPoly::constant(re(-g * cfg.nu() as f64 * n / 4.0));
    for x in 0..cfg.num_sites() {
        for mu in 0..cfg.nu() {
            let y = cfg.forward_neighbor(x, mu);
            let b = FermionPoly::density(x) - FermionPoly::density(y) + FermionPoly::constant(re(field.get(mu, x)));
            p = p + (&b * &b) * (g / 2.0);
        }
    }
    p
}

fn diff(a: &Operator, b: &Operator) -> Result<f64> {
    a.max_abs_diff(b)
}

/// Canonical anticommutation relations, `rho^2 = 1/4` and the Majorana
/// relations on the full basis of `cfg`, each as the largest matrix entry of
/// the polynomial difference.
pub fn verify_algebra(cfg: LatticeConfig, tol: f64) -> Result<Vec<IdentityCheck>> {
    let basis = Arc::new(FockBasis::full(cfg)?);
    let n = cfg.num_sites();
    let residual = |p: FermionPoly| -> Result<f64> { Ok(p.to_operator(&basis, "residual")?.max_abs()) };
    let anti = |a: &FermionPoly, b: &FermionPoly| a * b + b * a;
    let delta = |x: usize, y: usize, v: f64| FermionPoly::constant(re(if x == y { v } else { 0.0 }));
    let psi: Vec<FermionPoly> = (0..n).map(FermionPoly::annihilator).collect();
    let psid: Vec<FermionPoly> = (0..n).map(FermionPoly::creator).collect();
    let xi: Vec<FermionPoly> = (0..n).map(FermionPoly::majorana_xi).collect();
    let eta: Vec<FermionPoly> = (0..n).map(FermionPoly::majorana_eta).collect();
    let mut worst = [0.0f64; 6];
    for x in 0..n {
        worst[2] = worst[2].max(residual(&FermionPoly::density(x) * &FermionPoly::density(x) - FermionPoly::constant(re(0.25)))?);
        for y in 0..n {
            worst[0] = worst[0].max(residual(anti(&psi[x], &psid[y]) - delta(x, y, 1.0))?);
            worst[1] = worst[1].max(residual(anti(&psi[x], &psi[y]))?);
            worst[3] = worst[3].max(residual(anti(&xi[x], &xi[y]) - delta(x, y, 2.0))?);
            worst[4] = worst[4].max(residual(anti(&eta[x], &eta[y]) - delta(x, y, 2.0))?);
            worst[5] = worst[5].max(residual(anti(&xi[x], &eta[y]))?);
        }
    }
    let names = [
        "{psi(x), psi^dag(y)} = delta",
        "{psi(x), psi(y)} = 0",
        "rho(x)^2 = 1/4",
        "{xi(x), xi(y)} = 2 delta",
        "{eta(x), eta(y)} = 2 delta",
        "{xi(x), eta(y)} = 0",
    ];
    Ok(names.iter().zip(worst).map(|(name, dev)| IdentityCheck::new(*name, dev, tol)).collect())
}

/// Checks every conjugation identity of the model on the full basis of
/// `cfg` (`|Lambda| <= 16`). `field` is used for the deformed interaction.
pub fn verify_identities(cfg: LatticeConfig, params: &ModelParams, field: &FieldH, tol: f64) -> Result<Vec<IdentityCheck>> {
    let basis = Arc::new(FockBasis::full(cfg)?);
    let b = &basis;
    let n = cfg.num_sites();
    let mut out = Vec::new();

    let uph = build_particle_hole(b)?;
    let uodd = build_uodd(b)?;
    let u1 = build_u1(b)?;
    let ut = build_utilde1(b)?;
    let psi: Vec<Operator> = (0..n).map(|x| annihilator(b, x)).collect::<Result<_>>()?;
    let psid: Vec<Operator> = (0..n).map(|x| creator(b, x)).collect::<Result<_>>()?;

    let mut dev = 0.0f64;
    for x in 0..n {
        dev = dev.max(diff(&uph.conjugate(&psi[x])?, &psid[x])?);
    }
    out.push(IdentityCheck::new("particle-hole: psi(x) -> psi^dag(x)", dev, tol));

    let mut dev = 0.0f64;
    for x in 0..n {
        let rho = FermionPoly::density(x).to_operator(b, "rho")?;
        dev = dev.max(diff(&uph.conjugate(&rho)?, &-&rho)?);
    }
    out.push(IdentityCheck::new("particle-hole: rho(x) -> -rho(x)", dev, tol));

    let o = order_parameter_poly(&cfg).to_operator(b, "O")?;
    out.push(IdentityCheck::new("particle-hole: O -> -O", diff(&uph.conjugate(&o)?, &-&o)?, tol));

    let h0 = crate::hamiltonian::hamiltonian_poly(&cfg, &params.with_mass(0.0)).to_operator(b, "H(0)")?;
    out.push(IdentityCheck::new("particle-hole: H(0) invariant", diff(&uph.conjugate(&h0)?, &h0)?, tol));

    let mut dev = 0.0f64;
    for x in 0..n {
        let expected = if parity(&cfg.site(x)) == -1 { &psid[x] } else { &psi[x] };
        dev = dev.max(diff(&uodd.conjugate(&psi[x])?, expected)?);
    }
    out.push(IdentityCheck::new("U_odd: psi -> psi^dag on odd sites", dev, tol));

    let hk1 = hopping_poly(&cfg, params.kappa, 0)?.to_operator(b, "H_K1")?;
    out.push(IdentityCheck::new("U_1: H_K1 invariant", diff(&u1.conjugate(&hk1)?, &hk1)?, tol));

    for j in 1..cfg.nu() {
        let hkj = hopping_poly(&cfg, params.kappa, j)?.to_operator(b, "H_Kj")?;
        let expected = u1_hopping_form(&cfg, params.kappa, j).to_operator(b, "")?;
        out.push(IdentityCheck::new(format!("U_1: H_K{} -> real staggered hopping", j + 1), diff(&u1.conjugate(&hkj)?, &expected)?, tol));
        let expected = utilde1_pairing_form(&cfg, params.kappa, j).to_operator(b, "")?;
        out.push(IdentityCheck::new(format!("U~_1: H_K{} -> pairing form", j + 1), diff(&ut.conjugate(&hkj)?, &expected)?, tol));
    }

    let expected = utilde1_majorana_form(&cfg, params.kappa).to_operator(b, "")?;
    out.push(IdentityCheck::new("U~_1: H_K1 -> Majorana form", diff(&ut.conjugate(&hk1)?, &expected)?, tol));

    let hint = deformed_interaction_poly(&cfg, params.g, field).to_operator(b, "H_int(h)")?;
    let expected = difference_interaction_form(&cfg, params.g, field).to_operator(b, "")?;
    out.push(IdentityCheck::new("U~_1: H_int(h) -> difference form", diff(&ut.conjugate(&hint)?, &expected)?, tol));

    let total_rho = (0..n).fold(FermionPoly::zero(), |a, x| a + FermionPoly::density(x)).to_operator(b, "")?;
    out.push(IdentityCheck::new("U~_1: O -> sum rho", diff(&ut.conjugate(&o)?, &total_rho)?, tol));

    if cfg.nu() == 3 {
        let hfree = build_free_nu3(b, params.kappa, params.mass)?;
        let uf = build_ufree(b)?;
        let expected = (kinetic_poly(&cfg, params.kappa) + order_parameter_poly(&cfg) * params.mass).to_operator(b, "")?;
        out.push(IdentityCheck::new("U_free: H_free -> H_K + m O", diff(&uf.conjugate(&hfree)?, &expected)?, tol));
    }

    let hk = kinetic_poly(&cfg, params.kappa).to_operator(b, "H_K")?;
    for j in 1..cfg.nu() {
        let u = build_gauge_moves(b, j)?;
        let mut expected = FermionPoly::zero();
        for mu in 0..cfg.nu() {
            expected = expected + hopping_poly_with_phase(&cfg, params.kappa, mu, |s| gauge_moved_phase(&cfg, j, mu, s))?;
        }
        let expected = expected.to_operator(b, "")?;
        out.push(IdentityCheck::new(format!("U_HA({}->1): gauge-moved hopping phases", j + 1), diff(&u.conjugate(&hk)?, &expected)?, tol));
    }

    let l = cfg.half_length();
    for axis in 0..cfg.nu() {
        for start in [l, 1, -l + 1] {
            let u = build_boundary_move(b, axis, start)?;
            let mut dev = 0.0f64;
            for x in 0..n {
                let sign = if cfg.site(x).coords[axis] >= start { -1.0 } else { 1.0 };
                dev = dev.max(diff(&u.conjugate(&psi[x])?, &(&psi[x] * sign))?);
            }
            dev = dev.max(diff(&u.try_mul(&u)?, &Operator::identity(b))?);
            out.push(IdentityCheck::new(format!("U_BC,{}({l}->{start}): slab sign flip, involution", axis + 1), dev, tol));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{majorana, MajoranaKind};

    fn full(nu: usize, l: i32) -> Arc<FockBasis> {
        Arc::new(FockBasis::full(LatticeConfig::new(nu, l).unwrap()).unwrap())
    }

    #[test]
    fn identities_hold_on_small_lattices() {
        for (nu, l) in [(2, 1), (3, 1)] {
            let cfg = LatticeConfig::new(nu, l).unwrap();
            let params = ModelParams::new(0.7, 0.4, 1.3, 1.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let field = FieldH::random(&cfg, 0.8, &mut rng);
            for check in verify_identities(cfg, &params, &field, IDENTITY_TOL).unwrap() {
                assert!(check.passed, "{nu}d: {} deviates by {:e}", check.name, check.deviation);
            }
        }
    }

    #[test]
    fn sector_bases_rejected_for_sector_mixing_unitaries() {
        let cfg = LatticeConfig::new(2, 1).unwrap();
        let sec = Arc::new(FockBasis::sector(cfg, 2).unwrap());
        assert!(matches!(build_particle_hole(&sec), Err(Error::SectorMismatch(_))));
        assert!(matches!(build_uodd(&sec), Err(Error::SectorMismatch(_))));
        assert!(build_u1(&sec).is_ok());
        let b = full(2, 1);
        assert!(matches!(build_gauge_moves(&b, 2), Err(Error::DirectionOutOfRange { .. })));
        assert!(matches!(build_boundary_move(&b, 5, 1), Err(Error::DirectionOutOfRange { .. })));
    }

    #[test]
    fn boundary_move_is_diagonal_signs() {
        let b = full(2, 1);
        let u = build_boundary_move(&b, 0, 1).unwrap();
        let m = u.to_dense();
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                let v = m[(i, j)];
                if i == j {
                    assert!((v.norm() - 1.0).abs() < 1e-15 && v.im.abs() < 1e-15);
                } else {
                    assert_eq!(v.norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn reflection_map_geometry() {
        let cfg = LatticeConfig::new(2, 2).unwrap();
        for axis in 0..2 {
            for offset in -1..=2 {
                let r = ReflectionMap::new(cfg, axis, offset).unwrap();
                let minus = r.sites_in(Half::Minus);
                assert_eq!(minus.len(), cfg.num_sites() / 2);
                for x in 0..cfg.num_sites() {
                    assert_eq!(r.reflect_site(r.reflect_site(x)), x);
                    assert_ne!(r.half(x), r.half(r.reflect_site(x)));
                }
            }
        }
        let r = ReflectionMap::standard(cfg);
        let x = cfg.index(&Site::new(vec![0, 1]));
        assert_eq!(cfg.site(r.reflect_site(x)).coords, vec![1, 1]);
        let x = cfg.index(&Site::new(vec![-1, 2]));
        assert_eq!(cfg.site(r.reflect_site(x)).coords, vec![2, 2]);
        assert_eq!(r.half(x), Half::Minus);
    }

    #[test]
    fn reflection_is_antilinear_and_maps_majoranas() {
        let cfg = LatticeConfig::new(2, 1).unwrap();
        let r = ReflectionMap::standard(cfg);
        let x = r.sites_in(Half::Minus)[0];
        let rx = r.reflect_site(x);
        assert_eq!(reflect_operator(&r, &FermionPoly::annihilator(x)).unwrap(), FermionPoly::annihilator(rx));
        let c = Complex64::new(0.3, -1.2);
        let a = FermionPoly::number(x) * c;
        assert_eq!(reflect_operator(&r, &a).unwrap(), FermionPoly::number(rx) * c.conj());
        assert_eq!(reflect_operator(&r, &FermionPoly::majorana_xi(x)).unwrap(), FermionPoly::majorana_xi(rx));
        assert_eq!(reflect_operator(&r, &FermionPoly::majorana_eta(x)).unwrap(), -FermionPoly::majorana_eta(rx));
        let straddle = FermionPoly::number(x) + FermionPoly::number(rx);
        assert!(matches!(reflect_operator(&r, &straddle), Err(Error::StraddlesHyperplane)));
        let real = FermionPoly::number(x) * 2.0 + &FermionPoly::creator(x) * &FermionPoly::annihilator(r.sites_in(Half::Minus)[1]);
        assert_eq!(reflect_operator(&r, &reflect_operator(&r, &real).unwrap()).unwrap(), real);
    }

    #[test]
    fn reflected_density_trace_vanishes_and_identity_is_positive() {
        let b = full(2, 1);
        let r = ReflectionMap::standard(*b.lattice());
        let x = r.sites_in(Half::Minus)[0];
        let rho = FermionPoly::density(x);
        assert!(reflected_trace(&rho, &rho, &r, &b).unwrap().norm() < 1e-14);
        let id = FermionPoly::identity();
        assert!((reflected_trace(&id, &id, &r, &b).unwrap().re - 16.0).abs() < 1e-14);
    }

    #[test]
    fn random_even_operators_are_reflection_positive() {
        let b = full(2, 1);
        let r = ReflectionMap::standard(*b.lattice());
        let rep = reflection_positivity_check(&b, &r, 50, 11, 1e-10).unwrap();
        assert!(rep.passed, "min {:e}", rep.min_even_trace);
        assert_eq!(rep.odd.len(), 50);
    }

    #[test]
    fn site_flip_exchanges_majorana_roles() {
        let b = full(2, 1);
        let u = build_site_flip(&b, 2).unwrap();
        let xi = majorana(&b, 2, MajoranaKind::Xi).unwrap();
        let eta = majorana(&b, 2, MajoranaKind::Eta).unwrap();
        assert!(u.conjugate(&xi).unwrap().max_abs_diff(&xi).unwrap() < 1e-14);
        assert!(u.conjugate(&eta).unwrap().max_abs_diff(&-&*eta).unwrap() < 1e-14);
    }

    #[test]
    fn canonical_algebra_holds() {
        for nu in [2, 3] {
            let checks = verify_algebra(LatticeConfig::new(nu, 1).unwrap(), 1e-12).unwrap();
            assert_eq!(checks.len(), 6);
            assert!(checks.iter().all(|c| c.passed), "{checks:?}");
        }
    }
}
