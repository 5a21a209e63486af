//! Parameter scans: configuration, per-point verification suites and
//! record output.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    gaussian_domination_check, lro_chain_from_table, lro_parameter, mode_reports, mode_table, sum_rule_check,
    BoundReport, CheckKind, ModeData,
};
use crate::continuum::{
    bz_constants, chiral_selection_check, compare_with_closed_form, dirac_form_scan, gamma_identities,
    sgn_selection_rule, theorem_region, BzConstants, QuadratureSpec, CONTINUUM_TOL,
};
use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::hamiltonian::{build_hamiltonian, build_order_parameter, FieldH, ModelParams};
use crate::lattice::LatticeConfig;
use crate::operator::DENSE_LIMIT;
use crate::spectra::{diagonalize, ThermalState};
use crate::symmetry::{reflection_positivity_check, verify_algebra, verify_identities, IdentityCheck, ReflectionMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Bounds,
    Continuum,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }

    fn needs_fock(self) -> bool {
        self.includes(Suite::Identities) || self.includes(Suite::Bounds)
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "bounds" => Ok(Suite::Bounds),
            "continuum" => Ok(Suite::Continuum),
            "all" => Ok(Suite::All),
            other => Err(Error::Config(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub nu: usize,
    #[serde(rename = "L")]
    pub half_length: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub g: Vec<f64>,
    pub kappa: Vec<f64>,
    pub beta: Vec<f64>,
    pub mass: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { g: vec![1.0], kappa: vec![0.5], beta: vec![10.0], mass: vec![0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    /// Random bond fields per point for Gaussian domination.
    pub gaussian_fields: usize,
    pub field_scale: f64,
    /// Random half-lattice operators per point for reflection positivity.
    pub reflection: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Samples { gaussian_fields: 10, field_scale: 0.5, reflection: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    /// Cap on the full Fock dimension `2^|Lambda|`.
    pub max_dim: usize,
    /// Cap on any block handed to the dense eigensolver.
    pub max_block_dim: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_dim: 1 << 16, max_block_dim: DENSE_LIMIT }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Default for Output {
    fn default() -> Self {
        Output { path: None, format: Format::Csv }
    }
}

/// A scan: lattices times the Cartesian product of the parameter grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub seed: u64,
    pub suite: Suite,
    /// Relative tolerance for inequalities; library defaults when absent.
    pub tolerance: Option<f64>,
    /// Absolute tolerance for operator identities.
    pub identity_tolerance: f64,
    pub lattice: Vec<LatticeSpec>,
    pub grid: Grid,
    pub samples: Samples,
    pub limits: Limits,
    pub output: Output,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            seed: 0,
            suite: Suite::All,
            tolerance: None,
            identity_tolerance: 1e-10,
            lattice: vec![LatticeSpec { nu: 2, half_length: 1 }],
            grid: Grid::default(),
            samples: Samples::default(),
            limits: Limits::default(),
            output: Output::default(),
        }
    }
}

/// Command-line values that replace the corresponding config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub suite: Option<Suite>,
    pub nu: Option<usize>,
    pub half_length: Option<i32>,
    pub g: Option<Vec<f64>>,
    pub kappa: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub mass: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub tolerance: Option<f64>,
}

impl ScanConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScanConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if o.nu.is_some() || o.half_length.is_some() {
            let first = self.lattice.first().copied().unwrap_or(LatticeSpec { nu: 2, half_length: 1 });
            self.lattice = vec![LatticeSpec {
                nu: o.nu.unwrap_or(first.nu),
                half_length: o.half_length.unwrap_or(first.half_length),
            }];
        }
        for (slot, value) in [
            (&mut self.grid.g, &o.g),
            (&mut self.grid.kappa, &o.kappa),
            (&mut self.grid.beta, &o.beta),
            (&mut self.grid.mass, &o.mass),
        ] {
            if let Some(v) = value {
                *slot = v.clone();
            }
        }
        if let Some(s) = o.suite {
            self.suite = s;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.out {
            self.output.path = Some(p.clone());
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if let Some(t) = o.tolerance {
            self.tolerance = Some(t);
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        for l in &self.lattice {
            LatticeConfig::new(l.nu, l.half_length).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("tolerance must be a non-negative number, got {t}")));
            }
        }
        if !(self.identity_tolerance >= 0.0) {
            return Err(Error::Config("identity_tolerance must be non-negative".into()));
        }
        if !(self.samples.field_scale >= 0.0) {
            return Err(Error::Config("field_scale must be non-negative".into()));
        }
        Ok(())
    }

    /// Parameter points in lattice-major, then `g, kappa, beta, mass` order.
    pub fn points(&self) -> Vec<(LatticeSpec, ModelParams)> {
        let mut out = Vec::new();
        for &l in &self.lattice {
            for &g in &self.grid.g {
                for &kappa in &self.grid.kappa {
                    for &beta in &self.grid.beta {
                        for &mass in &self.grid.mass {
                            out.push((l, ModelParams { kappa, mass, g, beta }));
                        }
                    }
                }
            }
        }
        out
    }
}

/// One pass/fail line of a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: Suite,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckRecord {
    fn from_bound(suite: Suite, r: &BoundReport, tol: Option<f64>) -> Self {
        let (tolerance, passed) = match (r.kind, tol) {
            (CheckKind::UpperBound, Some(t)) => (t, r.lhs <= r.rhs + t * r.rhs.abs().max(1.0)),
            _ => (r.tolerance, r.satisfied),
        };
        CheckRecord { suite, name: r.name.clone(), lhs: r.lhs, rhs: r.rhs, slack: r.slack, tolerance, passed }
    }

    fn from_identity(suite: Suite, c: &IdentityCheck, tol: f64) -> Self {
        Self::deviation(suite, &c.name, c.deviation, tol)
    }

    fn deviation(suite: Suite, name: &str, dev: f64, tol: f64) -> Self {
        CheckRecord {
            suite,
            name: name.to_string(),
            lhs: dev,
            rhs: 0.0,
            slack: 0.0 - dev,
            tolerance: tol,
            passed: dev <= tol,
        }
    }
}

/// Gibbs-state observables at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub log_z: f64,
    pub energy: f64,
    pub ground_energy: f64,
    pub m_lro: f64,
    /// `<O> / |Lambda|`.
    pub magnetization: f64,
    /// `1/4 - correction/2` from the long-range-order chain; absent at `g = 0`.
    pub lro_lower_bound: Option<f64>,
    pub modes: Vec<ModeData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub nu: usize,
    #[serde(rename = "L")]
    pub half_length: i32,
    pub params: ModelParams,
    /// Seed of every random draw at this point.
    pub seed: u64,
    pub observables: Option<Observables>,
    pub checks: Vec<CheckRecord>,
    /// Derived numbers that are not checks.
    pub info: BTreeMap<String, f64>,
    pub errors: Vec<String>,
    pub passed: bool,
    #[serde(skip)]
    pub wall_time_s: f64,
}

pub struct ScanOutcome {
    pub records: Vec<ScanRecord>,
    /// Every check of every record passed.
    pub passed: bool,
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Refuses lattices whose Fock space or largest half-filled block exceeds
/// the caps.
pub fn check_caps(cfg: &LatticeConfig, limits: &Limits) -> Result<()> {
    let n = cfg.num_sites();
    if n > 62 {
        return Err(Error::InvalidLattice(format!("Fock dimension 2^{n} exceeds the limit {}", limits.max_dim)));
    }
    if (1usize << n) > limits.max_dim {
        return Err(Error::DimensionTooLarge { dim: 1 << n, limit: limits.max_dim });
    }
    let block = binomial(n, n / 2);
    if block > limits.max_block_dim {
        return Err(Error::DimensionTooLarge { dim: block, limit: limits.max_block_dim });
    }
    Ok(())
}

struct PointContext<'a> {
    config: &'a ScanConfig,
    integrals: &'a HashMap<usize, std::result::Result<BzConstants, String>>,
}

/// Runs the configured suites at every point. Per-point failures to
/// compute become error entries; the scan itself only fails on bad config.
pub fn run_scan(config: &ScanConfig) -> Result<ScanOutcome> {
    config.validate()?;
    let points = config.points();
    let mut integrals = HashMap::new();
    if config.suite.includes(Suite::Continuum) && !points.is_empty() {
        for l in &config.lattice {
            integrals
                .entry(l.nu)
                .or_insert_with(|| bz_constants(l.nu, &QuadratureSpec::default()).map_err(|e| e.to_string()));
        }
    }
    let ctx = PointContext { config, integrals: &integrals };
    let records: Vec<ScanRecord> =
        points.par_iter().enumerate().map(|(i, (l, p))| run_point(&ctx, *l, *p, point_seed(config.seed, i))).collect();
    let passed = records.iter().all(|r| r.passed);
    Ok(ScanOutcome { records, passed })
}

fn run_point(ctx: &PointContext<'_>, l: LatticeSpec, params: ModelParams, seed: u64) -> ScanRecord {
    let start = Instant::now();
    let mut rec = ScanRecord {
        nu: l.nu,
        half_length: l.half_length,
        params,
        seed,
        observables: None,
        checks: Vec::new(),
        info: BTreeMap::new(),
        errors: Vec::new(),
        passed: true,
        wall_time_s: 0.0,
    };
    let suite = ctx.config.suite;
    let cfg = match LatticeConfig::new(l.nu, l.half_length) {
        Ok(c) => c,
        Err(e) => {
            rec.errors.push(e.to_string());
            return rec;
        }
    };
    if let Err(e) = params.validate() {
        rec.errors.push(e.to_string());
    } else if suite.needs_fock() {
        match check_caps(&cfg, &ctx.config.limits) {
            Err(e) => rec.errors.push(format!("lattice nu={} L={}: {e}", l.nu, l.half_length)),
            Ok(()) => {
                if suite.includes(Suite::Identities) {
                    if let Err(e) = identities_suite(ctx.config, cfg, &params, seed, &mut rec) {
                        rec.errors.push(format!("identities: {e}"));
                    }
                }
                if suite.includes(Suite::Bounds) {
                    if let Err(e) = bounds_suite(ctx.config, cfg, &params, seed, &mut rec) {
                        rec.errors.push(format!("bounds: {e}"));
                    }
                }
            }
        }
    }
    if suite.includes(Suite::Continuum) {
        if let Err(e) = continuum_suite(ctx, cfg, &params, &mut rec) {
            rec.errors.push(format!("continuum: {e}"));
        }
    }
    rec.passed = rec.checks.iter().all(|c| c.passed);
    rec.wall_time_s = start.elapsed().as_secs_f64();
    rec
}

fn identities_suite(
    config: &ScanConfig,
    cfg: LatticeConfig,
    params: &ModelParams,
    seed: u64,
    rec: &mut ScanRecord,
) -> Result<()> {
    let tol = config.identity_tolerance;
    for c in verify_algebra(cfg, tol)? {
        rec.checks.push(CheckRecord::from_identity(Suite::Identities, &c, tol));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field = FieldH::random(&cfg, config.samples.field_scale, &mut rng);
    for c in verify_identities(cfg, params, &field, tol)? {
        rec.checks.push(CheckRecord::from_identity(Suite::Identities, &c, tol));
    }
    let basis = Arc::new(FockBasis::full(cfg)?);
    let rp = reflection_positivity_check(&basis, &ReflectionMap::standard(cfg), config.samples.reflection, seed, tol)?;
    rec.checks.push(CheckRecord {
        suite: Suite::Identities,
        name: "reflection positivity, min tr(A theta(A))".into(),
        lhs: -rp.min_even_trace,
        rhs: tol,
        slack: rp.min_even_trace + tol,
        tolerance: tol,
        passed: rp.passed,
    });
    rec.info.insert("reflection max Cauchy-Schwarz excess".into(), rp.max_cauchy_schwarz_excess);
    Ok(())
}

fn bounds_suite(config: &ScanConfig, cfg: LatticeConfig, params: &ModelParams, seed: u64, rec: &mut ScanRecord) -> Result<()> {
    let tol = config.tolerance;
    let basis = Arc::new(FockBasis::full(cfg)?);
    let h = build_hamiltonian(&basis, params)?;
    let dec = diagonalize(&h)?;
    let st = ThermalState::new(&dec, params.beta)?;
    let n = cfg.num_sites() as f64;

    rec.checks.push(CheckRecord::from_bound(Suite::Bounds, &sum_rule_check(&st)?, None));

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut fields = vec![FieldH::zero(&cfg)];
    fields.extend((0..config.samples.gaussian_fields).map(|_| FieldH::random(&cfg, config.samples.field_scale, &mut rng)));
    for (i, f) in fields.iter().enumerate() {
        let mut r = gaussian_domination_check(&basis, params, f)?;
        r.name = format!("{} #{i}", r.name);
        rec.checks.push(CheckRecord::from_bound(Suite::Bounds, &r, tol));
    }

    let table = mode_table(&st, &h)?;
    for r in mode_reports(&table, &cfg, params) {
        rec.checks.push(CheckRecord::from_bound(Suite::Bounds, &r, tol));
    }
    let mut lower_bound = None;
    if params.g > 0.0 {
        let chain = lro_chain_from_table(&table, cfg.num_sites(), params)?;
        rec.checks.push(CheckRecord::from_bound(Suite::Bounds, &chain.report, tol));
        let mut implied = BoundReport::upper("m_LRO^2 lower bound", chain.lower_bound, chain.m_lro_squared, 0.0);
        implied.tolerance = crate::bounds::BOUND_REL_TOL;
        implied.satisfied = chain.bound_holds;
        rec.checks.push(CheckRecord::from_bound(Suite::Bounds, &implied, tol));
        lower_bound = Some(chain.lower_bound);
    }
    let o = build_order_parameter(&basis)?;
    rec.observables = Some(Observables {
        log_z: st.log_partition_function(),
        energy: st.energy(),
        ground_energy: dec.ground_energy()?,
        m_lro: lro_parameter(&st)?,
        magnetization: st.expectation(&o)?.re / n,
        lro_lower_bound: lower_bound,
        modes: table,
    });
    Ok(())
}

fn continuum_suite(ctx: &PointContext<'_>, cfg: LatticeConfig, params: &ModelParams, rec: &mut ScanRecord) -> Result<()> {
    let tol = CONTINUUM_TOL;
    let s = Suite::Continuum;
    for (name, dev) in gamma_identities() {
        rec.checks.push(CheckRecord::deviation(s, name, dev, 0.0));
    }
    let sgn = sgn_selection_rule();
    rec.checks.push(CheckRecord::deviation(s, "sgn selection rule violations", sgn.violations as f64, 0.0));

    if cfg.nu() == 3 {
        let spec = compare_with_closed_form(&cfg, params.kappa, params.mass)?;
        let mut c = CheckRecord::deviation(s, "one-particle spectrum vs closed form", spec.max_deviation, tol);
        c.passed = spec.passed;
        rec.checks.push(c);
        let dirac = dirac_form_scan(&cfg, params.kappa, params.mass)?;
        let worst = dirac
            .iter()
            .map(|r| r.block_residual.max(r.leakage).max(r.eigen_residual))
            .fold(0.0, f64::max);
        let mut c = CheckRecord::deviation(s, "Dirac form at small momenta", worst, tol);
        c.passed = dirac.iter().all(|r| r.passed);
        rec.checks.push(c);
        if params.beta.is_finite() {
            let chiral = chiral_selection_check(&cfg, params.kappa, params.mass, params.beta, tol)?;
            if params.mass == 0.0 {
                rec.checks.push(CheckRecord::deviation(s, "massless chiral selection", chiral.max_opposite, tol));
            } else {
                rec.info.insert("chiral opposite-sign max".into(), chiral.max_opposite);
            }
        }
    }

    if params.g > 0.0 {
        match ctx.integrals.get(&cfg.nu()) {
            Some(Ok(ints)) => {
                rec.info.insert("J_nu".into(), ints.j_nu);
                if let Some(i) = ints.i_nu {
                    rec.info.insert("I_nu".into(), i);
                }
                let gs = theorem_region(params.kappa, params.g, None, cfg.nu(), ints)?;
                rec.info.insert("region ground-state bound".into(), gs.lower_bound);
                rec.info.insert("region threshold kappa/g".into(), gs.threshold);
                match theorem_region(params.kappa, params.g, Some(params.beta), cfg.nu(), ints) {
                    Ok(ft) => {
                        rec.info.insert("region finite-beta bound".into(), ft.lower_bound);
                    }
                    Err(Error::FiniteTemperatureUnavailable { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            Some(Err(e)) => return Err(Error::InvalidParameter(e.clone())),
            None => {}
        }
    }
    Ok(())
}

fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Identities => "identities",
        Suite::Bounds => "bounds",
        Suite::Continuum => "continuum",
        Suite::All => "all",
    }
}

const BASE_COLUMNS: [&str; 17] = [
    "nu",
    "L",
    "g",
    "kappa",
    "beta",
    "mass",
    "seed",
    "passed",
    "n_checks",
    "n_failed",
    "errors",
    "log_z",
    "energy",
    "ground_energy",
    "m_lro",
    "magnetization",
    "lro_lower_bound",
];

fn flat_fields(r: &ScanRecord) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if let Some(o) = &r.observables {
        for m in &o.modes {
            let p: Vec<String> = m.numerators.iter().map(|n| n.to_string()).collect();
            out.push((format!("C_p[{}]", p.join(" ")), fmt_float(m.double_commutator)));
        }
    }
    for (k, v) in &r.info {
        out.push((k.clone(), fmt_float(*v)));
    }
    for c in &r.checks {
        let key = format!("{}: {}", suite_name(c.suite), c.name);
        out.push((format!("{key} slack"), fmt_float(c.slack)));
        out.push((format!("{key} ok"), c.passed.to_string()));
    }
    out
}

fn base_row(r: &ScanRecord) -> Vec<String> {
    let obs = r.observables.as_ref();
    let f = |g: fn(&Observables) -> f64| obs.map(|o| fmt_float(g(o))).unwrap_or_default();
    vec![
        r.nu.to_string(),
        r.half_length.to_string(),
        fmt_float(r.params.g),
        fmt_float(r.params.kappa),
        fmt_float(r.params.beta),
        fmt_float(r.params.mass),
        r.seed.to_string(),
        r.passed.to_string(),
        r.checks.len().to_string(),
        r.checks.iter().filter(|c| !c.passed).count().to_string(),
        r.errors.join("; "),
        f(|o| o.log_z),
        f(|o| o.energy),
        f(|o| o.ground_energy),
        f(|o| o.m_lro),
        f(|o| o.magnetization),
        obs.and_then(|o| o.lro_lower_bound).map(fmt_float).unwrap_or_default(),
    ]
}

/// Writes one CSV row or JSON line per record. CSV columns are the fixed
/// base columns, then every further field in order of first appearance,
/// then `wall_time_s`.
pub fn emit(records: &[ScanRecord], format: Format, mut out: impl Write) -> Result<()> {
    match format {
        Format::Jsonl => {
            for r in records {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
        }
        Format::Csv => {
            let flats: Vec<Vec<(String, String)>> = records.iter().map(flat_fields).collect();
            let mut extra: Vec<String> = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for (k, _) in flats.iter().flatten() {
                if seen.insert(k.clone()) {
                    extra.push(k.clone());
                }
            }
            let mut w = csv::Writer::from_writer(out);
            let io = |e: csv::Error| Error::Io(e.into());
            let header: Vec<&str> =
                BASE_COLUMNS.iter().copied().chain(extra.iter().map(String::as_str)).chain(["wall_time_s"]).collect();
            w.write_record(&header).map_err(io)?;
            for (r, flat) in records.iter().zip(&flats) {
                let map: HashMap<&str, &str> = flat.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
                let mut row = base_row(r);
                row.extend(extra.iter().map(|k| map.get(k.as_str()).map(|v| v.to_string()).unwrap_or_default()));
                row.push(fmt_float(r.wall_time_s));
                w.write_record(&row).map_err(io)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// [`emit`] to `path`, or to standard output when `path` is `None`.
pub fn write_records(records: &[ScanRecord], format: Format, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)?;
            let mut w = std::io::BufWriter::new(file);
            emit(records, format, &mut w)?;
            w.flush()?;
        }
        None => emit(records, format, std::io::stdout().lock())?,
    }
    Ok(())
}

/// Parses JSON lines written by [`emit`].
pub fn read_jsonl(text: &str) -> Result<Vec<ScanRecord>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caps() {
        let lim = Limits::default();
        assert!(check_caps(&LatticeConfig::new(2, 1).unwrap(), &lim).is_ok());
        assert!(check_caps(&LatticeConfig::new(3, 1).unwrap(), &lim).is_ok());
        assert!(check_caps(&LatticeConfig::new(3, 2).unwrap(), &lim).is_err());
        assert!(check_caps(&LatticeConfig::new(2, 2).unwrap(), &lim).is_err());
        assert_eq!(binomial(16, 8), 12870);
    }

    #[test]
    fn overrides_win() {
        let mut c = ScanConfig::from_toml("seed = 3\n[grid]\nkappa = [0.1, 0.2]\n").unwrap();
        c.apply(&Overrides { kappa: Some(vec![0.7]), nu: Some(3), ..Default::default() }).unwrap();
        assert_eq!(c.grid.kappa, vec![0.7]);
        assert_eq!(c.lattice, vec![LatticeSpec { nu: 3, half_length: 1 }]);
        assert_eq!(c.seed, 3);
    }

    #[test]
    fn config_round_trip_and_rejects_unknown_keys() {
        let c = ScanConfig::default();
        assert_eq!(ScanConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        assert!(matches!(ScanConfig::from_toml("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(ScanConfig::from_toml("[[lattice]]\nnu = 1\nL = 1\n"), Err(Error::Config(_))));
    }

    #[test]
    fn empty_grid_is_empty_success() {
        let mut c = ScanConfig::default();
        c.grid.g.clear();
        let out = run_scan(&c).unwrap();
        assert!(out.records.is_empty() && out.passed);
        let mut buf = Vec::new();
        emit(&out.records, Format::Jsonl, &mut buf).unwrap();
        assert!(buf.is_empty());
    }
}
