//! Motivic Donaldson–Thomas invariants `B_gamma` and motivic classes of the
//! moduli stacks of semistable parabolic Higgs bundles, parabolic
//! connections, and semistable parabolic connections.
//!
//! All classes are obtained from the same recipe: restrict the DT series to
//! a submonoid cut out by linear degree/slope equations, take the plethystic
//! exponential, and read off one coefficient after shifting the degree into
//! the nonpositive range.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::coeffring::{format_rational, parse_rational, rat, MotScalar, Rational};
use crate::error::{Error, Result};
use crate::gammaring::{embed_macdonald_product, GammaIndex, LinearForm, ParSeries, PointId, Truncation};
use crate::partitions::{enumerate, hook_kernel_series, Partition, ZSeries};

// ---------------------------------------------------------------------------
// Eigenvalues and weights
// ---------------------------------------------------------------------------

/// Eigenvalues `zeta_{x,j}` with coordinates over a basis `{1, beta_1, ..., beta_m}`.
///
/// Unspecified entries are zero.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Eigenvalues {
    basis_dim: usize,
    values: BTreeMap<(PointId, usize), Vec<Rational>>,
}

impl Eigenvalues {
    /// All eigenvalues zero, with `m = basis_dim` extra basis elements.
    pub fn zero(basis_dim: usize) -> Self {
        Eigenvalues {
            basis_dim,
            values: BTreeMap::new(),
        }
    }

    /// Rational eigenvalues (`m = 0`).
    pub fn rational(entries: impl IntoIterator<Item = ((PointId, usize), Rational)>) -> Self {
        let mut e = Self::zero(0);
        for ((x, j), v) in entries {
            e.set(x, j, vec![v]).expect("valid rational eigenvalue");
        }
        e
    }

    /// Sets `zeta_{x,j}` (coordinates `[c_0, ..., c_m]`, level `j >= 1`).
    pub fn set(&mut self, x: PointId, j: usize, coords: Vec<Rational>) -> Result<()> {
        if j == 0 {
            return Err(Error::InvalidInput("eigenvalue levels start at 1".into()));
        }
        if coords.len() != self.basis_dim + 1 {
            return Err(Error::InvalidInput(format!(
                "eigenvalue at ({x},{j}) has {} coordinates, expected {}",
                coords.len(),
                self.basis_dim + 1
            )));
        }
        if coords.iter().all(Zero::is_zero) {
            self.values.remove(&(x, j));
        } else {
            self.values.insert((x, j), coords);
        }
        Ok(())
    }

    /// Number `m` of basis elements beyond 1.
    pub fn basis_dim(&self) -> usize {
        self.basis_dim
    }

    /// Coordinate `c` of `zeta_{x,j}`.
    pub fn coord(&self, x: PointId, j: usize, c: usize) -> Rational {
        self.values
            .get(&(x, j))
            .map(|v| v[c].clone())
            .unwrap_or_else(Rational::zero)
    }

    /// Non-zero entries.
    pub fn iter(&self) -> impl Iterator<Item = (&(PointId, usize), &Vec<Rational>)> {
        self.values.iter()
    }

    /// `|zeta| = sum_x max_j ||zeta_{x,j}||_inf`.
    pub fn norm(&self) -> Rational {
        let mut per_point: BTreeMap<PointId, Rational> = BTreeMap::new();
        for ((x, _), v) in &self.values {
            let m = v.iter().map(|c| c.abs()).max().unwrap_or_else(Rational::zero);
            let e = per_point.entry(*x).or_insert_with(Rational::zero);
            if m > *e {
                *e = m;
            }
        }
        per_point.values().fold(Rational::zero(), |a, b| a + b)
    }

    /// `deg_{kappa,zeta} gamma` as a coordinate vector: coordinate 0 is
    /// `kappa d + sum zeta^0 r`, coordinate `k >= 1` is `sum zeta^k r`.
    pub fn degree(&self, g: &GammaIndex, kappa: &Rational) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.basis_dim + 1];
        out[0] = kappa * Rational::from_integer(g.d().into());
        for ((x, j), v) in &self.values {
            let m = g.level(*x, *j);
            if m != 0 {
                let m = Rational::from_integer(m.into());
                for (c, val) in v.iter().enumerate() {
                    out[c] += val * &m;
                }
            }
        }
        out
    }

    /// True iff no two eigenvalues at one point differ by a non-zero integer
    /// (unspecified levels count as eigenvalue 0).
    pub fn is_nonresonant(&self) -> bool {
        let mut by_point: BTreeMap<PointId, Vec<Vec<Rational>>> = BTreeMap::new();
        for ((x, _), v) in &self.values {
            by_point.entry(*x).or_default().push(v.clone());
        }
        for vals in by_point.values_mut() {
            vals.push(vec![Rational::zero(); self.basis_dim + 1]);
            for a in vals.iter() {
                for b in vals.iter() {
                    let diff0 = &a[0] - &b[0];
                    let beta_zero = (1..=self.basis_dim).all(|k| a[k] == b[k]);
                    if beta_zero && diff0.is_integer() && !diff0.is_zero() {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// JSON form `{"basis_dim": m, "values": {"x": {"j": [c0, ..., cm]}}}`.
    pub fn to_json(&self) -> Value {
        let mut values: BTreeMap<String, serde_json::Map<String, Value>> = BTreeMap::new();
        for ((x, j), v) in &self.values {
            values.entry(x.to_string()).or_default().insert(
                j.to_string(),
                Value::Array(v.iter().map(|c| json!(format_rational(c))).collect()),
            );
        }
        json!({"basis_dim": self.basis_dim, "values": values})
    }

    /// Parses the JSON form of [`Eigenvalues::to_json`]; coordinates may be
    /// integers or strings `"p/q"`.
    pub fn from_json(v: &Value) -> Result<Eigenvalues> {
        let bad = |m: &str| Error::Schema(format!("eigenvalues JSON: {m}"));
        let obj = v.as_object().ok_or_else(|| bad("expected an object"))?;
        let m = obj
            .get("basis_dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("\"basis_dim\" must be a nonnegative integer"))? as usize;
        let mut out = Eigenvalues::zero(m);
        if let Some(vals) = obj.get("values") {
            for (x, levels) in vals.as_object().ok_or_else(|| bad("\"values\" must be an object"))? {
                let x: PointId = x.parse().map_err(|_| bad("point labels must be nonnegative integers"))?;
                for (j, coords) in levels.as_object().ok_or_else(|| bad("levels must be an object"))? {
                    let j: usize = j.parse().map_err(|_| bad("levels must be positive integers"))?;
                    let coords = coords
                        .as_array()
                        .ok_or_else(|| bad("coordinates must be a list"))?
                        .iter()
                        .map(json_rational)
                        .collect::<Result<Vec<_>>>()?;
                    out.set(x, j, coords).map_err(|e| bad(&e.to_string()))?;
                }
            }
        }
        Ok(out)
    }
}

/// Reads a rational from a JSON number or string.
pub fn json_rational(v: &Value) -> Result<Rational> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(rat)
            .ok_or_else(|| Error::Schema(format!("expected an exact rational, got {n}"))),
        Value::String(s) => parse_rational(s).map_err(|e| Error::Schema(e.to_string())),
        _ => Err(Error::Schema("expected a rational number".into())),
    }
}

/// Parabolic weights `(kappa, sigma)`.
///
/// An unspecified `sigma_{x,j}` takes the value of the nearest specified
/// lower level at `x` (0 if there is none).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Weights {
    kappa: Rational,
    sigma: BTreeMap<(PointId, usize), Rational>,
}

impl Weights {
    /// Builds weights; `kappa` must be nonnegative and levels start at 1.
    pub fn new(kappa: Rational, sigma: BTreeMap<(PointId, usize), Rational>) -> Result<Self> {
        if kappa.is_negative() {
            return Err(Error::InvalidWeights("kappa must be nonnegative".into()));
        }
        if sigma.keys().any(|(_, j)| *j == 0) {
            return Err(Error::InvalidWeights("weight levels start at 1".into()));
        }
        Ok(Weights { kappa, sigma })
    }

    /// `kappa = 1`, `sigma = 0`.
    pub fn trivial() -> Self {
        Weights {
            kappa: Rational::one(),
            sigma: BTreeMap::new(),
        }
    }

    /// `kappa`.
    pub fn kappa(&self) -> &Rational {
        &self.kappa
    }

    /// Specified entries of `sigma`.
    pub fn sigma_entries(&self) -> &BTreeMap<(PointId, usize), Rational> {
        &self.sigma
    }

    /// `sigma_{x,j}` with the nearest-lower-level extension.
    pub fn sigma(&self, x: PointId, j: usize) -> Rational {
        self.sigma
            .range((x, 0)..=(x, j))
            .next_back()
            .map(|(_, v)| v.clone())
            .unwrap_or_else(Rational::zero)
    }

    fn points(&self) -> BTreeSet<PointId> {
        self.sigma.keys().map(|(x, _)| *x).collect()
    }

    fn max_level(&self, x: PointId) -> usize {
        self.sigma
            .range((x, 0)..=(x, usize::MAX))
            .map(|((_, j), _)| *j)
            .max()
            .unwrap_or(1)
    }

    /// Monotonicity `sigma_{x,1} <= sigma_{x,2} <= ...`.
    pub fn is_stab_prime(&self) -> bool {
        self.points().into_iter().all(|x| {
            (1..self.max_level(x)).all(|j| self.sigma(x, j) <= self.sigma(x, j + 1))
        })
    }

    /// Monotonicity and `sigma_{x,j} <= sigma_{x,1} + 1`.
    pub fn is_stab(&self) -> bool {
        self.is_stab_prime()
            && self.points().into_iter().all(|x| {
                let top = self.sigma(x, 1) + Rational::one();
                (1..=self.max_level(x)).all(|j| self.sigma(x, j) <= top)
            })
    }

    /// `|sigma| = sum_x (max_j sigma_{x,j} - sigma_{x,1})`.
    pub fn norm(&self) -> Rational {
        self.points()
            .into_iter()
            .map(|x| {
                let m = (1..=self.max_level(x))
                    .map(|j| self.sigma(x, j))
                    .max()
                    .unwrap_or_else(Rational::zero);
                m - self.sigma(x, 1)
            })
            .fold(Rational::zero(), |a, b| a + b)
    }

    /// `deg_{kappa,sigma} gamma = kappa d + sum sigma_{x,j} r_{x,j}`.
    pub fn degree(&self, g: &GammaIndex, kappa: &Rational) -> Rational {
        let mut out = kappa * Rational::from_integer(g.d().into());
        for (x, levels) in g.flags() {
            for (i, m) in levels.iter().enumerate() {
                if *m != 0 {
                    out += self.sigma(*x, i + 1) * Rational::from_integer((*m).into());
                }
            }
        }
        out
    }

    /// The weights scaled by `1/kappa` (requires `kappa > 0`).
    fn normalized(&self) -> Weights {
        let inv = self.kappa.recip();
        Weights {
            kappa: Rational::one(),
            sigma: self.sigma.iter().map(|(k, v)| (*k, v * &inv)).collect(),
        }
    }

    /// JSON map `{"x": {"j": "p/q"}}` of the specified `sigma` entries.
    pub fn sigma_to_json(&self) -> Value {
        let mut out: BTreeMap<String, serde_json::Map<String, Value>> = BTreeMap::new();
        for ((x, j), v) in &self.sigma {
            out.entry(x.to_string())
                .or_default()
                .insert(j.to_string(), json!(format_rational(v)));
        }
        json!(out)
    }

    /// Parses `sigma` from the map form of [`Weights::sigma_to_json`].
    pub fn sigma_from_json(v: &Value) -> Result<BTreeMap<(PointId, usize), Rational>> {
        let bad = |m: &str| Error::Schema(format!("weights JSON: {m}"));
        let mut out = BTreeMap::new();
        for (x, levels) in v.as_object().ok_or_else(|| bad("expected an object"))? {
            let x: PointId = x.parse().map_err(|_| bad("point labels must be nonnegative integers"))?;
            for (j, val) in levels.as_object().ok_or_else(|| bad("levels must be an object"))? {
                let j: usize = j.parse().map_err(|_| bad("levels must be positive integers"))?;
                if j == 0 {
                    return Err(bad("levels start at 1"));
                }
                out.insert((x, j), json_rational(val)?);
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Global factor tables and DT invariants
// ---------------------------------------------------------------------------

/// Per-partition global factors `Omega_lambda(z^-1)`.
///
/// Genus 0 uses the hook coefficients `a_lambda(z^-1)`; higher genus takes
/// externally supplied truncated series.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum GlobalFactorTable {
    /// The genus-0 table, generated on demand.
    Genus0,
    /// An external table for genus `genus`.
    External {
        /// Genus of the curve.
        genus: u32,
        /// `Omega_lambda` by partition.
        entries: BTreeMap<Partition, ZSeries>,
    },
}

impl GlobalFactorTable {
    /// Genus of the curve.
    pub fn genus(&self) -> u32 {
        match self {
            GlobalFactorTable::Genus0 => 0,
            GlobalFactorTable::External { genus, .. } => *genus,
        }
    }

    /// `Omega_lambda` truncated at `z^-depth`.
    pub fn entry(&self, lambda: &Partition, depth: u32) -> Result<ZSeries> {
        match self {
            GlobalFactorTable::Genus0 => Ok(hook_kernel_series(lambda, depth)),
            GlobalFactorTable::External { entries, .. } => {
                if lambda.is_empty() {
                    return Ok(ZSeries::constant(MotScalar::one(), depth));
                }
                let s = entries
                    .get(lambda)
                    .ok_or_else(|| Error::MissingTableEntry(lambda.to_string()))?;
                if s.depth() < depth {
                    return Err(Error::MissingTableEntry(format!(
                        "{lambda} (table depth {} < required {depth})",
                        s.depth()
                    )));
                }
                let mut out = ZSeries::zero(depth);
                for (d, c) in s.iter() {
                    if d >= -(depth as i64) {
                        out.set(d, c.clone());
                    }
                }
                Ok(out)
            }
        }
    }

    /// Parses `{"genus": g, "tables": [{"lambda": "2,1", "series": ZSeries}]}`.
    pub fn from_json(v: &Value) -> Result<GlobalFactorTable> {
        let bad = |m: &str| Error::Schema(format!("global factor table JSON: {m}"));
        let genus = v
            .get("genus")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("\"genus\" must be a nonnegative integer"))? as u32;
        let mut entries = BTreeMap::new();
        for t in v
            .get("tables")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("\"tables\" must be a list"))?
        {
            let lambda: Partition = t
                .get("lambda")
                .and_then(Value::as_str)
                .ok_or_else(|| bad("\"lambda\" must be a string"))?
                .parse()
                .map_err(|e: Error| bad(&e.to_string()))?;
            let series = ZSeries::from_json(t.get("series").ok_or_else(|| bad("missing \"series\""))?)?;
            entries.insert(lambda, series);
        }
        Ok(GlobalFactorTable::External { genus, entries })
    }

    /// JSON form (genus-0 tables serialize with no entries).
    pub fn to_json(&self) -> Value {
        match self {
            GlobalFactorTable::Genus0 => json!({"genus": 0, "tables": []}),
            GlobalFactorTable::External { genus, entries } => json!({
                "genus": genus,
                "tables": entries
                    .iter()
                    .map(|(l, s)| json!({"lambda": l.to_string(), "series": s.to_json()}))
                    .collect::<Vec<_>>(),
            }),
        }
    }
}

/// `[Pair^{nilp,-}(X, D, lambda)] = Omega_lambda(z^-1) w^{|lambda|} prod_x H~_lambda(w_{x,.}; z^-1)`.
pub fn pair_nilp_series(lambda: &Partition, trunc: &Truncation, table: &GlobalFactorTable) -> Result<ParSeries> {
    let depth = (-trunc.deg_min()) as u32;
    let omega = table.entry(lambda, depth)?;
    embed_macdonald_product(lambda, trunc, &omega)
}

/// `sum_lambda [Pair^{nilp,-}(lambda)]` over `|lambda| <= Rmax`.
pub fn pair_nilp_total(trunc: &Truncation, table: &GlobalFactorTable) -> Result<ParSeries> {
    let mut total = ParSeries::one(trunc);
    for n in 1..=trunc.rank_max() {
        for lambda in enumerate(n) {
            total = total.add(&pair_nilp_series(&lambda, trunc, table)?)?;
        }
    }
    Ok(total)
}

/// `[Pair^-(X, D)] = Pow(sum_lambda [Pair^{nilp,-}(lambda)], q)`.
pub fn pair_series(trunc: &Truncation, table: &GlobalFactorTable) -> Result<ParSeries> {
    pair_nilp_total(trunc, table)?.pow_pleth(&MotScalar::q())
}

/// DT invariants `B = q * Log(sum_lambda [Pair^{nilp,-}(lambda)])` (as a series; `B_0 = 0`).
pub fn dt_series(trunc: &Truncation, table: &GlobalFactorTable) -> Result<ParSeries> {
    Ok(pair_nilp_total(trunc, table)?.log_pleth()?.scale(&MotScalar::q()))
}

/// DT invariants as a map `gamma -> B_gamma` (zero entries omitted).
pub fn dt_invariants(trunc: &Truncation, table: &GlobalFactorTable) -> Result<BTreeMap<GammaIndex, MotScalar>> {
    Ok(dt_series(trunc, table)?
        .iter()
        .map(|(g, c)| (g.clone(), c.clone()))
        .collect())
}

/// `chi(gamma) = (g - 1) r^2 + sum_x sum_{j<j'} r_{x,j} r_{x,j'}`.
pub fn chi(g: &GammaIndex, genus: u32) -> i64 {
    let r = g.r() as i64;
    let mut out = (genus as i64 - 1) * r * r;
    for levels in g.flags().values() {
        let s: i64 = levels.iter().map(|c| *c as i64).sum();
        let sq: i64 = levels.iter().map(|c| (*c as i64) * (*c as i64)).sum();
        out += (s * s - sq) / 2;
    }
    out
}

/// Whether `zeta` has no resonances (see [`Eigenvalues::is_nonresonant`]).
pub fn nonresonant_check(zeta: &Eigenvalues) -> bool {
    zeta.is_nonresonant()
}

/// Normalizes `(kappa, sigma)` for semistable connections: non-resonant
/// eigenvalues accept any weights; resonant ones need `kappa > 0` with
/// `sigma / kappa` in Stab, or the trivial condition `kappa = 0, sigma = 0`.
pub fn normalize_conn_ss_weights(zeta: &Eigenvalues, w: &Weights) -> Result<Weights> {
    if zeta.is_nonresonant() {
        return Ok(w.clone());
    }
    if w.kappa().is_zero() {
        if w.sigma_entries().values().all(Zero::is_zero) {
            return Ok(w.clone());
        }
        return Err(Error::ResonantWithBadWeights);
    }
    let n = w.normalized();
    if n.is_stab() {
        Ok(n)
    } else {
        Err(Error::ResonantWithBadWeights)
    }
}

/// Slope factorization `total = prod_tau F_tau` with `F_tau` supported on
/// `deg_{1,sigma} gamma = tau rk gamma`, by rank-increasing peeling.
pub fn ks_factor(total: &ParSeries, w: &Weights) -> Result<BTreeMap<Rational, ParSeries>> {
    if !total.constant_term().is_one() {
        return Err(Error::NonUnitConstant);
    }
    let trunc = total.trunc().clone();
    let one = Rational::one();
    let slope = |g: &GammaIndex| w.degree(g, &one) / Rational::from_integer(g.r().into());
    let mut factors: BTreeMap<Rational, ParSeries> = BTreeMap::new();
    for r in 1..=trunc.rank_max() {
        let mut product = ParSeries::one(&trunc);
        for f in factors.values() {
            product = product.mul(f)?;
        }
        let mut keys: BTreeSet<GammaIndex> = BTreeSet::new();
        keys.extend(total.iter().filter(|(g, _)| g.r() == r).map(|(g, _)| g.clone()));
        keys.extend(product.iter().filter(|(g, _)| g.r() == r).map(|(g, _)| g.clone()));
        for g in keys {
            let c = total.coeff(&g).sub(&product.coeff(&g));
            if !c.is_zero() {
                factors
                    .entry(slope(&g))
                    .or_insert_with(|| ParSeries::one(&trunc))
                    .add_term(g, c);
            }
        }
    }
    Ok(factors)
}

// ---------------------------------------------------------------------------
// Class computations
// ---------------------------------------------------------------------------

/// Computes motivic classes for a fixed curve (genus, parabolic points and
/// global-factor table), caching DT series per truncation window.
pub struct DtEngine {
    points: Vec<PointId>,
    table: GlobalFactorTable,
    cache: Mutex<Vec<(Truncation, Arc<ParSeries>)>>,
}

fn rational_floor(x: &Rational) -> i64 {
    let f = x.floor().to_integer();
    i64::try_from(f).expect("shift bound fits in i64")
}

impl DtEngine {
    /// Engine for `P^1` with the given parabolic points.
    pub fn genus0(points: Vec<PointId>) -> Result<Self> {
        Self::new(points, GlobalFactorTable::Genus0)
    }

    /// Engine with an explicit global-factor table.
    pub fn new(mut points: Vec<PointId>, table: GlobalFactorTable) -> Result<Self> {
        points.sort_unstable();
        let n = points.len();
        points.dedup();
        if points.len() != n {
            return Err(Error::InvalidInput("parabolic points must be distinct".into()));
        }
        Ok(DtEngine {
            points,
            table,
            cache: Mutex::new(vec![]),
        })
    }

    /// Parabolic points.
    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    /// Genus of the curve.
    pub fn genus(&self) -> u32 {
        self.table.genus()
    }

    /// `delta = max(2g - 2 + deg D, 0)`.
    pub fn delta(&self) -> i64 {
        (2 * self.genus() as i64 - 2 + self.points.len() as i64).max(0)
    }

    /// Global-factor table.
    pub fn table(&self) -> &GlobalFactorTable {
        &self.table
    }

    /// Validates that `gamma` is a nonzero class over this engine's points.
    fn check_gamma(&self, g: &GammaIndex) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidInput("at least one parabolic point is required".into()));
        }
        if g.is_zero() {
            return Err(Error::InvalidInput("gamma must be nonzero".into()));
        }
        let pts: Vec<PointId> = g.points().collect();
        if pts != self.points {
            return Err(Error::InvalidInput(format!(
                "gamma carries flags at points {pts:?}, expected {:?}",
                self.points
            )));
        }
        Ok(())
    }

    /// The box window of classes that can be summands of `g` (which must
    /// have `d <= 0`).
    pub fn box_window(&self, g: &GammaIndex) -> Result<Truncation> {
        let depth = g.max_level().max(1) as u32;
        let t = Truncation::new(self.points.clone(), g.r(), depth, (-g.d()).max(0) as u32)?;
        Ok(t.with_level_caps(g.flags().clone()))
    }

    /// DT series `B` over a window (cached; reuses any cached covering window).
    pub fn dt_series(&self, trunc: &Truncation) -> Result<Arc<ParSeries>> {
        {
            let cache = self.cache.lock().expect("cache poisoned");
            for (t, s) in cache.iter() {
                if t == trunc {
                    return Ok(s.clone());
                }
            }
            for (t, s) in cache.iter() {
                if t.covers(trunc) {
                    return Ok(Arc::new(s.restrict_window(trunc)));
                }
            }
        }
        let s = Arc::new(dt_series(trunc, &self.table)?);
        self.cache
            .lock()
            .expect("cache poisoned")
            .push((trunc.clone(), s.clone()));
        Ok(s)
    }

    /// `q^{chi(g)} * [Exp(B restricted by forms)]_g` for `g` with `d <= 0`.
    pub fn restricted_exp_coefficient(&self, g: &GammaIndex, forms: &[LinearForm]) -> Result<MotScalar> {
        if g.d() > 0 {
            return Err(Error::InvalidInput("coefficient extraction needs d <= 0".into()));
        }
        if forms.iter().any(|f| !f.eval(g).is_zero()) {
            return Ok(MotScalar::zero());
        }
        let window = self.box_window(g)?;
        let b = self.dt_series(&window)?;
        let e = b.restrict(forms).exp_pleth()?;
        Ok(e.coeff(g).mul_q_pow(chi(g, self.genus())))
    }

    fn sigma_form(&self, g: &GammaIndex, w: &Weights, kappa: &Rational, tau: &Rational) -> LinearForm {
        let mut f = LinearForm {
            r: -tau.clone(),
            d: kappa.clone(),
            flags: BTreeMap::new(),
        };
        for &x in &self.points {
            for j in 1..=g.max_level().max(1) {
                let s = w.sigma(x, j);
                if !s.is_zero() {
                    f.flags.insert((x, j), s);
                }
            }
        }
        f
    }

    fn zeta_forms(&self, zeta: &Eigenvalues, kappa: &Rational, tau: &[Rational]) -> Vec<LinearForm> {
        (0..=zeta.basis_dim())
            .map(|c| {
                let mut f = LinearForm {
                    r: -tau[c].clone(),
                    d: if c == 0 { kappa.clone() } else { Rational::zero() },
                    flags: BTreeMap::new(),
                };
                for ((x, j), v) in zeta.iter() {
                    if !v[c].is_zero() {
                        f.flags.insert((*x, *j), v[c].clone());
                    }
                }
                f
            })
            .collect()
    }

    /// The element `H_g(zeta, sigma)` for `g` with `d <= 0` (zero unless
    /// `deg_{0,zeta} g = 0`).
    pub fn higgs_element(&self, g: &GammaIndex, zeta: &Eigenvalues, w: &Weights) -> Result<MotScalar> {
        self.check_gamma(g)?;
        let zero = Rational::zero();
        if zeta.degree(g, &zero).iter().any(|c| !c.is_zero()) {
            return Ok(MotScalar::zero());
        }
        let one = Rational::one();
        let tau = w.degree(g, &one) / Rational::from_integer(g.r().into());
        let mut forms = self.zeta_forms(zeta, &zero, &vec![Rational::zero(); zeta.basis_dim() + 1]);
        forms.push(self.sigma_form(g, w, &one, &tau));
        self.restricted_exp_coefficient(g, &forms)
    }

    /// The element `C_g(zeta)` for `g` with `d <= 0`, over the submonoid of
    /// classes sharing the `(1, zeta)`-slope of `g`.
    pub fn conn_element(&self, g: &GammaIndex, zeta: &Eigenvalues) -> Result<MotScalar> {
        self.check_gamma(g)?;
        let one = Rational::one();
        let r = Rational::from_integer(g.r().into());
        let tau: Vec<Rational> = zeta.degree(g, &one).into_iter().map(|c| c / &r).collect();
        let forms = self.zeta_forms(zeta, &one, &tau);
        self.restricted_exp_coefficient(g, &forms)
    }

    /// The element `C_g(zeta, kappa, sigma)` for `g` with `d <= 0`.
    pub fn conn_ss_element(&self, g: &GammaIndex, zeta: &Eigenvalues, w: &Weights) -> Result<MotScalar> {
        self.check_gamma(g)?;
        let one = Rational::one();
        let r = Rational::from_integer(g.r().into());
        let tau: Vec<Rational> = zeta.degree(g, &one).into_iter().map(|c| c / &r).collect();
        let mut forms = self.zeta_forms(zeta, &one, &tau);
        let tau2 = w.degree(g, w.kappa()) / &r;
        forms.push(self.sigma_form(g, w, w.kappa(), &tau2));
        self.restricted_exp_coefficient(g, &forms)
    }

    /// Stabilization bound `|sigma| + (r-1) delta / 2 + d / r` for Higgs bundles.
    pub fn higgs_shift_bound(&self, g: &GammaIndex, w: &Weights) -> Rational {
        let r = Rational::from_integer(g.r().into());
        w.norm()
            + Rational::new(((g.r() as i64 - 1) * self.delta()).into(), 2.into())
            + Rational::from_integer(g.d().into()) / r
    }

    /// Stabilization bound `2|zeta| + (r-1) delta / 2 + d / r` for connections.
    pub fn conn_shift_bound(&self, g: &GammaIndex, zeta: &Eigenvalues) -> Rational {
        let r = Rational::from_integer(g.r().into());
        zeta.norm() * rat(2)
            + Rational::new(((g.r() as i64 - 1) * self.delta()).into(), 2.into())
            + Rational::from_integer(g.d().into()) / r
    }

    /// Stabilization bound `3|zeta| + (r-1) delta / 2` for semistable connections.
    pub fn conn_ss_shift_bound(&self, g: &GammaIndex, zeta: &Eigenvalues) -> Rational {
        zeta.norm() * rat(3) + Rational::new(((g.r() as i64 - 1) * self.delta()).into(), 2.into())
    }

    fn check_shift(n: i64, bound: &Rational) -> Result<()> {
        if Rational::from_integer(n.into()) <= *bound {
            return Err(Error::InsufficientShift {
                given: n,
                bound: format_rational(bound),
            });
        }
        Ok(())
    }

    /// `[Higgs_g^{sigma-ss}(zeta)]` with the smallest admissible shift.
    pub fn higgs_ss_class(&self, g: &GammaIndex, zeta: &Eigenvalues, w: &Weights) -> Result<MotScalar> {
        let n = rational_floor(&self.higgs_shift_bound(g, w)) + 1;
        self.higgs_ss_class_with_shift(g, zeta, w, n)
    }

    /// `[Higgs_g^{sigma-ss}(zeta)]` computed with an explicit shift `n`.
    pub fn higgs_ss_class_with_shift(&self, g: &GammaIndex, zeta: &Eigenvalues, w: &Weights, n: i64) -> Result<MotScalar> {
        self.check_gamma(g)?;
        if !w.is_stab() {
            return Err(Error::InvalidWeights(
                "sigma must be nondecreasing with sigma_{x,j} <= sigma_{x,1} + 1".into(),
            ));
        }
        if zeta.degree(g, &Rational::zero()).iter().any(|c| !c.is_zero()) {
            return Ok(MotScalar::zero());
        }
        Self::check_shift(n, &self.higgs_shift_bound(g, w))?;
        self.higgs_element(&g.shift_degree(-n * g.r() as i64), zeta, w)
    }

    /// `[Conn_g(zeta)]` with the smallest admissible shift.
    pub fn conn_class(&self, g: &GammaIndex, zeta: &Eigenvalues) -> Result<MotScalar> {
        let n = rational_floor(&self.conn_shift_bound(g, zeta)) + 1;
        self.conn_class_with_shift(g, zeta, n)
    }

    /// `[Conn_g(zeta)]` computed with an explicit shift `n`.
    pub fn conn_class_with_shift(&self, g: &GammaIndex, zeta: &Eigenvalues, n: i64) -> Result<MotScalar> {
        self.check_gamma(g)?;
        if zeta.degree(g, &Rational::one()).iter().any(|c| !c.is_zero()) {
            return Ok(MotScalar::zero());
        }
        Self::check_shift(n, &self.conn_shift_bound(g, zeta))?;
        self.conn_element(&g.shift_degree(-n * g.r() as i64), zeta)
    }

    /// `[Conn_g^{(kappa,sigma)-ss}(zeta)]` with the smallest admissible shift.
    pub fn conn_ss_class(&self, g: &GammaIndex, zeta: &Eigenvalues, w: &Weights) -> Result<MotScalar> {
        let n = rational_floor(&self.conn_ss_shift_bound(g, zeta)) + 1;
        self.conn_ss_class_with_shift(g, zeta, w, n)
    }

    /// `[Conn_g^{(kappa,sigma)-ss}(zeta)]` computed with an explicit shift `n`.
    pub fn conn_ss_class_with_shift(&self, g: &GammaIndex, zeta: &Eigenvalues, w: &Weights, n: i64) -> Result<MotScalar> {
        self.check_gamma(g)?;
        let w = normalize_conn_ss_weights(zeta, w)?;
        if zeta.degree(g, &Rational::one()).iter().any(|c| !c.is_zero()) {
            return Ok(MotScalar::zero());
        }
        Self::check_shift(n, &self.conn_ss_shift_bound(g, zeta))?;
        self.conn_ss_element(&g.shift_degree(-n * g.r() as i64), zeta, &w)
    }

    /// The twisted Higgs series `sum q^{-chi} [Higgs^-_gamma(zeta)] e_gamma =
    /// Exp(B restricted to deg_{0,zeta} = 0)` over a window.
    pub fn higgs_minus_series(&self, trunc: &Truncation, zeta: &Eigenvalues) -> Result<ParSeries> {
        let b = self.dt_series(trunc)?;
        let zero = Rational::zero();
        let forms = self.zeta_forms(zeta, &zero, &vec![Rational::zero(); zeta.basis_dim() + 1]);
        b.restrict(&forms).exp_pleth()
    }

    /// `Exp(B restricted to deg_{0,zeta} = 0 and deg_{1,sigma} = tau rk)` over a window.
    pub fn higgs_slope_series(&self, trunc: &Truncation, zeta: &Eigenvalues, w: &Weights, tau: &Rational) -> Result<ParSeries> {
        let b = self.dt_series(trunc)?;
        let zero = Rational::zero();
        let one = Rational::one();
        let mut forms = self.zeta_forms(zeta, &zero, &vec![Rational::zero(); zeta.basis_dim() + 1]);
        let mut f = LinearForm {
            r: -tau.clone(),
            d: one.clone(),
            flags: BTreeMap::new(),
        };
        for &x in &self.points {
            for j in 1..=trunc.depth_max() as usize {
                let s = w.sigma(x, j);
                if !s.is_zero() {
                    f.flags.insert((x, j), s);
                }
            }
        }
        forms.push(f);
        b.restrict(&forms).exp_pleth()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::ratio;

    fn g(r: u32, flags: &[(PointId, &[u32])], d: i64) -> GammaIndex {
        GammaIndex::new(r, flags.iter().map(|(x, v)| (*x, v.to_vec())).collect(), d).unwrap()
    }

    fn inv_qm1() -> MotScalar {
        MotScalar::inv_q_power_minus_one(1)
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi(&g(1, &[(0, &[1])], 0), 0), -1);
        assert_eq!(chi(&g(2, &[(0, &[1, 1])], 0), 0), -3);
        assert_eq!(chi(&g(3, &[(0, &[1, 1, 1])], 0), 1), 3);
        assert_eq!(chi(&g(3, &[(0, &[3])], 0), 1), 0);
    }

    #[test]
    fn rank_one_pair_nilp() {
        let t = Truncation::new(vec![], 1, 1, 3).unwrap();
        let s = pair_nilp_series(&Partition::new(vec![1]), &t, &GlobalFactorTable::Genus0).unwrap();
        for d in 0..=3 {
            assert_eq!(s.coeff(&g(1, &[], -d)), inv_qm1());
        }
        let t = Truncation::new(vec![0], 1, 3, 0).unwrap();
        let s = pair_nilp_series(&Partition::new(vec![1]), &t, &GlobalFactorTable::Genus0).unwrap();
        for v in [&[1u32][..], &[0, 1], &[0, 0, 1]] {
            assert_eq!(s.coeff(&g(1, &[(0, v)], 0)), inv_qm1());
        }
    }

    #[test]
    fn rank_one_pair_series_and_dt() {
        let t = Truncation::new(vec![0], 2, 2, 2).unwrap();
        let p = pair_series(&t, &GlobalFactorTable::Genus0).unwrap();
        let b = dt_series(&t, &GlobalFactorTable::Genus0).unwrap();
        let expected = MotScalar::q().mul(&inv_qm1());
        assert!(p.constant_term().is_one());
        assert!(b.constant_term().is_zero());
        for v in [&[1u32][..], &[0, 1]] {
            for d in 0..=2 {
                assert_eq!(p.coeff(&g(1, &[(0, v)], -d)), expected);
                assert_eq!(b.coeff(&g(1, &[(0, v)], -d)), expected);
            }
        }
        // W-invariance of B.
        for (key, c) in b.iter() {
            assert_eq!(&b.coeff(&key.permute_levels(0, &[2, 1])), c);
        }
        // Exp(B) = pair series.
        assert_eq!(b.exp_pleth().unwrap(), p);
    }

    #[test]
    fn weights_and_norms() {
        let w = Weights::new(
            rat(1),
            [((0, 1), ratio(1, 4)), ((0, 3), ratio(1, 2)), ((1, 2), ratio(1, 3))].into_iter().collect(),
        )
        .unwrap();
        assert_eq!(w.sigma(0, 2), ratio(1, 4));
        assert_eq!(w.sigma(0, 5), ratio(1, 2));
        assert_eq!(w.sigma(1, 1), rat(0));
        assert_eq!(w.norm(), ratio(1, 4) + ratio(1, 3));
        assert!(w.is_stab());
        let bad = Weights::new(rat(1), [((0, 1), rat(0)), ((0, 2), rat(2))].into_iter().collect()).unwrap();
        assert!(!bad.is_stab() && bad.is_stab_prime());
        let mut z = Eigenvalues::zero(1);
        z.set(0, 1, vec![rat(1), rat(-2)]).unwrap();
        z.set(1, 2, vec![ratio(1, 2), rat(0)]).unwrap();
        assert_eq!(z.norm(), rat(2) + ratio(1, 2));
        assert_eq!(Eigenvalues::from_json(&z.to_json()).unwrap(), z);
    }

    #[test]
    fn nonresonance_examples() {
        assert!(Eigenvalues::zero(0).is_nonresonant());
        assert!(!Eigenvalues::rational([((0, 1), rat(1)), ((0, 2), rat(0))]).is_nonresonant());
        let mut z = Eigenvalues::zero(1);
        z.set(0, 1, vec![rat(0), rat(1)]).unwrap();
        assert!(z.is_nonresonant());
        assert!(Eigenvalues::rational([((0, 1), ratio(1, 2))]).is_nonresonant());
    }

    #[test]
    fn rank_one_classes() {
        let e = DtEngine::genus0(vec![0]).unwrap();
        let gamma = g(1, &[(0, &[1])], 0);
        let zeta = Eigenvalues::zero(0);
        assert_eq!(e.conn_class(&gamma, &zeta).unwrap(), inv_qm1());
        assert_eq!(e.higgs_ss_class(&gamma, &zeta, &Weights::trivial()).unwrap(), inv_qm1());
        let shifted = g(1, &[(0, &[1])], 1);
        assert!(e.conn_class(&shifted, &zeta).unwrap().is_zero());
        let z1 = Eigenvalues::rational([((0, 1), rat(1))]);
        assert!(e.higgs_ss_class(&gamma, &z1, &Weights::trivial()).unwrap().is_zero());
        assert!(matches!(
            e.conn_class_with_shift(&gamma, &zeta, 0),
            Err(Error::InsufficientShift { .. })
        ));
    }

    #[test]
    fn ks_single_slope() {
        let t = Truncation::new(vec![0], 2, 1, 0).unwrap();
        let mut total = ParSeries::one(&t);
        total.add_term(g(1, &[(0, &[1])], 0), MotScalar::q());
        total.add_term(g(2, &[(0, &[2])], 0), MotScalar::from_integer(3));
        let f = ks_factor(&total, &Weights::trivial()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[&rat(0)], total);
        assert_eq!(ks_factor(&ParSeries::zero(&t), &Weights::trivial()), Err(Error::NonUnitConstant));
    }
}
