//! Truncated power series over parabolic classes `gamma = (r, r_{x,j}, d)`
//! with coefficients in [`MotScalar`], and the plethystic operations
//! `Exp`, `Log` and `Pow` on them.
//!
//! The monoid ring is commutative (`e_gamma * e_gamma' = e_{gamma + gamma'}`)
//! and graded by rank; every series lives inside a finite [`Truncation`]
//! window and products silently drop terms that leave it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::Zero;
use serde_json::{json, Value};

use crate::coeffring::{Accumulator, MotScalar, Rational};
use crate::error::{Error, Result};
use crate::partitions::{hook_kernel_series, Partition, ZSeries};
use crate::symfunc::macdonald_modified;

/// Label of a parabolic point.
pub type PointId = u32;

/// A parabolic class `gamma = (r, (r_{x,j}), d)`.
///
/// For every point `x` present, `sum_j r_{x,j} = r`; the zero class has no
/// flags and degree 0.  Level vectors are stored without trailing zeros;
/// `levels(x)[j - 1] = r_{x,j}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GammaIndex {
    r: u32,
    flags: BTreeMap<PointId, Vec<u32>>,
    d: i64,
}

fn trim_levels(v: &mut Vec<u32>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

impl GammaIndex {
    /// Validating constructor.
    pub fn new(r: u32, flags: BTreeMap<PointId, Vec<u32>>, d: i64) -> Result<Self> {
        if r == 0 {
            if d != 0 || flags.values().any(|v| v.iter().any(|c| *c != 0)) {
                return Err(Error::InvalidInput(
                    "a rank-0 class must have degree 0 and no flags".into(),
                ));
            }
            return Ok(Self::zero());
        }
        let mut clean = BTreeMap::new();
        for (x, mut v) in flags {
            let s: u32 = v.iter().sum();
            if s != r {
                return Err(Error::InvalidInput(format!(
                    "flag multiplicities at point {x} sum to {s}, expected rank {r}"
                )));
            }
            trim_levels(&mut v);
            clean.insert(x, v);
        }
        Ok(GammaIndex { r, flags: clean, d })
    }

    /// The zero class.
    pub fn zero() -> Self {
        GammaIndex {
            r: 0,
            flags: BTreeMap::new(),
            d: 0,
        }
    }

    /// True for the zero class.
    pub fn is_zero(&self) -> bool {
        self.r == 0
    }

    /// Rank `r`.
    pub fn r(&self) -> u32 {
        self.r
    }

    /// Degree `d`.
    pub fn d(&self) -> i64 {
        self.d
    }

    /// Points carrying flag data.
    pub fn points(&self) -> impl Iterator<Item = PointId> + '_ {
        self.flags.keys().copied()
    }

    /// All level vectors by point.
    pub fn flags(&self) -> &BTreeMap<PointId, Vec<u32>> {
        &self.flags
    }

    /// Level vector at `x` (empty if absent).
    pub fn levels(&self, x: PointId) -> &[u32] {
        self.flags.get(&x).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// `r_{x,j}` for `j >= 1`.
    pub fn level(&self, x: PointId, j: usize) -> u32 {
        assert!(j >= 1, "flag levels start at 1");
        self.levels(x).get(j - 1).copied().unwrap_or(0)
    }

    /// Largest level `j` with `r_{x,j} != 0` over all points (0 if none).
    pub fn max_level(&self) -> usize {
        self.flags.values().map(|v| v.len()).max().unwrap_or(0)
    }

    /// Componentwise sum.
    pub fn add(&self, other: &GammaIndex) -> GammaIndex {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let mut flags = self.flags.clone();
        for (x, v) in &other.flags {
            let e = flags.entry(*x).or_default();
            if e.len() < v.len() {
                e.resize(v.len(), 0);
            }
            for (i, c) in v.iter().enumerate() {
                e[i] += c;
            }
        }
        GammaIndex {
            r: self.r + other.r,
            flags,
            d: self.d + other.d,
        }
    }

    /// `n * gamma`.
    pub fn scale(&self, n: u32) -> GammaIndex {
        if n == 0 {
            return Self::zero();
        }
        GammaIndex {
            r: self.r * n,
            flags: self
                .flags
                .iter()
                .map(|(x, v)| (*x, v.iter().map(|c| c * n).collect()))
                .collect(),
            d: self.d * n as i64,
        }
    }

    /// `gamma + k * 1` where `1 = (0, 0, 1)` shifts the degree (only
    /// meaningful for positive rank).
    pub fn shift_degree(&self, k: i64) -> GammaIndex {
        let mut g = self.clone();
        if !g.is_zero() {
            g.d += k;
        }
        g
    }

    /// True if every flag multiplicity of `self` is at most that of `other`.
    pub fn levels_le(&self, other: &GammaIndex) -> bool {
        self.flags.iter().all(|(x, v)| {
            let w = other.levels(*x);
            v.iter()
                .enumerate()
                .all(|(i, c)| *c <= w.get(i).copied().unwrap_or(0))
        })
    }

    /// Applies a permutation of levels at point `x`: the new multiplicity at
    /// level `perm[j-1]` (1-based) is the old one at level `j`.
    pub fn permute_levels(&self, x: PointId, perm: &[usize]) -> GammaIndex {
        let mut g = self.clone();
        if let Some(v) = g.flags.get_mut(&x) {
            let mut out = vec![0; perm.len().max(v.len())];
            for (j, c) in v.iter().enumerate() {
                let target = perm.get(j).copied().unwrap_or(j + 1);
                out[target - 1] = *c;
            }
            trim_levels(&mut out);
            *v = out;
        }
        g
    }

    /// JSON form `{"r": r, "flags": {"x": {"j": r_xj}}, "d": d}` (only
    /// non-zero multiplicities are listed).
    pub fn to_json(&self) -> Value {
        let flags: serde_json::Map<String, Value> = self
            .flags
            .iter()
            .map(|(x, v)| {
                let levels: serde_json::Map<String, Value> = v
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0)
                    .map(|(j, c)| ((j + 1).to_string(), json!(c)))
                    .collect();
                (x.to_string(), Value::Object(levels))
            })
            .collect();
        json!({"r": self.r, "flags": flags, "d": self.d})
    }

    /// Parses the JSON form of [`GammaIndex::to_json`].
    pub fn from_json(v: &Value) -> Result<GammaIndex> {
        let bad = |m: &str| Error::Schema(format!("gamma JSON: {m}"));
        let obj = v.as_object().ok_or_else(|| bad("expected an object"))?;
        let r = obj
            .get("r")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("field \"r\" must be a nonnegative integer"))?;
        let d = obj
            .get("d")
            .and_then(Value::as_i64)
            .ok_or_else(|| bad("field \"d\" must be an integer"))?;
        let mut flags = BTreeMap::new();
        if let Some(f) = obj.get("flags") {
            let f = f.as_object().ok_or_else(|| bad("\"flags\" must be an object"))?;
            for (x, levels) in f {
                let x: PointId = x.parse().map_err(|_| bad("point labels must be nonnegative integers"))?;
                let levels = levels
                    .as_object()
                    .ok_or_else(|| bad("flag levels must be an object"))?;
                let mut vec = vec![];
                for (j, c) in levels {
                    let j: usize = j.parse().map_err(|_| bad("levels must be positive integers"))?;
                    if j == 0 {
                        return Err(bad("levels start at 1"));
                    }
                    let c = c
                        .as_u64()
                        .ok_or_else(|| bad("multiplicities must be nonnegative integers"))?;
                    if vec.len() < j {
                        vec.resize(j, 0);
                    }
                    vec[j - 1] = c as u32;
                }
                flags.insert(x, vec);
            }
        }
        GammaIndex::new(r as u32, flags, d)
    }
}

impl fmt::Display for GammaIndex {
    /// Compact form `(r; x:[r_x1,r_x2,...] ...; d)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .flags
            .iter()
            .map(|(x, v)| {
                let l: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                format!("{x}:[{}]", l.join(","))
            })
            .collect();
        write!(f, "({}; {}; {})", self.r, parts.join(" "), self.d)
    }
}

/// A finite window into the completed monoid ring.
///
/// Keys must satisfy `r <= rank_max`, `deg_min <= d <= 0`, carry flag data
/// exactly at `points` (when `r > 0`) with levels `<= depth_max`, and, if
/// level caps are set, `r_{x,j} <= cap_{x,j}` (a box in flag coordinates).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Truncation {
    points: Vec<PointId>,
    rank_max: u32,
    depth_max: u32,
    deg_min: i64,
    level_caps: Option<BTreeMap<PointId, Vec<u32>>>,
}

impl Truncation {
    /// Window with ranks `<= rank_max`, levels `<= depth_max` and degrees in
    /// `[-deg_depth, 0]`.
    pub fn new(points: Vec<PointId>, rank_max: u32, depth_max: u32, deg_depth: u32) -> Result<Self> {
        if depth_max == 0 {
            return Err(Error::InvalidInput("flag depth must be at least 1".into()));
        }
        let mut sorted = points.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != points.len() {
            return Err(Error::InvalidInput("parabolic points must be distinct".into()));
        }
        Ok(Truncation {
            points: sorted,
            rank_max,
            depth_max,
            deg_min: -(deg_depth as i64),
            level_caps: None,
        })
    }

    /// Restricts the window to the box `r_{x,j} <= caps[x][j-1]`.
    pub fn with_level_caps(mut self, caps: BTreeMap<PointId, Vec<u32>>) -> Self {
        self.level_caps = Some(caps);
        self
    }

    /// Parabolic points (sorted).
    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    /// `Rmax`.
    pub fn rank_max(&self) -> u32 {
        self.rank_max
    }

    /// `Jmax`.
    pub fn depth_max(&self) -> u32 {
        self.depth_max
    }

    /// `-Dmax`.
    pub fn deg_min(&self) -> i64 {
        self.deg_min
    }

    /// Level caps, if any.
    pub fn level_caps(&self) -> Option<&BTreeMap<PointId, Vec<u32>>> {
        self.level_caps.as_ref()
    }

    /// Cap on `r_{x,j}` (1-based `j`).
    fn cap(&self, x: PointId, j: usize) -> u32 {
        match &self.level_caps {
            None => u32::MAX,
            Some(c) => c
                .get(&x)
                .and_then(|v| v.get(j - 1))
                .copied()
                .unwrap_or(0),
        }
    }

    /// Whether `gamma` lies in the window.
    pub fn contains(&self, g: &GammaIndex) -> bool {
        if g.is_zero() {
            return true;
        }
        if g.r > self.rank_max || g.d > 0 || g.d < self.deg_min {
            return false;
        }
        if g.flags.len() != self.points.len() || !g.flags.keys().zip(&self.points).all(|(a, b)| a == b) {
            return false;
        }
        g.flags.iter().all(|(x, v)| {
            v.len() <= self.depth_max as usize
                && v.iter().enumerate().all(|(i, c)| *c <= self.cap(*x, i + 1))
        })
    }

    /// Whether every key of `other` is a key of `self`.
    pub fn covers(&self, other: &Truncation) -> bool {
        if self.points != other.points
            || self.rank_max < other.rank_max
            || self.deg_min > other.deg_min
        {
            return false;
        }
        let depth = other.depth_max as usize;
        if self.depth_max < other.depth_max {
            // Levels beyond our depth are only harmless if the other window caps them to 0.
            for &x in &other.points {
                for j in (self.depth_max as usize + 1)..=depth {
                    if other.cap(x, j) > 0 {
                        return false;
                    }
                }
            }
        }
        for &x in &other.points {
            for j in 1..=depth {
                if other.cap(x, j).min(other.rank_max) > self.cap(x, j) {
                    return false;
                }
            }
        }
        true
    }
}

/// A linear form `a_r * r + a_d * d + sum a_{x,j} r_{x,j}` with rational
/// coefficients, used to cut submonoids by equations `form = 0`.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LinearForm {
    /// Coefficient of the rank.
    pub r: Rational,
    /// Coefficient of the degree.
    pub d: Rational,
    /// Coefficients of the flag multiplicities, keyed by `(x, j)`.
    pub flags: BTreeMap<(PointId, usize), Rational>,
}

impl LinearForm {
    /// Value on `gamma`.
    pub fn eval(&self, g: &GammaIndex) -> Rational {
        let mut v = &self.r * Rational::from_integer(g.r.into()) + &self.d * Rational::from_integer(g.d.into());
        for ((x, j), c) in &self.flags {
            let m = g.level(*x, *j);
            if m != 0 {
                v += c * Rational::from_integer(m.into());
            }
        }
        v
    }
}

/// A truncated series `sum_gamma c_gamma e_gamma` inside a [`Truncation`].
#[derive(Clone, Debug)]
pub struct ParSeries {
    trunc: Truncation,
    terms: HashMap<GammaIndex, MotScalar>,
}

impl PartialEq for ParSeries {
    fn eq(&self, other: &Self) -> bool {
        self.trunc == other.trunc && self.terms == other.terms
    }
}

impl Eq for ParSeries {}

type Graded = Vec<Vec<(GammaIndex, MotScalar)>>;

fn mobius(n: u32) -> i64 {
    let mut n = n;
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

impl ParSeries {
    /// The zero series.
    pub fn zero(trunc: &Truncation) -> Self {
        ParSeries {
            trunc: trunc.clone(),
            terms: HashMap::new(),
        }
    }

    /// The constant series 1.
    pub fn one(trunc: &Truncation) -> Self {
        Self::monomial(trunc, GammaIndex::zero(), MotScalar::one())
    }

    /// `c * e_gamma` (zero if `gamma` is outside the window).
    pub fn monomial(trunc: &Truncation, g: GammaIndex, c: MotScalar) -> Self {
        let mut s = Self::zero(trunc);
        s.add_term(g, c);
        s
    }

    /// Window of the series.
    pub fn trunc(&self) -> &Truncation {
        &self.trunc
    }

    /// Coefficient of `e_gamma`.
    pub fn coeff(&self, g: &GammaIndex) -> MotScalar {
        self.terms.get(g).cloned().unwrap_or_else(MotScalar::zero)
    }

    /// Constant-term coefficient.
    pub fn constant_term(&self) -> MotScalar {
        self.coeff(&GammaIndex::zero())
    }

    /// Adds `c * e_gamma`; terms outside the window are dropped.
    pub fn add_term(&mut self, g: GammaIndex, c: MotScalar) {
        if c.is_zero() || !self.trunc.contains(&g) {
            return;
        }
        match self.terms.get_mut(&g) {
            Some(e) => {
                *e = e.add(&c);
                if e.is_zero() {
                    self.terms.remove(&g);
                }
            }
            None => {
                self.terms.insert(g, c);
            }
        }
    }

    /// Non-zero terms in unspecified order.
    pub fn iter(&self) -> impl Iterator<Item = (&GammaIndex, &MotScalar)> {
        self.terms.iter()
    }

    /// Non-zero terms sorted by index.
    pub fn sorted_terms(&self) -> Vec<(&GammaIndex, &MotScalar)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Number of non-zero terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// True when every coefficient vanishes.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_same(&self, other: &ParSeries) -> Result<()> {
        if self.trunc != other.trunc {
            return Err(Error::TruncationMismatch);
        }
        Ok(())
    }

    /// Sum.
    pub fn add(&self, other: &ParSeries) -> Result<ParSeries> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (g, c) in &other.terms {
            out.add_term(g.clone(), c.clone());
        }
        Ok(out)
    }

    /// Difference.
    pub fn sub(&self, other: &ParSeries) -> Result<ParSeries> {
        self.add(&other.scale(&MotScalar::from_integer(-1)))
    }

    /// Multiplies every coefficient by `c`.
    pub fn scale(&self, c: &MotScalar) -> ParSeries {
        let mut out = Self::zero(&self.trunc);
        if c.is_zero() {
            return out;
        }
        for (g, v) in &self.terms {
            out.terms.insert(g.clone(), v.mul(c));
        }
        out
    }

    /// Multiplies every coefficient by the rational `c`.
    fn scale_rational(&self, c: &Rational) -> ParSeries {
        let mut out = Self::zero(&self.trunc);
        if c.is_zero() {
            return out;
        }
        for (g, v) in &self.terms {
            out.terms.insert(g.clone(), v.scale(c));
        }
        out
    }

    /// Terms grouped by rank `0..=rank_max`.
    fn graded(&self) -> Graded {
        let mut out: Graded = vec![vec![]; self.trunc.rank_max as usize + 1];
        for (g, c) in &self.terms {
            out[g.r as usize].push((g.clone(), c.clone()));
        }
        for v in out.iter_mut() {
            v.sort_by(|a, b| a.0.cmp(&b.0));
        }
        out
    }

    fn from_accumulators(trunc: &Truncation, acc: HashMap<GammaIndex, Accumulator>) -> ParSeries {
        let mut out = Self::zero(trunc);
        for (g, a) in acc {
            let c = a.finish();
            if !c.is_zero() {
                out.terms.insert(g, c);
            }
        }
        out
    }

    /// Adds all in-window products `a_i * b_j` to `acc`.
    fn convolve_into(
        trunc: &Truncation,
        acc: &mut HashMap<GammaIndex, Accumulator>,
        a: &[(GammaIndex, MotScalar)],
        b: &[(GammaIndex, MotScalar)],
    ) {
        for (ga, ca) in a {
            for (gb, cb) in b {
                if ga.d + gb.d < trunc.deg_min {
                    continue;
                }
                let g = ga.add(gb);
                if trunc.contains(&g) {
                    acc.entry(g).or_default().add_product(ca, cb);
                }
            }
        }
    }

    /// Product in the commutative monoid ring, truncated to the window.
    pub fn mul(&self, other: &ParSeries) -> Result<ParSeries> {
        self.check_same(other)?;
        let a: Vec<_> = self.terms.iter().map(|(g, c)| (g.clone(), c.clone())).collect();
        let b: Vec<_> = other.terms.iter().map(|(g, c)| (g.clone(), c.clone())).collect();
        let mut acc = HashMap::new();
        Self::convolve_into(&self.trunc, &mut acc, &a, &b);
        Ok(Self::from_accumulators(&self.trunc, acc))
    }

    /// Adams operation `psi_n`: `c e_gamma -> psi_n(c) e_{n gamma}`.
    pub fn adams_series(&self, n: u32) -> ParSeries {
        assert!(n >= 1, "Adams operations are indexed by positive integers");
        let mut out = Self::zero(&self.trunc);
        for (g, c) in &self.terms {
            if g.r as u64 * n as u64 > self.trunc.rank_max as u64 {
                continue;
            }
            let ng = g.scale(n);
            if self.trunc.contains(&ng) {
                out.add_term(ng, c.adams(n));
            }
        }
        out
    }

    /// Ordinary exponential of a series with zero constant term, by the
    /// rank recursion `r F_r = sum_k k Y_k F_{r-k}`.
    fn ordinary_exp(&self) -> ParSeries {
        let y = self.graded();
        let rmax = self.trunc.rank_max as usize;
        let ky: Graded = y
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let f = Rational::from_integer((k as i64).into());
                v.iter().map(|(g, c)| (g.clone(), c.scale(&f))).collect()
            })
            .collect();
        let mut f: Graded = vec![vec![]; rmax + 1];
        f[0] = vec![(GammaIndex::zero(), MotScalar::one())];
        for r in 1..=rmax {
            let mut acc = HashMap::new();
            for k in 1..=r {
                Self::convolve_into(&self.trunc, &mut acc, &ky[k], &f[r - k]);
            }
            let inv_r = Rational::new(1.into(), (r as i64).into());
            let mut layer: Vec<_> = acc
                .into_iter()
                .map(|(g, a)| (g, a.finish().scale(&inv_r)))
                .filter(|(_, c)| !c.is_zero())
                .collect();
            layer.sort_by(|a, b| a.0.cmp(&b.0));
            f[r] = layer;
        }
        let mut out = Self::zero(&self.trunc);
        for layer in f {
            for (g, c) in layer {
                out.terms.insert(g, c);
            }
        }
        out
    }

    /// Ordinary logarithm of a series with constant term 1, by
    /// `r L_r = r F_r - sum_{k<r} k L_k F_{r-k}`.
    fn ordinary_log(&self) -> ParSeries {
        let f = self.graded();
        let rmax = self.trunc.rank_max as usize;
        let mut kl: Graded = vec![vec![]; rmax + 1];
        let mut l: Graded = vec![vec![]; rmax + 1];
        for r in 1..=rmax {
            let mut acc: HashMap<GammaIndex, Accumulator> = HashMap::new();
            let rr = Rational::from_integer((r as i64).into());
            for (g, c) in &f[r] {
                acc.entry(g.clone()).or_default().add(&c.scale(&rr));
            }
            let mut neg = HashMap::new();
            for k in 1..r {
                Self::convolve_into(&self.trunc, &mut neg, &kl[k], &f[r - k]);
            }
            for (g, a) in neg {
                acc.entry(g).or_default().add(&a.finish().neg());
            }
            let inv_r = Rational::new(1.into(), (r as i64).into());
            let mut layer: Vec<_> = acc
                .into_iter()
                .map(|(g, a)| (g, a.finish().scale(&inv_r)))
                .filter(|(_, c)| !c.is_zero())
                .collect();
            layer.sort_by(|a, b| a.0.cmp(&b.0));
            kl[r] = layer.iter().map(|(g, c)| (g.clone(), c.scale(&rr))).collect();
            l[r] = layer;
        }
        let mut out = Self::zero(&self.trunc);
        for layer in l {
            for (g, c) in layer {
                out.terms.insert(g, c);
            }
        }
        out
    }

    /// Plethystic exponential `Exp(A) = exp(sum_n psi_n(A) / n)`.
    pub fn exp_pleth(&self) -> Result<ParSeries> {
        if !self.constant_term().is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let mut y = Self::zero(&self.trunc);
        for n in 1..=self.trunc.rank_max.max(1) {
            let term = self
                .adams_series(n)
                .scale_rational(&Rational::new(1.into(), (n as i64).into()));
            y = y.add(&term)?;
        }
        Ok(y.ordinary_exp())
    }

    /// Plethystic logarithm `Log(F) = sum_n mu(n)/n psi_n(log F)`.
    pub fn log_pleth(&self) -> Result<ParSeries> {
        if !self.constant_term().is_one() {
            return Err(Error::ConstantTermNotOne);
        }
        let l = self.ordinary_log();
        let mut out = Self::zero(&self.trunc);
        for n in 1..=self.trunc.rank_max.max(1) {
            let m = mobius(n);
            if m == 0 {
                continue;
            }
            let term = l
                .adams_series(n)
                .scale_rational(&Rational::new(m.into(), (n as i64).into()));
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Plethystic power `Pow(F, c) = Exp(c * Log F)`.
    pub fn pow_pleth(&self, c: &MotScalar) -> Result<ParSeries> {
        self.log_pleth()?.scale(c).exp_pleth()
    }

    /// Keeps the terms with `form(gamma) = 0` for every form (the constant
    /// term is always kept).
    pub fn restrict(&self, forms: &[LinearForm]) -> ParSeries {
        self.filter(|g| forms.iter().all(|f| f.eval(g).is_zero()))
    }

    /// Keeps the terms satisfying `keep` (the constant term is always kept).
    pub fn filter(&self, keep: impl Fn(&GammaIndex) -> bool) -> ParSeries {
        let mut out = Self::zero(&self.trunc);
        for (g, c) in &self.terms {
            if g.is_zero() || keep(g) {
                out.terms.insert(g.clone(), c.clone());
            }
        }
        out
    }

    /// Re-windows the series: terms outside `trunc` are dropped.  Only
    /// meaningful for narrowing (the coefficients inside a smaller window do
    /// not depend on terms outside it for any operation in this module when
    /// the smaller window is closed under taking summands).
    pub fn restrict_window(&self, trunc: &Truncation) -> ParSeries {
        let mut out = Self::zero(trunc);
        for (g, c) in &self.terms {
            if trunc.contains(g) {
                out.terms.insert(g.clone(), c.clone());
            }
        }
        out
    }

    /// JSON list of `{"gamma": ..., "coeff": MotScalar}` sorted by index.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.sorted_terms()
                .into_iter()
                .map(|(g, c)| json!({"gamma": g.to_json(), "coeff": c.to_json()}))
                .collect(),
        )
    }

    /// Parses the JSON list form into the given window.
    pub fn from_json(trunc: &Truncation, v: &Value) -> Result<ParSeries> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Schema("series JSON must be a list".into()))?;
        let mut out = Self::zero(trunc);
        for item in arr {
            let g = GammaIndex::from_json(
                item.get("gamma")
                    .ok_or_else(|| Error::Schema("series term lacks \"gamma\"".into()))?,
            )?;
            let c = MotScalar::from_json(
                item.get("coeff")
                    .ok_or_else(|| Error::Schema("series term lacks \"coeff\"".into()))?,
            )?;
            if !trunc.contains(&g) {
                return Err(Error::Schema(format!("term {g} lies outside the window")));
            }
            out.add_term(g, c);
        }
        Ok(out)
    }
}

/// Distinct arrangements of the parts of `mu` into `slots` levels, with
/// `r_{x,j} <= caps(j)`.
fn monomial_exponents(mu: &Partition, slots: usize, cap: &dyn Fn(usize) -> u32) -> Vec<Vec<u32>> {
    if mu.len() > slots {
        return vec![];
    }
    let mut values: Vec<u32> = mu.parts().to_vec();
    values.resize(slots, 0);
    // Distinct permutations via multiset counts.
    let mut distinct: Vec<(u32, u32)> = vec![];
    for v in &values {
        match distinct.iter_mut().find(|(x, _)| x == v) {
            Some(e) => e.1 += 1,
            None => distinct.push((*v, 1)),
        }
    }
    let mut out = vec![];
    let mut cur = vec![0u32; slots];
    fn rec(
        pos: usize,
        distinct: &mut Vec<(u32, u32)>,
        cur: &mut Vec<u32>,
        cap: &dyn Fn(usize) -> u32,
        out: &mut Vec<Vec<u32>>,
    ) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..distinct.len() {
            let (v, c) = distinct[i];
            if c > 0 && v <= cap(pos + 1) {
                distinct[i].1 -= 1;
                cur[pos] = v;
                rec(pos + 1, distinct, cur, cap, out);
                distinct[i].1 += 1;
            }
        }
    }
    rec(0, &mut distinct, &mut cur, cap, &mut out);
    out
}

/// Builds `w^{|lambda|} * prefactor(z^-1) * prod_x H~_lambda(w_{x,.}; z^-1)`
/// as a series in the window.
pub fn embed_macdonald_product(lambda: &Partition, trunc: &Truncation, prefactor: &ZSeries) -> Result<ParSeries> {
    let n = lambda.size();
    let mut out = ParSeries::zero(trunc);
    if n == 0 {
        out.add_term(GammaIndex::zero(), prefactor.coeff(0));
        return Ok(out);
    }
    if n > trunc.rank_max {
        return Ok(out);
    }
    let h = macdonald_modified(lambda)?;
    let slots = trunc.depth_max as usize;
    // Per point: list of (levels, d-shift, coefficient).
    let mut factors: Vec<Vec<(Vec<u32>, i64, MotScalar)>> = vec![];
    for &x in trunc.points() {
        let cap = |j: usize| trunc.cap(x, j);
        let mut list = vec![];
        for (mu, poly) in h.iter() {
            let exps = monomial_exponents(mu, slots, &cap);
            if exps.is_empty() {
                continue;
            }
            for b in 0..=poly.z_degree() {
                let c = poly.z_coefficient(b);
                if c.is_zero() || -(b as i64) < trunc.deg_min {
                    continue;
                }
                for e in &exps {
                    list.push((e.clone(), -(b as i64), c.clone()));
                }
            }
        }
        factors.push(list);
    }
    // Multiply out point by point.
    let mut partial: Vec<(Vec<Vec<u32>>, i64, MotScalar)> = vec![(vec![], 0, MotScalar::one())];
    for list in &factors {
        let mut next = vec![];
        for (lv, d, c) in &partial {
            for (e, b, c2) in list {
                let nd = d + b;
                if nd < trunc.deg_min {
                    continue;
                }
                let mut lv2 = lv.clone();
                lv2.push(e.clone());
                next.push((lv2, nd, c.mul(c2)));
            }
        }
        partial = next;
    }
    let mut acc: HashMap<GammaIndex, Accumulator> = HashMap::new();
    for (lv, d, c) in partial {
        for (dp, cp) in prefactor.iter() {
            let dd = d + dp;
            if dd < trunc.deg_min {
                continue;
            }
            let flags: BTreeMap<PointId, Vec<u32>> = trunc.points().iter().copied().zip(lv.iter().cloned()).collect();
            let g = GammaIndex::new(n, flags, dd)?;
            if trunc.contains(&g) {
                acc.entry(g).or_default().add_product(&c, cp);
            }
        }
    }
    Ok(ParSeries::from_accumulators(trunc, acc))
}

/// The genus-0 term `w^{|lambda|} a_lambda(z^-1) prod_x H~_lambda(w_{x,.}; z^-1)`.
pub fn embed_macdonald_term(lambda: &Partition, trunc: &Truncation) -> Result<ParSeries> {
    let depth = (-trunc.deg_min) as u32;
    embed_macdonald_product(lambda, trunc, &hook_kernel_series(lambda, depth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::rat;

    fn g(r: u32, flags: &[(PointId, &[u32])], d: i64) -> GammaIndex {
        GammaIndex::new(r, flags.iter().map(|(x, v)| (*x, v.to_vec())).collect(), d).unwrap()
    }

    fn window() -> Truncation {
        Truncation::new(vec![0], 4, 2, 3).unwrap()
    }

    #[test]
    fn gamma_validation() {
        assert!(GammaIndex::new(2, [(0, vec![1, 0])].into_iter().collect(), 0).is_err());
        assert!(GammaIndex::new(0, BTreeMap::new(), -1).is_err());
        let a = g(1, &[(0, &[1, 0])], -1);
        assert_eq!(a.levels(0), &[1]);
        assert_eq!(a.scale(3), g(3, &[(0, &[3])], -3));
        assert_eq!(GammaIndex::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn mul_examples() {
        let t = window();
        let a = ParSeries::monomial(&t, g(1, &[(0, &[1])], 0), MotScalar::one());
        let b = ParSeries::monomial(&t, g(1, &[(0, &[0, 1])], -1), MotScalar::q());
        let p = a.mul(&b).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.coeff(&g(2, &[(0, &[1, 1])], -1)), MotScalar::q());
        assert_eq!(a.mul(&ParSeries::one(&t)).unwrap(), a);
        let big = ParSeries::monomial(&t, g(3, &[(0, &[3])], 0), MotScalar::one());
        assert!(big.mul(&big).unwrap().is_empty());
        let other = Truncation::new(vec![0], 3, 2, 3).unwrap();
        assert_eq!(a.mul(&ParSeries::one(&other)), Err(Error::TruncationMismatch));
    }

    #[test]
    fn adams_examples() {
        let t = window();
        let c = MotScalar::inv_q_power_minus_one(1);
        let a = ParSeries::monomial(&t, g(1, &[(0, &[1])], -1), c.clone());
        assert_eq!(a.adams_series(1), a);
        let a2 = a.adams_series(2);
        assert_eq!(a2.coeff(&g(2, &[(0, &[2])], -2)), c.adams(2));
        assert!(a.adams_series(5).is_empty());
    }

    #[test]
    fn exp_examples() {
        let t = window();
        let gamma = g(1, &[(0, &[1])], -1);
        let e = ParSeries::monomial(&t, gamma.clone(), MotScalar::one()).exp_pleth().unwrap();
        for m in 0..=3u32 {
            assert!(e.coeff(&gamma.scale(m)).is_one());
        }
        assert_eq!(e.len(), 4);
        let eq = ParSeries::monomial(&t, gamma.clone(), MotScalar::q()).exp_pleth().unwrap();
        for m in 0..=3u32 {
            assert_eq!(eq.coeff(&gamma.scale(m)), MotScalar::q_pow(m as i64));
        }
        assert_eq!(ParSeries::one(&t).exp_pleth(), Err(Error::NonzeroConstantTerm));
        // Log inverts the geometric series.
        assert_eq!(e.log_pleth().unwrap(), ParSeries::monomial(&t, gamma, MotScalar::one()));
        assert!(ParSeries::one(&t).log_pleth().unwrap().is_empty());
        assert_eq!(ParSeries::zero(&t).log_pleth(), Err(Error::ConstantTermNotOne));
    }

    #[test]
    fn restrict_examples() {
        let t = window();
        let mut a = ParSeries::one(&t);
        a.add_term(g(1, &[(0, &[1])], 0), MotScalar::q());
        a.add_term(g(1, &[(0, &[1])], -1), MotScalar::one());
        let d_zero = LinearForm {
            d: rat(1),
            ..Default::default()
        };
        let r = a.restrict(&[d_zero]);
        assert_eq!(r.len(), 2);
        assert!(r.constant_term().is_one());
        assert_eq!(a.restrict(&[]), a);
        assert_eq!(a.restrict(&[LinearForm::default()]), a);
    }

    #[test]
    fn embed_single_box() {
        let t = Truncation::new(vec![0], 2, 3, 1).unwrap();
        let s = embed_macdonald_term(&Partition::new(vec![1]), &t).unwrap();
        let c = MotScalar::inv_q_power_minus_one(1);
        for j in 1..=3 {
            let mut v = vec![0; j];
            v[j - 1] = 1;
            for d in [0, -1] {
                assert_eq!(s.coeff(&g(1, &[(0, &v)], d)), c);
            }
        }
        assert_eq!(s.len(), 6);
        let t0 = Truncation::new(vec![], 2, 1, 2).unwrap();
        let s0 = embed_macdonald_term(&Partition::new(vec![1]), &t0).unwrap();
        let k = hook_kernel_series(&Partition::new(vec![1]), 2);
        for d in [0, -1, -2] {
            assert_eq!(s0.coeff(&g(1, &[], d)), k.coeff(d));
        }
    }

    #[test]
    fn embed_two_ratio() {
        // Flag types (1,1) and (2) differ by the m-coefficients of H~_(2).
        let t = Truncation::new(vec![0], 2, 2, 0).unwrap();
        let s = embed_macdonald_term(&Partition::new(vec![2]), &t).unwrap();
        let top = s.coeff(&g(2, &[(0, &[2])], 0));
        let mixed = s.coeff(&g(2, &[(0, &[1, 1])], 0));
        assert_eq!(mixed, top.mul(&MotScalar::from_poly(&[rat(1), rat(1)])));
    }

    #[test]
    fn mobius_values() {
        let v: Vec<i64> = (1..=10).map(mobius).collect();
        assert_eq!(v, vec![1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
    }
}
