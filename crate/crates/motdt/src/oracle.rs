//! Brute-force finite-field and linear-algebra oracles used to check the
//! engine independently:
//!
//! * weighted point counts of nilpotent parabolic pairs on `P^1` over `F_p`,
//!   summed over split bundles `O(a_1) + ... + O(a_r)` with all `a_i <= 0`;
//! * counts of flags preserved by a nilpotent matrix;
//! * the dimension identity `dim End - dim Higgs = -chi(gamma)` for
//!   parabolic split bundles;
//! * breadth-first enumeration of the positive roots of a star-shaped graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::coeffring::{format_rational, Rational};
use crate::error::{Error, Result};
use crate::gammaring::{GammaIndex, PointId};
use crate::kacmoody::{RootVector, StarGraph};
use crate::partitions::Partition;

/// Hard cap on the number of endomorphisms enumerated by one count.
pub const DESK_SCALE_CAP: u64 = 20_000_000;

/// A split bundle `O(a_1) + ... + O(a_r)` on `P^1` with `0 >= a_1 >= ... >= a_r`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SplitBundle {
    twists: Vec<i64>,
}

impl SplitBundle {
    /// Validating constructor (twists are sorted decreasingly).
    pub fn new(mut twists: Vec<i64>) -> Result<Self> {
        if twists.iter().any(|a| *a > 0) {
            return Err(Error::InvalidInput("split bundle twists must be nonpositive".into()));
        }
        twists.sort_unstable_by(|a, b| b.cmp(a));
        Ok(SplitBundle { twists })
    }

    /// Twists in decreasing order.
    pub fn twists(&self) -> &[i64] {
        &self.twists
    }

    /// Rank.
    pub fn rank(&self) -> usize {
        self.twists.len()
    }

    /// Degree.
    pub fn degree(&self) -> i64 {
        self.twists.iter().sum()
    }

    /// `dim End(E) = sum_{i,j} max(a_i - a_j + 1, 0)`.
    pub fn dim_end(&self) -> u64 {
        let mut s = 0;
        for a in &self.twists {
            for b in &self.twists {
                s += (a - b + 1).max(0) as u64;
            }
        }
        s
    }

    /// All split bundles of rank `r` and degree `d` with nonpositive twists.
    pub fn enumerate(r: usize, d: i64) -> Vec<SplitBundle> {
        fn rec(left: usize, remaining: i64, max: i64, cur: &mut Vec<i64>, out: &mut Vec<SplitBundle>) {
            if left == 0 {
                if remaining == 0 {
                    out.push(SplitBundle { twists: cur.clone() });
                }
                return;
            }
            // Remaining twists are <= a, so the sum is at most left * a.
            let lo = remaining.min(0);
            let mut a = max;
            while a >= lo {
                if (left as i64) * a >= remaining {
                    cur.push(a);
                    rec(left - 1, remaining - a, a, cur, out);
                    cur.pop();
                }
                a -= 1;
            }
        }
        let mut out = vec![];
        if d <= 0 {
            rec(r, d, 0, &mut vec![], &mut out);
        }
        out
    }
}

fn gl_order(m: u64, q: u64) -> u128 {
    let q = q as u128;
    let mut out: u128 = 1;
    let qm = q.pow(m as u32);
    for i in 0..m {
        out *= qm - q.pow(i as u32);
    }
    out
}

/// `|Aut(E)(F_q)|`: block `GL` factors times `q` to the dimension of the
/// unipotent part.
pub fn aut_order(e: &SplitBundle, q: u64) -> u128 {
    let mut mult: BTreeMap<i64, u64> = BTreeMap::new();
    for a in &e.twists {
        *mult.entry(*a).or_default() += 1;
    }
    let sq: u64 = mult.values().map(|m| m * m).sum();
    let mut out = (q as u128).pow((e.dim_end() - sq) as u32);
    for m in mult.values() {
        out *= gl_order(*m, q);
    }
    out
}

/// A point of `P^1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum ProjPoint {
    /// The point `t = a` of the affine chart.
    Affine(i64),
    /// The point at infinity.
    Infinity,
}

// ---------------------------------------------------------------------------
// Arithmetic over F_p and F_p[t]
// ---------------------------------------------------------------------------

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

type Poly = Vec<u64>;

fn ptrim(mut a: Poly) -> Poly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn pmul(a: &Poly, b: &Poly, p: u64) -> Poly {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    ptrim(out)
}

fn padd(a: &Poly, b: &Poly, p: u64) -> Poly {
    let mut out = vec![0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] = *x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] = (out[i] + y) % p;
    }
    ptrim(out)
}

fn psub(a: &Poly, b: &Poly, p: u64) -> Poly {
    let neg: Poly = b.iter().map(|y| (p - y % p) % p).collect();
    padd(a, &neg, p)
}

type PMat = Vec<Vec<Poly>>;

fn mat_mul(a: &PMat, b: &PMat, p: u64) -> PMat {
    let n = a.len();
    let mut out = vec![vec![vec![]; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_empty() {
                continue;
            }
            for j in 0..n {
                if !b[k][j].is_empty() {
                    out[i][j] = padd(&out[i][j], &pmul(&a[i][k], &b[k][j], p), p);
                }
            }
        }
    }
    out
}

/// Rank over `F_p(t)` by fraction-free elimination.
fn poly_rank(m: &PMat, p: u64) -> usize {
    let mut a = m.clone();
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|r| !a[*r][c].is_empty()) else {
            continue;
        };
        a.swap(rank, piv);
        for r in 0..rows {
            if r != rank && !a[r][c].is_empty() {
                let f = a[r][c].clone();
                let pv = a[rank][c].clone();
                for k in 0..cols {
                    a[r][k] = psub(&pmul(&pv, &a[r][k], p), &pmul(&f, &a[rank][k], p), p);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Generic Jordan data of a nilpotent `n`: `lambda_i = dim Ker n^i - dim Ker n^{i-1}`.
fn generic_type(m: &PMat, p: u64) -> Option<Partition> {
    let r = m.len();
    let mut power = m.clone();
    let mut kernels = vec![0usize];
    for _ in 1..=r {
        kernels.push(r - poly_rank(&power, p));
        power = mat_mul(&power, m, p);
    }
    if kernels[r] != r {
        return None;
    }
    let parts: Vec<u32> = kernels.windows(2).map(|w| (w[1] - w[0]) as u32).filter(|x| *x > 0).collect();
    Some(Partition::new(parts))
}

// ---------------------------------------------------------------------------
// Subspaces and flags of F_q^r
// ---------------------------------------------------------------------------

/// All subspaces of `F_q^r` as bitsets over vector indices, grouped by dimension.
struct SubspaceLattice {
    q: u64,
    r: usize,
    by_dim: Vec<Vec<u128>>,
}

impl SubspaceLattice {
    fn new(q: u64, r: usize) -> Self {
        let n = q.pow(r as u32) as usize;
        assert!(n <= 128, "vector space too large for bitset subspaces");
        let add = |a: usize, b: usize| -> usize {
            let (mut x, mut y, mut out, mut base) = (a as u64, b as u64, 0u64, 1u64);
            for _ in 0..r {
                out += ((x % q + y % q) % q) * base;
                x /= q;
                y /= q;
                base *= q;
            }
            out as usize
        };
        let scale = |c: u64, a: usize| -> usize {
            let (mut x, mut out, mut base) = (a as u64, 0u64, 1u64);
            for _ in 0..r {
                out += (x % q * c % q) * base;
                x /= q;
                base *= q;
            }
            out as usize
        };
        let mut seen: HashSet<u128> = HashSet::new();
        let zero: u128 = 1;
        let mut by_dim = vec![vec![]; r + 1];
        let mut frontier = vec![zero];
        seen.insert(zero);
        by_dim[0].push(zero);
        for dim in 1..=r {
            let mut next = vec![];
            for &u in &frontier {
                for v in 0..n {
                    if u >> v & 1 == 1 {
                        continue;
                    }
                    let mut w = 0u128;
                    for m in 0..n {
                        if u >> m & 1 == 1 {
                            for c in 0..q {
                                w |= 1u128 << add(m, scale(c, v));
                            }
                        }
                    }
                    if seen.insert(w) {
                        next.push(w);
                        by_dim[dim].push(w);
                    }
                }
            }
            frontier = next;
        }
        SubspaceLattice { q, r, by_dim }
    }

    /// Index of `M v` for every vector index `v`.
    fn action(&self, m: &[Vec<u64>]) -> Vec<usize> {
        let n = self.q.pow(self.r as u32) as usize;
        (0..n)
            .map(|v| {
                let mut digits = vec![0u64; self.r];
                let mut x = v as u64;
                for d in digits.iter_mut() {
                    *d = x % self.q;
                    x /= self.q;
                }
                let mut out = 0u64;
                let mut base = 1u64;
                for row in m.iter().take(self.r) {
                    let s: u64 = row.iter().zip(&digits).map(|(a, b)| a * b).sum::<u64>() % self.q;
                    out += s * base;
                    base *= self.q;
                }
                out as usize
            })
            .collect()
    }

    /// Number of flags of the given type preserved by the action.
    fn count_flags(&self, action: &[usize], flag_type: &[u32]) -> u64 {
        let invariant = |u: u128| (0..action.len()).all(|v| u >> v & 1 == 0 || u >> action[v] & 1 == 1);
        let mut dims = vec![];
        let mut d = self.r as i64;
        for t in flag_type {
            d -= *t as i64;
            dims.push(d as usize);
        }
        fn rec(level: usize, prev: u128, dims: &[usize], lat: &SubspaceLattice, inv: &dyn Fn(u128) -> bool) -> u64 {
            if level == dims.len() {
                return 1;
            }
            lat.by_dim[dims[level]]
                .iter()
                .filter(|u| **u & !prev == 0 && inv(**u))
                .map(|u| rec(level + 1, *u, dims, lat, inv))
                .sum()
        }
        let full = self.by_dim[self.r][0];
        rec(0, full, &dims, self, &invariant)
    }
}

/// The nilpotent `n_lambda` with `dim Ker n^i - dim Ker n^{i-1} = lambda_i`
/// (Jordan blocks of sizes given by the conjugate partition), over `F_q`.
fn nilpotent_of_type(lambda: &Partition) -> Vec<Vec<u64>> {
    let n = lambda.size() as usize;
    let mut m = vec![vec![0u64; n]; n];
    let mut start = 0;
    for block in lambda.conjugate().parts() {
        for i in 0..(*block as usize - 1) {
            m[start + i][start + i + 1] = 1;
        }
        start += *block as usize;
    }
    m
}

/// Number of flags of type `flag_type` (successive quotient dimensions) in
/// `F_q^{|lambda|}` preserved by `n_lambda`.
pub fn count_flags(lambda: &Partition, flag_type: &[u32], q: u64) -> Result<u64> {
    if !is_prime(q) {
        return Err(Error::InvalidInput(format!("q = {q} must be prime")));
    }
    if lambda.size() > 4 || q.pow(lambda.size()) > 128 {
        return Err(Error::OutOfDeskScale(format!(
            "flag counting needs q^|lambda| <= 128 (|lambda| = {}, q = {q})",
            lambda.size()
        )));
    }
    if flag_type.iter().sum::<u32>() != lambda.size() {
        return Err(Error::SizeMismatch {
            expected: lambda.size(),
            got: flag_type.iter().sum(),
        });
    }
    let lat = SubspaceLattice::new(q, lambda.size() as usize);
    let act = lat.action(&nilpotent_of_type(lambda));
    Ok(lat.count_flags(&act, flag_type))
}

// ---------------------------------------------------------------------------
// Weighted counts of nilpotent parabolic pairs
// ---------------------------------------------------------------------------

/// Weighted count of nilpotent parabolic pairs for one class.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CountReport {
    /// Field size.
    pub q: u64,
    /// Class counted.
    pub gamma: GammaIndex,
    /// Generic type, or `None` for all nilpotent pairs.
    pub lambda: Option<Partition>,
    /// `sum_E #{(Psi, flags)} / |Aut E|`.
    pub weighted_count: Rational,
    /// Contribution of each split type.
    pub per_split: Vec<(SplitBundle, Rational)>,
}

impl CountReport {
    /// JSON form.
    pub fn to_json(&self) -> Value {
        json!({
            "q": self.q,
            "gamma": self.gamma.to_json(),
            "lambda": self.lambda.as_ref().map(|l| l.to_string()).unwrap_or_else(|| "all".into()),
            "weighted_count": format_rational(&self.weighted_count),
            "per_split": self.per_split.iter().map(|(e, c)| json!({
                "twists": e.twists(),
                "count": format_rational(c),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Fiber of `Psi` at a point: value at `t = a`, or the coefficient of
/// `t^{a_i - a_j}` at infinity.
fn fiber(psi: &PMat, twists: &[i64], pt: ProjPoint, p: u64) -> Vec<Vec<u64>> {
    let r = psi.len();
    let mut out = vec![vec![0u64; r]; r];
    for i in 0..r {
        for j in 0..r {
            let f = &psi[i][j];
            out[i][j] = match pt {
                ProjPoint::Affine(a) => {
                    let a = a.rem_euclid(p as i64) as u64;
                    f.iter().rev().fold(0, |acc, c| (acc * a + c) % p)
                }
                ProjPoint::Infinity => {
                    let e = twists[i] - twists[j];
                    if e >= 0 {
                        f.get(e as usize).copied().unwrap_or(0)
                    } else {
                        0
                    }
                }
            };
        }
    }
    out
}

/// Weighted count `sum_E #{(Psi, flags)} / |Aut E|` of nilpotent parabolic
/// pairs of class `gamma` on `P^1` over `F_q`, with `Psi` of generic type
/// `lambda` (all nilpotent `Psi` if `None`); `points` assigns a point of
/// `P^1(F_q)` to every parabolic point of `gamma`.
pub fn count_pairs_nilp(
    q: u64,
    lambda: Option<&Partition>,
    gamma: &GammaIndex,
    points: &BTreeMap<PointId, ProjPoint>,
) -> Result<CountReport> {
    if !is_prime(q) {
        return Err(Error::InvalidInput(format!("q = {q} must be prime")));
    }
    let r = gamma.r() as usize;
    if r == 0 || r > 3 || gamma.d() > 0 {
        return Err(Error::InvalidInput("the oracle needs 1 <= rank <= 3 and d <= 0".into()));
    }
    if q.pow(r as u32) > 128 {
        return Err(Error::OutOfDeskScale(format!("q^r = {} exceeds 128", q.pow(r as u32))));
    }
    if let Some(l) = lambda {
        if l.size() as usize != r {
            return Err(Error::SizeMismatch {
                expected: r as u32,
                got: l.size(),
            });
        }
    }
    let mut fibers: Vec<(ProjPoint, Vec<u32>)> = vec![];
    let mut used = BTreeSet::new();
    for x in gamma.points() {
        let pt = *points
            .get(&x)
            .ok_or_else(|| Error::InvalidInput(format!("no coordinate for parabolic point {x}")))?;
        let key = match pt {
            ProjPoint::Affine(a) => ProjPoint::Affine(a.rem_euclid(q as i64)),
            inf => inf,
        };
        if !used.insert(key) {
            return Err(Error::InvalidInput("parabolic points must be distinct in P^1(F_q)".into()));
        }
        fibers.push((pt, gamma.levels(x).to_vec()));
    }
    let splits = SplitBundle::enumerate(r, gamma.d());
    let total: u64 = splits.iter().map(|e| q.saturating_pow(e.dim_end() as u32)).sum();
    if total > DESK_SCALE_CAP {
        return Err(Error::OutOfDeskScale(format!(
            "{total} endomorphisms to enumerate (cap {DESK_SCALE_CAP})"
        )));
    }
    let lat = SubspaceLattice::new(q, r);
    let mut flag_cache: HashMap<(Vec<usize>, Vec<u32>), u64> = HashMap::new();
    let mut weighted = Rational::zero();
    let mut per_split = vec![];
    for e in &splits {
        let a = e.twists();
        // Coefficient slots: (i, j, k) with k <= a_i - a_j.
        let mut slots = vec![];
        for i in 0..r {
            for j in 0..r {
                let deg = a[i] - a[j];
                for k in 0..=deg.max(-1) {
                    slots.push((i, j, k as usize));
                }
            }
        }
        let mut digits = vec![0u64; slots.len()];
        let mut raw: u64 = 0;
        loop {
            let mut psi: PMat = vec![vec![vec![]; r]; r];
            for (s, (i, j, k)) in slots.iter().enumerate() {
                if digits[s] != 0 {
                    let f = &mut psi[*i][*j];
                    if f.len() <= *k {
                        f.resize(k + 1, 0);
                    }
                    f[*k] = digits[s];
                }
            }
            if let Some(t) = generic_type(&psi, q) {
                if lambda.is_none_or(|l| *l == t) {
                    let mut prod: u64 = 1;
                    for (pt, ty) in &fibers {
                        let act = lat.action(&fiber(&psi, a, *pt, q));
                        let key = (act, ty.clone());
                        let c = match flag_cache.get(&key) {
                            Some(c) => *c,
                            None => {
                                let c = lat.count_flags(&key.0, ty);
                                flag_cache.insert(key, c);
                                c
                            }
                        };
                        prod *= c;
                        if prod == 0 {
                            break;
                        }
                    }
                    raw += prod;
                }
            }
            // Next coefficient assignment.
            let mut pos = 0;
            while pos < digits.len() {
                digits[pos] += 1;
                if digits[pos] < q {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == digits.len() {
                break;
            }
        }
        let contrib = Rational::new(raw.into(), aut_order(e, q).into());
        weighted += &contrib;
        per_split.push((e.clone(), contrib));
    }
    Ok(CountReport {
        q,
        gamma: gamma.clone(),
        lambda: lambda.cloned(),
        weighted_count: weighted,
        per_split,
    })
}

// ---------------------------------------------------------------------------
// Dimension identity
// ---------------------------------------------------------------------------

/// A flag in the fiber `Q^r` given by an ordered basis: `E_j` is spanned by
/// the last `r - (r_1 + ... + r_j)` basis vectors.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FiberFlag {
    /// Flag type `(r_1, r_2, ...)`.
    pub flag_type: Vec<u32>,
    /// Basis vectors (each of length `r`).
    pub basis: Vec<Vec<Rational>>,
}

/// Outcome of [`dim_identity_check`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DimReport {
    /// Dimension of flag-preserving endomorphisms.
    pub dim_end: i64,
    /// Dimension of strongly parabolic Higgs fields with values in `Omega(D)`.
    pub dim_higgs: i64,
    /// `-chi(gamma)` in genus 0.
    pub expected: i64,
}

impl DimReport {
    /// Whether `dim_end - dim_higgs = expected`.
    pub fn holds(&self) -> bool {
        self.dim_end - self.dim_higgs == self.expected
    }
}

fn rational_rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows.len()).find(|r| !rows[*r][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = rows[rank][c].recip();
        for k in c..cols {
            rows[rank][k] = &rows[rank][k] * &inv;
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][c].is_zero() {
                let f = rows[r][c].clone();
                for k in c..cols {
                    let delta = &f * &rows[rank][k];
                    rows[r][k] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Basis of the annihilator of the span of `vecs` in `Q^r`.
fn annihilator(vecs: &[Vec<Rational>], r: usize) -> Vec<Vec<Rational>> {
    // Row-reduce and read off the null space of the matrix with rows `vecs`.
    let mut rows: Vec<Vec<Rational>> = vecs.to_vec();
    let mut pivots = vec![];
    let mut rank = 0;
    for c in 0..r {
        let Some(piv) = (rank..rows.len()).find(|i| !rows[*i][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = rows[rank][c].recip();
        for k in 0..r {
            rows[rank][k] = &rows[rank][k] * &inv;
        }
        for i in 0..rows.len() {
            if i != rank && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for k in 0..r {
                    let delta = &f * &rows[rank][k];
                    rows[i][k] -= delta;
                }
            }
        }
        pivots.push(c);
        rank += 1;
    }
    let free: Vec<usize> = (0..r).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); r];
            v[f] = Rational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -rows[row][f].clone();
            }
            v
        })
        .collect()
}

/// Compares `dim End(E) - dim Higgs(E)` with `-chi(gamma)` (genus 0) for a
/// split bundle with flags at the given points, by exact linear algebra on
/// polynomial coefficient spaces.
pub fn dim_identity_check(e: &SplitBundle, flags: &[(ProjPoint, FiberFlag)]) -> Result<DimReport> {
    let r = e.rank();
    if r == 0 || r > 3 {
        return Err(Error::InvalidInput("dimension check supports rank 1..=3".into()));
    }
    let mut seen = BTreeSet::new();
    for (pt, f) in flags {
        if !seen.insert(*pt) {
            return Err(Error::InvalidInput("parabolic points must be distinct".into()));
        }
        if f.flag_type.iter().sum::<u32>() as usize != r || f.basis.len() != r || f.basis.iter().any(|b| b.len() != r) {
            return Err(Error::InvalidInput("flag data does not match the rank".into()));
        }
        if rational_rank(f.basis.clone()) != r {
            return Err(Error::InvalidInput("flag basis must be invertible".into()));
        }
    }
    let a = e.twists();
    let n_d = flags.len() as i64;
    // Subspaces E_{x,j}, j = 0..=len.
    let chains: Vec<Vec<Vec<Vec<Rational>>>> = flags
        .iter()
        .map(|(_, f)| {
            let mut out = vec![f.basis.clone()];
            let mut start = 0usize;
            for t in &f.flag_type {
                start += *t as usize;
                out.push(f.basis[start..].to_vec());
            }
            out
        })
        .collect();
    let dim_with = |shift: i64, strict: bool| -> usize {
        // Unknowns: coefficient k of entry (i, j), k <= a_i - a_j + shift.
        let mut index = vec![];
        for i in 0..r {
            for j in 0..r {
                let deg = a[i] - a[j] + shift;
                for k in 0..=deg.max(-1) {
                    index.push((i, j, k, deg));
                }
            }
        }
        let mut rows = vec![];
        for ((pt, _), chain) in flags.iter().zip(&chains) {
            for lvl in 1..chain.len() {
                // strict: M E_{j-1} in E_j; otherwise M E_j in E_j.
                let source = if strict { &chain[lvl - 1] } else { &chain[lvl] };
                let target = &chain[lvl];
                for w in annihilator(target, r) {
                    for u in source {
                        let row: Vec<Rational> = index
                            .iter()
                            .map(|&(i, j, k, deg)| {
                                let weight = &w[i] * &u[j];
                                match pt {
                                    ProjPoint::Affine(x) => weight * Rational::from_integer(x.pow(k as u32).into()),
                                    ProjPoint::Infinity => {
                                        if k == deg {
                                            weight
                                        } else {
                                            Rational::zero()
                                        }
                                    }
                                }
                            })
                            .collect();
                        rows.push(row);
                    }
                }
            }
        }
        let unknowns = index.len();
        if rows.is_empty() {
            return unknowns;
        }
        unknowns - rational_rank(rows)
    };
    let dim_end = dim_with(0, false) as i64;
    let dim_higgs = dim_with(n_d - 2, true) as i64;
    let mut chi_sum = 0i64;
    for (_, f) in flags {
        let s: i64 = f.flag_type.iter().map(|c| *c as i64).sum();
        let sq: i64 = f.flag_type.iter().map(|c| (*c as i64).pow(2)).sum();
        chi_sum += (s * s - sq) / 2;
    }
    Ok(DimReport {
        dim_end,
        dim_higgs,
        expected: (r * r) as i64 - chi_sum,
    })
}

// ---------------------------------------------------------------------------
// Root enumeration
// ---------------------------------------------------------------------------

/// All positive roots of height `<= height_max`: real roots by raising
/// simple roots through reflections, imaginary roots by raising every vector
/// of the fundamental region found in the height box.
pub fn enumerate_roots(graph: &StarGraph, height_max: i64) -> BTreeSet<RootVector> {
    let adj = graph.adjacency();
    let n = adj.len();
    let pairing = |a: &[i64], i: usize| 2 * a[i] - adj[i].iter().map(|j| a[*j]).sum::<i64>();
    let raise_all = |seeds: Vec<Vec<i64>>| -> HashSet<Vec<i64>> {
        let mut seen: HashSet<Vec<i64>> = seeds.iter().cloned().collect();
        let mut queue: VecDeque<Vec<i64>> = seeds.into_iter().collect();
        while let Some(a) = queue.pop_front() {
            let h: i64 = a.iter().sum();
            for i in 0..n {
                let p = pairing(&a, i);
                if p < 0 && h - p <= height_max {
                    let mut b = a.clone();
                    b[i] -= p;
                    if seen.insert(b.clone()) {
                        queue.push_back(b);
                    }
                }
            }
        }
        seen
    };
    let simple: Vec<Vec<i64>> = (0..n)
        .filter(|_| height_max >= 1)
        .map(|i| {
            let mut v = vec![0; n];
            v[i] = 1;
            v
        })
        .collect();
    let mut roots = raise_all(simple);
    // Fundamental region: connected support and non-positive pairings.
    let mut fundamental = vec![];
    let mut cur = vec![0i64; n];
    fn sweep(pos: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>, check: &dyn Fn(&[i64]) -> bool) {
        if pos == cur.len() {
            if check(cur) {
                out.push(cur.clone());
            }
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            sweep(pos + 1, left - v, cur, out, check);
        }
        cur[pos] = 0;
    }
    let connected = |a: &[i64]| {
        let support: Vec<usize> = (0..n).filter(|i| a[*i] != 0).collect();
        let Some(&s) = support.first() else { return false };
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut stack = vec![s];
        let mut count = 0;
        while let Some(u) = stack.pop() {
            count += 1;
            for &v in &adj[u] {
                if !seen[v] && a[v] != 0 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        count == support.len()
    };
    let in_region = |a: &[i64]| a.iter().any(|c| *c != 0) && (0..n).all(|i| pairing(a, i) <= 0) && connected(a);
    sweep(0, height_max, &mut cur, &mut fundamental, &in_region);
    roots.extend(raise_all(fundamental));
    roots
        .into_iter()
        .map(|v| RootVector::from_flat(&v, graph))
        .collect()
}
