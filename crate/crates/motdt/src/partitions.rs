//! Partitions, hooks, the pairing `<lambda, mu>` and the hook-product kernel
//! coefficients `a_lambda(z^-1)` expanded as truncated series in `z^-1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::coeffring::{Accumulator, MotScalar};
use crate::error::{Error, Result};

/// A partition: weakly decreasing positive parts (empty = zero partition).
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Partition(Vec<u32>);

impl Partition {
    /// Builds a partition, sorting the parts and dropping zeros.
    pub fn new(mut parts: Vec<u32>) -> Self {
        parts.retain(|p| *p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition(parts)
    }

    /// The empty partition.
    pub fn empty() -> Self {
        Partition(vec![])
    }

    /// The parts, largest first.
    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    /// Number of parts.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True for the zero partition.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|lambda|`, the sum of parts.
    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Part `i` (0-based), zero beyond the length.
    pub fn part(&self, i: usize) -> u32 {
        self.0.get(i).copied().unwrap_or(0)
    }

    /// The conjugate (transposed) partition.
    pub fn conjugate(&self) -> Partition {
        let n = self.part(0);
        Partition(
            (1..=n)
                .map(|j| self.0.iter().filter(|p| **p >= j).count() as u32)
                .collect(),
        )
    }

    /// One hook per cell, row by row: `(arm, leg)` of cell `(i, j)` are the
    /// numbers of cells strictly to its right and strictly above it.
    pub fn hooks(&self) -> Vec<Hook> {
        let conj = self.conjugate();
        let mut out = Vec::with_capacity(self.size() as usize);
        for (i, &row) in self.0.iter().enumerate() {
            for j in 0..row {
                out.push(Hook {
                    arm: row - j - 1,
                    leg: conj.part(j as usize) - i as u32 - 1,
                });
            }
        }
        out
    }

    /// `<lambda, mu> = sum_i lambda'_i mu'_i`.
    pub fn pairing(&self, other: &Partition) -> u64 {
        let a = self.conjugate();
        let b = other.conjugate();
        a.0.iter()
            .zip(b.0.iter())
            .map(|(x, y)| *x as u64 * *y as u64)
            .sum()
    }

    /// Dominance order: `self <= other` iff all partial sums are `<=`.
    pub fn dominated_by(&self, other: &Partition) -> bool {
        if self.size() != other.size() {
            return false;
        }
        let (mut s, mut t) = (0u32, 0u32);
        for i in 0..self.len().max(other.len()) {
            s += self.part(i);
            t += other.part(i);
            if s > t {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for Partition {
    /// Comma-separated parts, e.g. `2,1`; the empty partition prints as ``.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", s.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Partition::empty());
        }
        let parts: Vec<u32> = s
            .split(',')
            .map(|t| t.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("invalid partition '{s}'")))?;
        if parts.contains(&0) || parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Parse(format!(
                "partition parts must be positive and weakly decreasing: '{s}'"
            )));
        }
        Ok(Partition(parts))
    }
}

impl PartialOrd for Partition {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Partition {
    /// Size first, then reverse lexicographic (so `(3) < (2,1) < (1,1,1)`).
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| other.0.cmp(&self.0))
    }
}

/// Arm and leg lengths of one cell of a Young diagram.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Hook {
    /// Cells strictly to the right in the same row.
    pub arm: u32,
    /// Cells strictly above in the same column.
    pub leg: u32,
}

/// All partitions of `n`, in reverse lexicographic order.
pub fn enumerate(n: u32) -> Vec<Partition> {
    fn rec(n: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if n == 0 {
            out.push(Partition(cur.clone()));
            return;
        }
        for p in (1..=n.min(max)).rev() {
            cur.push(p);
            rec(n - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    rec(n, n, &mut vec![], &mut out);
    out
}

/// A truncated power series in `z^-1`: coefficients at exponents
/// `-depth <= d <= 0` (key `d` stands for `z^d`).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ZSeries {
    depth: u32,
    coeffs: BTreeMap<i64, MotScalar>,
}

impl ZSeries {
    /// The zero series with the given truncation depth.
    pub fn zero(depth: u32) -> Self {
        ZSeries {
            depth,
            coeffs: BTreeMap::new(),
        }
    }

    /// The constant series `c`.
    pub fn constant(c: MotScalar, depth: u32) -> Self {
        let mut s = Self::zero(depth);
        s.set(0, c);
        s
    }

    /// Truncation depth `Dmax`.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Coefficient of `z^d` (zero outside the stored range).
    pub fn coeff(&self, d: i64) -> MotScalar {
        self.coeffs.get(&d).cloned().unwrap_or_else(MotScalar::zero)
    }

    /// Sets the coefficient of `z^d`; `d` must lie in `[-depth, 0]`.
    pub fn set(&mut self, d: i64, c: MotScalar) {
        assert!(d <= 0 && d >= -(self.depth as i64), "exponent {d} outside window");
        if c.is_zero() {
            self.coeffs.remove(&d);
        } else {
            self.coeffs.insert(d, c);
        }
    }

    /// Non-zero coefficients in increasing exponent order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &MotScalar)> {
        self.coeffs.iter().map(|(d, c)| (*d, c))
    }

    /// Truncated product (depth is the minimum of both depths).
    pub fn mul(&self, other: &ZSeries) -> ZSeries {
        let depth = self.depth.min(other.depth);
        let mut acc: BTreeMap<i64, Accumulator> = BTreeMap::new();
        for (d1, c1) in self.iter() {
            for (d2, c2) in other.iter() {
                let d = d1 + d2;
                if d >= -(depth as i64) {
                    acc.entry(d).or_default().add_product(c1, c2);
                }
            }
        }
        let mut out = ZSeries::zero(depth);
        for (d, a) in acc {
            out.set(d, a.finish());
        }
        out
    }

    /// JSON form `{"depth": D, "coeffs": {"d": MotScalar}}`.
    pub fn to_json(&self) -> Value {
        let coeffs: serde_json::Map<String, Value> = self
            .coeffs
            .iter()
            .rev()
            .map(|(d, c)| (d.to_string(), c.to_json()))
            .collect();
        json!({"depth": self.depth, "coeffs": coeffs})
    }

    /// Parses the JSON form of [`ZSeries::to_json`].
    pub fn from_json(v: &Value) -> Result<ZSeries> {
        let bad = |m: &str| Error::Schema(format!("ZSeries JSON: {m}"));
        let depth = v
            .get("depth")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| bad("missing 'depth'"))? as u32;
        let coeffs = v
            .get("coeffs")
            .and_then(|x| x.as_object())
            .ok_or_else(|| bad("missing 'coeffs' object"))?;
        let mut out = ZSeries::zero(depth);
        for (k, c) in coeffs {
            let d: i64 = k.parse().map_err(|_| bad("bad exponent key"))?;
            if d > 0 || d < -(depth as i64) {
                return Err(bad("exponent outside [-depth, 0]"));
            }
            out.set(d, MotScalar::from_json(c)?);
        }
        Ok(out)
    }
}

/// Geometric series `c * sum_k ratio^k u^(k*step)` truncated at `u^depth`
/// (with `u = z^-1`).
fn geometric(c: &MotScalar, ratio: &MotScalar, step: u32, depth: u32) -> ZSeries {
    let mut out = ZSeries::zero(depth);
    let mut term = c.clone();
    let mut k = 0u32;
    while k * step <= depth {
        out.set(-((k * step) as i64), term.clone());
        if step == 0 {
            break;
        }
        term = term.mul(ratio);
        k += 1;
    }
    out
}

/// Expansion of `a_lambda(z^-1) = 1 / prod_h (q^a - z^(-l-1)) (q^(a+1) - z^(-l))`
/// through `z^-depth`.
pub fn hook_kernel_series(lambda: &Partition, depth: u32) -> ZSeries {
    let mut out = ZSeries::constant(MotScalar::one(), depth);
    for h in lambda.hooks() {
        // 1 / (q^a - u^(l+1)) = q^-a * sum_k q^(-a k) u^((l+1) k)
        let qa = MotScalar::q_pow(-(h.arm as i64));
        out = out.mul(&geometric(&qa, &qa, h.leg + 1, depth));
        // 1 / (q^(a+1) - u^l)
        if h.leg == 0 {
            let c = MotScalar::inv_q_power_minus_one(h.arm + 1);
            out = out.mul(&ZSeries::constant(c, depth));
        } else {
            let qa1 = MotScalar::q_pow(-(h.arm as i64 + 1));
            out = out.mul(&geometric(&qa1, &qa1, h.leg, depth));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::rat;

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    #[test]
    fn conjugate_examples() {
        assert_eq!(p("3,1").conjugate(), p("2,1,1"));
        assert_eq!(p("").conjugate(), p(""));
        assert_eq!(p("2,2").conjugate(), p("2,2"));
    }

    #[test]
    fn hooks_examples() {
        let h = |a, l| Hook { arm: a, leg: l };
        assert_eq!(p("1").hooks(), vec![h(0, 0)]);
        assert_eq!(p("2,1").hooks(), vec![h(1, 1), h(0, 0), h(0, 0)]);
        assert_eq!(p("2").hooks(), vec![h(1, 0), h(0, 0)]);
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(p("2,1").pairing(&p("2,1")), 5);
        for n in 1..6 {
            assert_eq!(Partition::new(vec![n]).pairing(&Partition::new(vec![n])), n as u64);
        }
        assert_eq!(p("3,2").pairing(&p("")), 0);
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(enumerate(0), vec![p("")]);
        assert_eq!(enumerate(3), vec![p("3"), p("2,1"), p("1,1,1")]);
        assert_eq!(enumerate(4).len(), 5);
        assert_eq!(enumerate(8).len(), 22);
    }

    #[test]
    fn structural_properties() {
        for n in 0..=8 {
            for l in enumerate(n) {
                assert_eq!(l.conjugate().conjugate(), l);
                assert_eq!(l.hooks().len() as u32, l.size());
                for m in enumerate(n) {
                    assert_eq!(l.pairing(&m), m.pairing(&l));
                }
            }
        }
    }

    #[test]
    fn kernel_series_single_box() {
        let s = hook_kernel_series(&p("1"), 2);
        let c = MotScalar::inv_q_power_minus_one(1);
        for d in 0..=2 {
            assert_eq!(s.coeff(-d), c);
        }
        assert_eq!(s.coeff(0).evaluate(&rat(2)).unwrap(), rat(1));
    }

    #[test]
    fn kernel_series_constant_term_is_centralizer_inverse() {
        // a_(2)(0) = 1/|GL_2| and a_(1,1)(0) = 1/(q(q-1)).
        let gl2 = MotScalar::from_poly(&[rat(0), rat(1)])
            .mul(&MotScalar::q_power_minus_one(1))
            .mul(&MotScalar::q_power_minus_one(2));
        assert_eq!(hook_kernel_series(&p("2"), 0).coeff(0), gl2.invert().unwrap());
        let z11 = MotScalar::q().mul(&MotScalar::q_power_minus_one(1));
        assert_eq!(hook_kernel_series(&p("1,1"), 0).coeff(0), z11.invert().unwrap());
        for n in 0..=6 {
            for l in enumerate(n) {
                assert!(hook_kernel_series(&l, 0).coeff(0).is_unit());
            }
        }
    }

    #[test]
    fn zseries_json_round_trip() {
        let s = hook_kernel_series(&p("2,1"), 3);
        let back = ZSeries::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}
