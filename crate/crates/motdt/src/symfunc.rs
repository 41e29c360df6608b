//! Symmetric functions in the monomial basis with coefficients in `Z[q, z]`:
//! modified Macdonald polynomials `H~_lambda(w; q, z)` and their `z = 0`
//! specializations (Hall–Littlewood polynomials `H_lambda(w; q)`).
//!
//! `H~_lambda` is built from the combinatorial fillings formula: the
//! coefficient of `m_mu` is the sum over fillings of the diagram of `lambda`
//! with content `mu` of `q^inv * z^maj`.  The diagram has rows of lengths
//! `lambda_1, lambda_2, ...` (bottom to top), so arms pair with `q` and legs
//! with `z`.  This convention is the one for which the kernel identity with
//! the hook coefficients `a_lambda` holds; [`Convention`] exposes the other
//! candidates so the choice can be pinned by tests.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde_json::{json, Value};

use crate::coeffring::{rat, MotScalar};
use crate::error::{Error, Result};
use crate::partitions::{enumerate, Partition, ZSeries};

/// Largest partition size accepted by the fillings construction.
pub const MAX_DEGREE: u32 = 8;

/// A polynomial in `q` and `z` with integer coefficients, keyed by
/// `(q-exponent, z-exponent)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct QZPoly(BTreeMap<(u32, u32), i64>);

impl QZPoly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        QZPoly(BTreeMap::new())
    }

    /// The constant 1.
    pub fn one() -> Self {
        Self::monomial(1, 0, 0)
    }

    /// `c * q^a * z^b`.
    pub fn monomial(c: i64, a: u32, b: u32) -> Self {
        let mut m = BTreeMap::new();
        if c != 0 {
            m.insert((a, b), c);
        }
        QZPoly(m)
    }

    /// Adds `c * q^a * z^b` in place.
    pub fn add_term(&mut self, c: i64, a: u32, b: u32) {
        let e = self.0.entry((a, b)).or_insert(0);
        *e += c;
        if *e == 0 {
            self.0.remove(&(a, b));
        }
    }

    /// Non-zero terms `((a, b), c)`.
    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, i64)> + '_ {
        self.0.iter().map(|((a, b), c)| (*a, *b, *c))
    }

    /// True for the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Coefficient of `q^a z^b`.
    pub fn coeff(&self, a: u32, b: u32) -> i64 {
        self.0.get(&(a, b)).copied().unwrap_or(0)
    }

    /// Largest z-exponent (0 for the zero polynomial).
    pub fn z_degree(&self) -> u32 {
        self.0.keys().map(|(_, b)| *b).max().unwrap_or(0)
    }

    /// Exchanges the roles of `q` and `z`.
    pub fn swap_qz(&self) -> QZPoly {
        QZPoly(self.0.iter().map(|((a, b), c)| ((*b, *a), *c)).collect())
    }

    /// The `z = 0` specialization.
    pub fn at_z_zero(&self) -> QZPoly {
        QZPoly(
            self.0
                .iter()
                .filter(|((_, b), _)| *b == 0)
                .map(|(k, c)| (*k, *c))
                .collect(),
        )
    }

    /// Coefficient of `z^b` as a polynomial in `q`.
    pub fn z_coefficient(&self, b: u32) -> MotScalar {
        let deg = self.0.keys().map(|(a, _)| *a).max().unwrap_or(0) as usize;
        let mut coeffs = vec![rat(0); deg + 1];
        for ((a, bb), c) in &self.0 {
            if *bb == b {
                coeffs[*a as usize] = rat(*c);
            }
        }
        MotScalar::from_poly(&coeffs)
    }

    /// Value at an integer point `(q0, z0)`.
    pub fn evaluate(&self, q0: i64, z0: i64) -> i128 {
        self.0
            .iter()
            .map(|((a, b), c)| *c as i128 * (q0 as i128).pow(*a) * (z0 as i128).pow(*b))
            .sum()
    }
}

impl fmt::Display for QZPoly {
    /// Terms by decreasing q-power, then decreasing z-power, e.g. `q*z + 2*q + 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut out = String::new();
        for (idx, ((a, b), c)) in self.0.iter().rev().enumerate() {
            let neg = *c < 0;
            let abs = c.unsigned_abs();
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = vec![];
            match a {
                0 => {}
                1 => factors.push("q".into()),
                _ => factors.push(format!("q^{a}")),
            }
            match b {
                0 => {}
                1 => factors.push("z".into()),
                _ => factors.push(format!("z^{b}")),
            }
            if factors.is_empty() {
                out.push_str(&abs.to_string());
            } else {
                if abs != 1 {
                    factors.insert(0, abs.to_string());
                }
                out.push_str(&factors.join("*"));
            }
        }
        write!(f, "{out}")
    }
}

/// A homogeneous symmetric function of degree `n` in the monomial basis.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SymFun {
    degree: u32,
    coeffs: BTreeMap<Partition, QZPoly>,
}

impl SymFun {
    /// Builds a symmetric function; zero coefficients are dropped and every
    /// key must have size `degree`.
    pub fn new(degree: u32, coeffs: BTreeMap<Partition, QZPoly>) -> Result<Self> {
        for mu in coeffs.keys() {
            if mu.size() != degree {
                return Err(Error::SizeMismatch {
                    expected: degree,
                    got: mu.size(),
                });
            }
        }
        Ok(SymFun {
            degree,
            coeffs: coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        })
    }

    /// Degree `n`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// The coefficient of `m_mu`.
    pub fn coefficient(&self, mu: &Partition) -> Result<QZPoly> {
        if mu.size() != self.degree {
            return Err(Error::SizeMismatch {
                expected: self.degree,
                got: mu.size(),
            });
        }
        Ok(self.coeffs.get(mu).cloned().unwrap_or_default())
    }

    /// Non-zero coefficients by monomial index.
    pub fn iter(&self) -> impl Iterator<Item = (&Partition, &QZPoly)> {
        self.coeffs.iter()
    }

    /// Coefficient-wise map.
    fn map(&self, f: impl Fn(&QZPoly) -> QZPoly) -> SymFun {
        SymFun {
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .map(|(m, c)| (m.clone(), f(c)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// JSON form `{"degree": n, "coeffs": {"mu": "<polynomial>"}}`.
    pub fn to_json(&self) -> Value {
        let coeffs: serde_json::Map<String, Value> = self
            .coeffs
            .iter()
            .map(|(m, c)| (m.to_string(), json!(c.to_string())))
            .collect();
        json!({"degree": self.degree, "coeffs": coeffs})
    }
}

/// Which statistic pairs with which variable, and which diagram is filled.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Convention {
    /// Fill the diagram of the conjugate partition instead.
    pub transpose: bool,
    /// Exchange `q` and `z` in the result.
    pub swap_qz: bool,
}

impl Convention {
    /// The convention used throughout the engine.
    pub const FROZEN: Convention = Convention {
        transpose: false,
        swap_qz: false,
    };

    /// All four candidate conventions.
    pub fn all() -> [Convention; 4] {
        [
            Convention { transpose: false, swap_qz: false },
            Convention { transpose: true, swap_qz: false },
            Convention { transpose: false, swap_qz: true },
            Convention { transpose: true, swap_qz: true },
        ]
    }
}

fn macdonald_cache() -> &'static Mutex<HashMap<Partition, Arc<SymFun>>> {
    static CACHE: OnceLock<Mutex<HashMap<Partition, Arc<SymFun>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Modified Macdonald polynomial `H~_lambda(w; q, z)` in the monomial basis.
///
/// Memoized; the cache population is idempotent.
pub fn macdonald_modified(lambda: &Partition) -> Result<Arc<SymFun>> {
    if lambda.size() > MAX_DEGREE {
        return Err(Error::DegreeTooLarge(lambda.size()));
    }
    if let Some(f) = macdonald_cache().lock().expect("cache poisoned").get(lambda) {
        return Ok(f.clone());
    }
    let f = Arc::new(macdonald_with_convention(lambda, Convention::FROZEN)?);
    macdonald_cache()
        .lock()
        .expect("cache poisoned")
        .insert(lambda.clone(), f.clone());
    Ok(f)
}

/// Fillings construction under an explicit convention (used to pin the
/// frozen convention in tests).
pub fn macdonald_with_convention(lambda: &Partition, conv: Convention) -> Result<SymFun> {
    if lambda.size() > MAX_DEGREE {
        return Err(Error::DegreeTooLarge(lambda.size()));
    }
    let shape = if conv.transpose {
        lambda.conjugate()
    } else {
        lambda.clone()
    };
    let n = lambda.size();
    let mut coeffs = BTreeMap::new();
    for mu in enumerate(n) {
        let c = fillings_sum(&shape, &mu);
        coeffs.insert(mu, if conv.swap_qz { c.swap_qz() } else { c });
    }
    SymFun::new(n, coeffs)
}

/// Hall–Littlewood polynomial `H_lambda(w; q) = H~_lambda(w; q, 0)`.
pub fn hall_littlewood(lambda: &Partition) -> Result<SymFun> {
    Ok(macdonald_modified(lambda)?.map(QZPoly::at_z_zero))
}

/// Substitutes `z -> z^-1` in every coefficient; each coefficient becomes a
/// [`ZSeries`] of the given depth.
pub fn specialize_z_inverse(f: &SymFun, depth: u32) -> Result<BTreeMap<Partition, ZSeries>> {
    let mut out = BTreeMap::new();
    for (mu, c) in f.iter() {
        let zdeg = c.z_degree();
        if zdeg > depth {
            return Err(Error::TruncationOverflow { degree: zdeg, depth });
        }
        let mut s = ZSeries::zero(depth);
        for b in 0..=zdeg {
            s.set(-(b as i64), c.z_coefficient(b));
        }
        out.insert(mu.clone(), s);
    }
    Ok(out)
}

/// Sum over fillings of `shape` with content `mu` of `q^inv z^maj`.
fn fillings_sum(shape: &Partition, mu: &Partition) -> QZPoly {
    let rows = shape.parts();
    let n = shape.size() as usize;
    // Cells in reading order: top row first, left to right.
    let mut cells: Vec<(usize, usize)> = vec![];
    for i in (0..rows.len()).rev() {
        for j in 0..rows[i] as usize {
            cells.push((i, j));
        }
    }
    let index: HashMap<(usize, usize), usize> =
        cells.iter().enumerate().map(|(k, c)| (*c, k)).collect();
    let conj = shape.conjugate();
    let arm = |(i, j): (usize, usize)| rows[i] as usize - j - 1;
    let leg = |(i, j): (usize, usize)| conj.part(j) as usize - i - 1;
    // Attacking pairs (u before v in reading order).
    let mut attacking: Vec<(usize, usize)> = vec![];
    for (ku, &(i, j)) in cells.iter().enumerate() {
        for (kv, &(i2, j2)) in cells.iter().enumerate() {
            let same_row = i2 == i && j2 > j;
            let row_below = i >= 1 && i2 == i - 1 && j2 < j;
            if same_row || row_below {
                attacking.push((ku, kv));
            }
        }
    }
    // Descent candidates: cells not in the bottom row, with the cell below.
    let below: Vec<(usize, usize, usize, usize)> = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.0 >= 1)
        .map(|(k, &c)| (k, index[&(c.0 - 1, c.1)], arm(c), leg(c)))
        .collect();

    let mut counts: Vec<u32> = mu.parts().to_vec();
    let mut filling = vec![0usize; n];
    let mut out = QZPoly::zero();
    fn rec(
        pos: usize,
        counts: &mut Vec<u32>,
        filling: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if pos == filling.len() {
            visit(filling);
            return;
        }
        for v in 0..counts.len() {
            if counts[v] > 0 {
                counts[v] -= 1;
                filling[pos] = v;
                rec(pos + 1, counts, filling, visit);
                counts[v] += 1;
            }
        }
    }
    rec(0, &mut counts, &mut filling, &mut |fill: &[usize]| {
        let mut inv: i64 = attacking
            .iter()
            .filter(|(u, v)| fill[*u] > fill[*v])
            .count() as i64;
        let mut maj: i64 = 0;
        for &(u, b, a, l) in &below {
            if fill[u] > fill[b] {
                maj += l as i64 + 1;
                inv -= a as i64;
            }
        }
        assert!(inv >= 0, "negative inversion statistic");
        out.add_term(1, inv as u32, maj as u32);
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    fn poly(terms: &[(i64, u32, u32)]) -> QZPoly {
        let mut out = QZPoly::zero();
        for (c, a, b) in terms {
            out.add_term(*c, *a, *b);
        }
        out
    }

    #[test]
    fn degree_one_and_two() {
        let h1 = macdonald_modified(&p("1")).unwrap();
        assert_eq!(h1.coefficient(&p("1")).unwrap(), QZPoly::one());
        let h2 = macdonald_modified(&p("2")).unwrap();
        assert_eq!(h2.coefficient(&p("2")).unwrap(), QZPoly::one());
        assert_eq!(h2.coefficient(&p("1,1")).unwrap(), poly(&[(1, 0, 0), (1, 1, 0)]));
        let h11 = macdonald_modified(&p("1,1")).unwrap();
        assert_eq!(h11.coefficient(&p("1,1")).unwrap(), poly(&[(1, 0, 0), (1, 0, 1)]));
    }

    #[test]
    fn two_one_full_monomial() {
        // H~_(2,1) = s_3 + (q+z) s_21 + qz s_111, so the m_111 coefficient is
        // 1 + 2q + 2z + qz and the m_21 coefficient is 1 + q + z.
        let h = macdonald_modified(&p("2,1")).unwrap();
        assert_eq!(
            h.coefficient(&p("1,1,1")).unwrap(),
            poly(&[(1, 0, 0), (2, 1, 0), (2, 0, 1), (1, 1, 1)])
        );
        assert_eq!(h.coefficient(&p("2,1")).unwrap(), poly(&[(1, 0, 0), (1, 1, 0), (1, 0, 1)]));
    }

    #[test]
    fn transpose_is_qz_swap() {
        for n in 1..=5 {
            for l in enumerate(n) {
                let a = macdonald_with_convention(&l, Convention { transpose: true, swap_qz: false }).unwrap();
                let b = macdonald_with_convention(&l, Convention { transpose: false, swap_qz: true }).unwrap();
                assert_eq!(a, b, "lambda = {l}");
            }
        }
    }

    #[test]
    fn hall_littlewood_examples() {
        assert_eq!(
            hall_littlewood(&p("2")).unwrap().coefficient(&p("1,1")).unwrap(),
            poly(&[(1, 0, 0), (1, 1, 0)])
        );
        assert_eq!(
            hall_littlewood(&p("1,1")).unwrap().coefficient(&p("1,1")).unwrap(),
            QZPoly::one()
        );
        assert_eq!(hall_littlewood(&p("1")).unwrap().coefficient(&p("1")).unwrap(), QZPoly::one());
    }

    #[test]
    fn coefficient_checks() {
        let h1 = macdonald_modified(&p("1")).unwrap();
        assert!(matches!(h1.coefficient(&p("2")), Err(Error::SizeMismatch { .. })));
        for n in 1..=6 {
            for l in enumerate(n) {
                let h = macdonald_modified(&l).unwrap();
                assert_eq!(h.coefficient(&Partition::new(vec![n])).unwrap(), QZPoly::one());
            }
        }
        assert!(matches!(
            macdonald_modified(&Partition::new(vec![9])),
            Err(Error::DegreeTooLarge(9))
        ));
    }

    #[test]
    fn specialize_examples() {
        let h1 = macdonald_modified(&p("1")).unwrap();
        let s = specialize_z_inverse(&h1, 0).unwrap();
        assert_eq!(s[&p("1")].coeff(0), MotScalar::one());
        let f = SymFun::new(1, [(p("1"), QZPoly::monomial(1, 1, 2))].into_iter().collect()).unwrap();
        let s = specialize_z_inverse(&f, 3).unwrap();
        assert_eq!(s[&p("1")].coeff(-2), MotScalar::q());
        assert!(s[&p("1")].coeff(0).is_zero());
        let h11 = macdonald_modified(&p("1,1")).unwrap();
        assert!(matches!(
            specialize_z_inverse(&h11, 0),
            Err(Error::TruncationOverflow { .. })
        ));
    }

    #[test]
    fn display_polynomial() {
        assert_eq!(poly(&[(1, 0, 0), (2, 1, 0), (2, 0, 1), (1, 1, 1)]).to_string(), "q*z + 2*q + 2*z + 1");
        assert_eq!(QZPoly::zero().to_string(), "0");
        assert_eq!(poly(&[(-3, 2, 0)]).to_string(), "-3*q^2");
    }
}
