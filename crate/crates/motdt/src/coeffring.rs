//! Exact arithmetic in the localized ring `Q[q, q^-1, (q^i - 1)^-1 : i >= 1]`.
//!
//! Every genus-0 motivic class handled by the engine is a rational function
//! in the Lefschetz variable `q` whose denominator is a product of a power of
//! `q` and factors `q^i - 1`.  [`MotScalar`] stores such a function as
//!
//! ```text
//!     num(q) / (den * q^a * prod_n Phi_n(q)^(f_n))
//! ```
//!
//! where `num` is an integer polynomial, `den` a positive integer and `Phi_n`
//! the n-th cyclotomic polynomial.  The cyclotomic factorization is the
//! internal canonical form: it makes the fraction fully reduced (the
//! numerator is coprime to `q` and to every `Phi_n` that appears in the
//! denominator), so two scalars are equal iff their internal fields agree.
//! The user-facing form groups the cyclotomic factors into `(q^i - 1)^e`
//! products; see [`MotScalar::to_text`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Builds a rational from a machine integer.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Builds the rational `n / d`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"`, `"p"` or a JSON integer into a rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("invalid rational '{s}'")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in '{s}'")));
            }
            Ok(Rational::new(parse_int(n)?, d))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

/// Formats a rational as `p` or `p/q`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

// ---------------------------------------------------------------------------
// Cyclotomic polynomials and integer polynomial helpers
// ---------------------------------------------------------------------------

fn cyclotomic_cache() -> &'static Mutex<HashMap<u32, Arc<Vec<i64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<i64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Divisors of `n` in increasing order.
pub(crate) fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

/// Coefficients (lowest degree first) of the n-th cyclotomic polynomial.
pub fn cyclotomic(n: u32) -> Arc<Vec<i64>> {
    assert!(n >= 1, "cyclotomic index must be positive");
    if let Some(p) = cyclotomic_cache().lock().expect("cache poisoned").get(&n) {
        return p.clone();
    }
    // q^n - 1 divided by Phi_d for every proper divisor d of n.
    let mut poly = vec![0i64; n as usize + 1];
    poly[0] = -1;
    poly[n as usize] = 1;
    for d in divisors(n) {
        if d == n {
            continue;
        }
        let phi = cyclotomic(d);
        poly = div_monic_i64(&poly, &phi).expect("cyclotomic division is exact");
    }
    let arc = Arc::new(poly);
    cyclotomic_cache()
        .lock()
        .expect("cache poisoned")
        .insert(n, arc.clone());
    arc
}

fn div_monic_i64(num: &[i64], d: &[i64]) -> Option<Vec<i64>> {
    let dn = d.len() - 1;
    if num.len() < d.len() {
        return if num.iter().all(|c| *c == 0) {
            Some(vec![])
        } else {
            None
        };
    }
    let mut rem = num.to_vec();
    let mut quo = vec![0i64; num.len() - dn];
    for i in (0..quo.len()).rev() {
        let c = rem[i + dn];
        quo[i] = c;
        if c != 0 {
            for (j, dj) in d.iter().enumerate() {
                rem[i + j] -= c * dj;
            }
        }
    }
    if rem[..dn].iter().all(|c| *c == 0) {
        Some(quo)
    } else {
        None
    }
}

/// Expresses `Phi_n(q^k)` as a product of cyclotomic polynomials in `q`.
fn cyclotomic_adams(n: u32, k: u32) -> Vec<u32> {
    if k == 1 {
        return vec![n];
    }
    let p = (2..=k).find(|p| k.is_multiple_of(*p)).expect("k >= 2 has a prime factor");
    // Phi_n(y^p) = Phi_{np}(y) if p | n, else Phi_{np}(y) Phi_n(y); then y = q^(k/p).
    let inner: Vec<u32> = if n.is_multiple_of(p) {
        vec![n * p]
    } else {
        vec![n * p, n]
    };
    inner
        .into_iter()
        .flat_map(|m| cyclotomic_adams(m, k / p))
        .collect()
}

const MOD_P: u64 = (1u64 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % MOD_P as u128) as u64
}

fn big_mod_p(x: &BigInt) -> u64 {
    let m = BigInt::from(MOD_P);
    let r = x.mod_floor(&m);
    r.to_u64().expect("residue fits in u64")
}

fn i64_mod_p(x: i64) -> u64 {
    x.rem_euclid(MOD_P as i64) as u64
}

/// Cheap necessary test for divisibility by a monic polynomial: reduce
/// modulo a large prime first.  A non-zero remainder proves non-divisibility.
fn maybe_divisible(num: &[BigInt], d: &[i64]) -> bool {
    let dn = d.len() - 1;
    if num.len() < d.len() {
        return num.iter().all(|c| c.is_zero());
    }
    let mut rem: Vec<u64> = num.iter().map(big_mod_p).collect();
    let dm: Vec<u64> = d.iter().map(|c| i64_mod_p(*c)).collect();
    for i in (0..=(num.len() - d.len())).rev() {
        let c = rem[i + dn];
        if c != 0 {
            for (j, dj) in dm.iter().enumerate() {
                let sub = mulmod(c, *dj);
                rem[i + j] = (rem[i + j] + MOD_P - sub) % MOD_P;
            }
        }
    }
    rem[..dn].iter().all(|c| *c == 0)
}

fn div_monic_big(num: &[BigInt], d: &[i64]) -> Option<Vec<BigInt>> {
    if !maybe_divisible(num, d) {
        return None;
    }
    let dn = d.len() - 1;
    let mut rem = num.to_vec();
    let mut quo = vec![BigInt::zero(); num.len() - dn];
    for i in (0..quo.len()).rev() {
        let c = std::mem::take(&mut rem[i + dn]);
        if !c.is_zero() {
            for (j, dj) in d.iter().enumerate().take(dn) {
                if *dj != 0 {
                    rem[i + j] -= &c * *dj;
                }
            }
        }
        quo[i] = c;
    }
    if rem[..dn].iter().all(|c| c.is_zero()) {
        Some(quo)
    } else {
        None
    }
}

fn trim(v: &mut Vec<BigInt>) {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn poly_mul_small(a: &[BigInt], b: &[i64]) -> Vec<BigInt> {
    if a.is_empty() {
        return vec![];
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if *y != 0 {
                out[i + j] += x * *y;
            }
        }
    }
    out
}

fn merge_phi(a: &[(u32, u32)], b: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut m: BTreeMap<u32, u32> = a.iter().copied().collect();
    for (n, f) in b {
        *m.entry(*n).or_insert(0) += f;
    }
    m.into_iter().filter(|(_, f)| *f > 0).collect()
}

// ---------------------------------------------------------------------------
// MotScalar
// ---------------------------------------------------------------------------

/// An element of `Q[q, q^-1, (q^i - 1)^-1]` in canonical reduced form.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MotScalar {
    /// Integer numerator, lowest power first; `num[0] != 0` unless zero.
    num: Vec<BigInt>,
    /// Positive integer denominator, coprime to the content of `num`.
    den: BigInt,
    /// Power of `q` in the denominator (may be negative).
    q_shift: i64,
    /// Cyclotomic multiplicities `(n, f_n)` of the denominator, sorted.
    phi: Vec<(u32, u32)>,
}

impl Default for MotScalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl MotScalar {
    /// The zero element.
    pub fn zero() -> Self {
        MotScalar {
            num: vec![],
            den: BigInt::one(),
            q_shift: 0,
            phi: vec![],
        }
    }

    /// The unit element.
    pub fn one() -> Self {
        Self::from_integer(1)
    }

    /// The constant `n`.
    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(&rat(n))
    }

    /// The constant rational `r`.
    pub fn from_rational(r: &Rational) -> Self {
        let mut s = MotScalar {
            num: vec![r.numer().clone()],
            den: r.denom().clone(),
            q_shift: 0,
            phi: vec![],
        };
        s.normalize();
        s
    }

    /// The Lefschetz variable `q`.
    pub fn q() -> Self {
        Self::q_pow(1)
    }

    /// The Laurent monomial `q^k`.
    pub fn q_pow(k: i64) -> Self {
        MotScalar {
            num: vec![BigInt::one()],
            den: BigInt::one(),
            q_shift: -k,
            phi: vec![],
        }
    }

    /// The element `1 / (q^i - 1)`.
    pub fn inv_q_power_minus_one(i: u32) -> Self {
        assert!(i >= 1);
        let mut cyclo = BTreeMap::new();
        cyclo.insert(i, 1);
        Self::from_parts(&[rat(1)], 0, &cyclo)
    }

    /// The polynomial `q^i - 1`.
    pub fn q_power_minus_one(i: u32) -> Self {
        let mut c = vec![rat(0); i as usize + 1];
        c[0] = rat(-1);
        c[i as usize] = rat(1);
        Self::from_poly(&c)
    }

    /// The polynomial with rational coefficients `coeffs` (lowest power first).
    pub fn from_poly(coeffs: &[Rational]) -> Self {
        Self::from_parts(coeffs, 0, &BTreeMap::new())
    }

    /// Builds `sum_k coeffs[k] q^k / (q^q_shift * prod_i (q^i - 1)^cyclo[i])`.
    pub fn from_parts(coeffs: &[Rational], q_shift: i64, cyclo: &BTreeMap<u32, u32>) -> Self {
        let den = coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let num: Vec<BigInt> = coeffs
            .iter()
            .map(|c| c.numer() * (&den / c.denom()))
            .collect();
        let mut phi: BTreeMap<u32, u32> = BTreeMap::new();
        for (&i, &e) in cyclo {
            assert!(i >= 1, "cyclotomic index must be positive");
            for d in divisors(i) {
                *phi.entry(d).or_insert(0) += e;
            }
        }
        let mut s = MotScalar {
            num,
            den,
            q_shift,
            phi: phi.into_iter().filter(|(_, f)| *f > 0).collect(),
        };
        s.normalize();
        s
    }

    /// Restores the canonical form.
    fn normalize(&mut self) {
        trim(&mut self.num);
        if self.num.is_empty() {
            *self = Self::zero();
            return;
        }
        let lead_zeros = self.num.iter().take_while(|c| c.is_zero()).count();
        if lead_zeros > 0 {
            self.num.drain(..lead_zeros);
            self.q_shift -= lead_zeros as i64;
        }
        let mut phi = std::mem::take(&mut self.phi);
        for (n, f) in phi.iter_mut() {
            if self.num.len() <= 1 {
                break;
            }
            let p = cyclotomic(*n);
            while *f > 0 {
                match div_monic_big(&self.num, &p) {
                    Some(q) => {
                        self.num = q;
                        *f -= 1;
                    }
                    None => break,
                }
            }
        }
        self.phi = phi.into_iter().filter(|(_, f)| *f > 0).collect();
        let mut g = self.den.clone();
        for c in &self.num {
            if g.is_one() {
                break;
            }
            g = g.gcd(c);
        }
        if !g.is_one() {
            for c in self.num.iter_mut() {
                *c /= &g;
            }
            self.den /= &g;
        }
        if self.den.is_negative() {
            self.den = -std::mem::take(&mut self.den);
            for c in self.num.iter_mut() {
                *c = -std::mem::take(c);
            }
        }
    }

    /// True iff this is the zero element.
    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    /// True iff this is the unit element.
    pub fn is_one(&self) -> bool {
        *self == Self::one()
    }

    /// True iff the element is a rational constant (possibly zero).
    pub fn as_rational(&self) -> Option<Rational> {
        if self.is_zero() {
            return Some(rat(0));
        }
        if self.num.len() == 1 && self.q_shift == 0 && self.phi.is_empty() {
            Some(Rational::new(self.num[0].clone(), self.den.clone()))
        } else {
            None
        }
    }

    /// Lazy product: no cross-cancellation, used inside accumulations.
    fn mul_raw(&self, other: &MotScalar) -> MotScalar {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        MotScalar {
            num: poly_mul(&self.num, &other.num),
            den: &self.den * &other.den,
            q_shift: self.q_shift + other.q_shift,
            phi: merge_phi(&self.phi, &other.phi),
        }
    }

    /// Lazy sum: brings both operands to a common denominator without
    /// reducing the result.
    fn add_raw(&self, other: &MotScalar) -> MotScalar {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let lift = |s: &MotScalar, target_shift: i64, target_phi: &BTreeMap<u32, u32>| {
            let mut num = s.num.clone();
            let own: BTreeMap<u32, u32> = s.phi.iter().copied().collect();
            for (n, f) in target_phi {
                let missing = f - own.get(n).copied().unwrap_or(0);
                if missing > 0 {
                    let p = cyclotomic(*n);
                    for _ in 0..missing {
                        num = poly_mul_small(&num, &p);
                    }
                }
            }
            let extra_q = (target_shift - s.q_shift) as usize;
            if extra_q > 0 {
                let mut shifted = vec![BigInt::zero(); extra_q];
                shifted.extend(num);
                num = shifted;
            }
            num
        };
        let mut target: BTreeMap<u32, u32> = self.phi.iter().copied().collect();
        for (n, f) in &other.phi {
            let e = target.entry(*n).or_insert(0);
            *e = (*e).max(*f);
        }
        let shift = self.q_shift.max(other.q_shift);
        let a = lift(self, shift, &target);
        let b = lift(other, shift, &target);
        let den = self.den.lcm(&other.den);
        let fa = &den / &self.den;
        let fb = &den / &other.den;
        let len = a.len().max(b.len());
        let mut num = vec![BigInt::zero(); len];
        for (i, c) in a.iter().enumerate() {
            num[i] += c * &fa;
        }
        for (i, c) in b.iter().enumerate() {
            num[i] += c * &fb;
        }
        MotScalar {
            num,
            den,
            q_shift: shift,
            phi: target.into_iter().filter(|(_, f)| *f > 0).collect(),
        }
    }

    /// Exact sum.
    pub fn add(&self, other: &MotScalar) -> MotScalar {
        let mut s = self.add_raw(other);
        s.normalize();
        s
    }

    /// Exact difference.
    pub fn sub(&self, other: &MotScalar) -> MotScalar {
        self.add(&other.neg())
    }

    /// Additive inverse.
    pub fn neg(&self) -> MotScalar {
        let mut s = self.clone();
        for c in s.num.iter_mut() {
            *c = -std::mem::take(c);
        }
        s
    }

    /// Exact product.
    pub fn mul(&self, other: &MotScalar) -> MotScalar {
        let mut s = self.mul_raw(other);
        s.normalize();
        s
    }

    /// Multiplies by the rational constant `r`.
    pub fn scale(&self, r: &Rational) -> MotScalar {
        if r.is_zero() || self.is_zero() {
            return Self::zero();
        }
        let mut s = self.clone();
        for c in s.num.iter_mut() {
            *c *= r.numer();
        }
        s.den *= r.denom();
        s.normalize();
        s
    }

    /// Multiplies by `q^k`.
    pub fn mul_q_pow(&self, k: i64) -> MotScalar {
        if self.is_zero() {
            return Self::zero();
        }
        let mut s = self.clone();
        s.q_shift -= k;
        s
    }

    /// Sum of an iterator of scalars, reducing only once at the end.
    pub fn sum<'a, I: IntoIterator<Item = &'a MotScalar>>(items: I) -> MotScalar {
        let mut acc = Accumulator::new();
        for x in items {
            acc.add(x);
        }
        acc.finish()
    }

    /// Multiplicative inverse; fails unless the numerator is a rational
    /// multiple of a product of `q` and cyclotomic polynomials.
    pub fn invert(&self) -> Result<MotScalar> {
        if self.is_zero() {
            return Err(Error::NotAUnit("0".into()));
        }
        let mut rest = self.num.clone();
        let mut factors: BTreeMap<u32, u32> = BTreeMap::new();
        let mut n = 1u32;
        // Euler phi(n) >= sqrt(n/2), so indices beyond 2*deg^2 cannot divide.
        let bound = 2 * (rest.len() as u32).pow(2) + 2;
        while rest.len() > 1 && n <= bound {
            let p = cyclotomic(n);
            if p.len() <= rest.len() {
                while let Some(q) = div_monic_big(&rest, &p) {
                    rest = q;
                    *factors.entry(n).or_insert(0) += 1;
                    if rest.len() < p.len() {
                        break;
                    }
                }
            }
            n += 1;
        }
        if rest.len() != 1 {
            return Err(Error::NotAUnit(self.to_string()));
        }
        // self = rest0 * prod Phi^factors / (den q^a prod Phi^phi)
        let c = Rational::new(self.den.clone(), rest[0].clone());
        let mut out = MotScalar {
            num: vec![c.numer().clone()],
            den: c.denom().clone(),
            q_shift: -self.q_shift,
            phi: factors.into_iter().collect(),
        };
        let mut up = vec![BigInt::one()];
        for (n, f) in &self.phi {
            let p = cyclotomic(*n);
            for _ in 0..*f {
                up = poly_mul_small(&up, &p);
            }
        }
        out.num = poly_mul(&out.num, &up);
        out.normalize();
        Ok(out)
    }

    /// True iff [`MotScalar::invert`] succeeds.
    pub fn is_unit(&self) -> bool {
        self.invert().is_ok()
    }

    /// Exact quotient `self / other`; `other` must be a unit.
    pub fn div(&self, other: &MotScalar) -> Result<MotScalar> {
        Ok(self.mul(&other.invert()?))
    }

    /// Integer power (negative exponents require a unit).
    pub fn pow(&self, e: i64) -> Result<MotScalar> {
        let base = if e < 0 { self.invert()? } else { self.clone() };
        let mut out = MotScalar::one();
        for _ in 0..e.unsigned_abs() {
            out = out.mul(&base);
        }
        Ok(out)
    }

    /// Adams operation: substitutes `q -> q^n`.
    pub fn adams(&self, n: u32) -> MotScalar {
        assert!(n >= 1, "Adams operation index must be positive");
        if n == 1 || self.is_zero() {
            return self.clone();
        }
        let step = n as usize;
        let mut num = vec![BigInt::zero(); (self.num.len() - 1) * step + 1];
        for (i, c) in self.num.iter().enumerate() {
            num[i * step] = c.clone();
        }
        let mut phi: BTreeMap<u32, u32> = BTreeMap::new();
        for (m, f) in &self.phi {
            for k in cyclotomic_adams(*m, n) {
                *phi.entry(k).or_insert(0) += f;
            }
        }
        let mut s = MotScalar {
            num,
            den: self.den.clone(),
            q_shift: self.q_shift * n as i64,
            phi: phi.into_iter().collect(),
        };
        s.normalize();
        s
    }

    /// Exact value at the rational point `q0`.
    pub fn evaluate(&self, q0: &Rational) -> Result<Rational> {
        if self.is_zero() {
            return Ok(rat(0));
        }
        let pole = || Error::PoleAtEvaluationPoint(format_rational(q0));
        if q0.is_zero() && self.q_shift > 0 {
            return Err(pole());
        }
        let horner = |coeffs: &mut dyn DoubleEndedIterator<Item = Rational>| {
            coeffs.rev().fold(rat(0), |acc, c| acc * q0 + c)
        };
        let mut denom = Rational::from_integer(self.den.clone());
        for (n, f) in &self.phi {
            let p = cyclotomic(*n);
            let v = horner(&mut p.iter().map(|c| rat(*c)));
            if v.is_zero() {
                return Err(pole());
            }
            for _ in 0..*f {
                denom *= &v;
            }
        }
        let numv = horner(&mut self.num.iter().map(|c| Rational::from_integer(c.clone())));
        let mut val = numv / denom;
        if self.q_shift != 0 {
            let qp = q0.pow(self.q_shift.unsigned_abs() as i32);
            if self.q_shift > 0 {
                val /= qp;
            } else {
                val *= qp;
            }
        }
        Ok(val)
    }

    /// Canonical user-facing decomposition `(numerator terms, a, {i: e_i})`
    /// of `sum c_k q^k / (q^a * prod (q^i - 1)^e_i)`: numerator terms are
    /// `(coefficient, power)` in increasing power.
    ///
    /// The `(q^i - 1)` factors are chosen greedily from the largest
    /// cyclotomic index downwards; cyclotomic factors that get covered
    /// more than once are compensated in the numerator.
    pub fn canonical_parts(&self) -> (Vec<(Rational, u32)>, i64, BTreeMap<u32, u32>) {
        if self.is_zero() {
            return (vec![], 0, BTreeMap::new());
        }
        let mut f: BTreeMap<u32, u32> = self.phi.iter().copied().collect();
        let mut e: BTreeMap<u32, u32> = BTreeMap::new();
        let mut extra: BTreeMap<u32, u32> = BTreeMap::new();
        while let Some((&n, &k)) = f.iter().rev().find(|(_, k)| **k > 0) {
            *e.entry(n).or_insert(0) += k;
            for d in divisors(n) {
                let have = f.get(&d).copied().unwrap_or(0);
                if have >= k {
                    f.insert(d, have - k);
                } else {
                    f.insert(d, 0);
                    *extra.entry(d).or_insert(0) += k - have;
                }
            }
        }
        let mut num = self.num.clone();
        for (d, k) in &extra {
            let p = cyclotomic(*d);
            for _ in 0..*k {
                num = poly_mul_small(&num, &p);
            }
        }
        let terms = num
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (Rational::new(c.clone(), self.den.clone()), i as u32))
            .collect();
        (terms, self.q_shift, e)
    }

    /// Canonical text form `num = <poly>; den = q^<a> * (q^i-1)^<e> * ...`.
    pub fn to_text(&self) -> String {
        let (terms, a, e) = self.canonical_parts();
        let mut den = format!("q^{a}");
        for (i, k) in &e {
            den.push_str(&format!(" * (q^{i}-1)^{k}"));
        }
        format!("num = {}; den = {}", format_poly_terms(&terms), den)
    }

    /// Parses the canonical text form produced by [`MotScalar::to_text`].
    pub fn from_text(s: &str) -> Result<MotScalar> {
        let bad = |m: &str| Error::Parse(format!("{m} in MotScalar text '{s}'"));
        let (num_part, den_part) = s.split_once(';').ok_or_else(|| bad("missing ';'"))?;
        let num_str = num_part
            .trim()
            .strip_prefix("num")
            .and_then(|t| t.trim_start().strip_prefix('='))
            .ok_or_else(|| bad("missing 'num ='"))?;
        let den_str = den_part
            .trim()
            .strip_prefix("den")
            .and_then(|t| t.trim_start().strip_prefix('='))
            .ok_or_else(|| bad("missing 'den ='"))?;
        let coeffs = parse_poly_q(num_str)?;
        let mut q_shift = 0i64;
        let mut cyclo: BTreeMap<u32, u32> = BTreeMap::new();
        for factor in den_str.split('*') {
            let f = factor.trim();
            if f.is_empty() {
                return Err(bad("empty denominator factor"));
            }
            if let Some(body) = f.strip_prefix('(') {
                let (inner, rest) = body.split_once(')').ok_or_else(|| bad("unclosed '('"))?;
                let inner = inner.replace(' ', "");
                let i_str = inner
                    .strip_prefix("q^")
                    .and_then(|t| t.strip_suffix("-1"))
                    .or_else(|| (inner == "q-1").then_some("1"))
                    .ok_or_else(|| bad("expected (q^i-1)"))?;
                let i: u32 = i_str.parse().map_err(|_| bad("bad cyclotomic index"))?;
                if i == 0 {
                    return Err(bad("index 0"));
                }
                let rest = rest.trim();
                let e: u32 = if rest.is_empty() {
                    1
                } else {
                    rest.strip_prefix('^')
                        .ok_or_else(|| bad("expected '^'"))?
                        .trim()
                        .parse()
                        .map_err(|_| bad("bad exponent"))?
                };
                *cyclo.entry(i).or_insert(0) += e;
            } else if f == "q" {
                q_shift += 1;
            } else if let Some(a) = f.strip_prefix("q^") {
                q_shift += a.trim().parse::<i64>().map_err(|_| bad("bad q exponent"))?;
            } else if f == "1" {
            } else {
                return Err(bad("unrecognized denominator factor"));
            }
        }
        Ok(Self::from_parts(&coeffs, q_shift, &cyclo))
    }

    /// JSON form `{"num": [[cn, cd, power], ...], "q_shift": a, "cyclo": {"i": e}}`.
    ///
    /// Integers that fit in 64 bits are emitted as JSON numbers, larger ones
    /// as decimal strings.
    pub fn to_json(&self) -> Value {
        let (terms, a, e) = self.canonical_parts();
        let num: Vec<Value> = terms
            .iter()
            .map(|(c, k)| json!([big_to_json(c.numer()), big_to_json(c.denom()), k]))
            .collect();
        let cyclo: serde_json::Map<String, Value> =
            e.iter().map(|(i, k)| (i.to_string(), json!(k))).collect();
        json!({"num": num, "q_shift": a, "cyclo": cyclo})
    }

    /// Parses the JSON form of [`MotScalar::to_json`].
    pub fn from_json(v: &Value) -> Result<MotScalar> {
        let bad = |m: &str| Error::Schema(format!("MotScalar JSON: {m}"));
        let obj = v.as_object().ok_or_else(|| bad("expected object"))?;
        let terms = obj
            .get("num")
            .and_then(|x| x.as_array())
            .ok_or_else(|| bad("missing 'num' array"))?;
        let mut coeffs: Vec<Rational> = vec![];
        for t in terms {
            let arr = t.as_array().filter(|a| a.len() == 3).ok_or_else(|| bad("term must be [cn, cd, power]"))?;
            let cn = json_to_big(&arr[0]).ok_or_else(|| bad("bad coefficient numerator"))?;
            let cd = json_to_big(&arr[1]).ok_or_else(|| bad("bad coefficient denominator"))?;
            if cd.is_zero() {
                return Err(bad("zero denominator"));
            }
            let k = arr[2].as_u64().ok_or_else(|| bad("bad power"))? as usize;
            if coeffs.len() <= k {
                coeffs.resize(k + 1, rat(0));
            }
            coeffs[k] += Rational::new(cn, cd);
        }
        let q_shift = obj
            .get("q_shift")
            .and_then(|x| x.as_i64())
            .ok_or_else(|| bad("missing integer 'q_shift'"))?;
        let mut cyclo = BTreeMap::new();
        if let Some(c) = obj.get("cyclo") {
            let c = c.as_object().ok_or_else(|| bad("'cyclo' must be an object"))?;
            for (i, e) in c {
                let i: u32 = i.parse().map_err(|_| bad("bad cyclotomic index"))?;
                let e = e.as_u64().ok_or_else(|| bad("bad cyclotomic exponent"))? as u32;
                if i == 0 {
                    return Err(bad("cyclotomic index 0"));
                }
                cyclo.insert(i, e);
            }
        }
        Ok(Self::from_parts(&coeffs, q_shift, &cyclo))
    }
}

fn big_to_json(b: &BigInt) -> Value {
    match b.to_i64() {
        Some(i) => json!(i),
        None => json!(b.to_string()),
    }
}

fn json_to_big(v: &Value) -> Option<BigInt> {
    if let Some(i) = v.as_i64() {
        return Some(BigInt::from(i));
    }
    v.as_str().and_then(|s| s.parse().ok())
}

/// Formats `sum c_k q^k` with terms in decreasing power.
fn format_poly_terms(terms: &[(Rational, u32)]) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (idx, (c, k)) in terms.iter().rev().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if idx == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mono = match k {
            0 => String::new(),
            1 => "q".into(),
            _ => format!("q^{k}"),
        };
        if mono.is_empty() {
            out.push_str(&format_rational(&a));
        } else if a.is_one() {
            out.push_str(&mono);
        } else {
            out.push_str(&format!("{}*{}", format_rational(&a), mono));
        }
    }
    out
}

/// Parses a polynomial in `q` with rational coefficients, e.g. `2*q^2 - 1/3*q + 1`.
fn parse_poly_q(s: &str) -> Result<Vec<Rational>> {
    let bad = || Error::Parse(format!("invalid polynomial '{}'", s.trim()));
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(bad());
    }
    let mut terms: Vec<String> = vec![];
    let mut cur = String::new();
    for (i, ch) in compact.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 && !cur.ends_with('^') {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);
    let mut coeffs: Vec<Rational> = vec![];
    for t in terms {
        let (sign, body) = match t.strip_prefix('-') {
            Some(b) => (-1, b.to_string()),
            None => (1, t.strip_prefix('+').unwrap_or(&t).to_string()),
        };
        if body.is_empty() {
            return Err(bad());
        }
        let (c, power) = if let Some(pos) = body.find('q') {
            let cpart = &body[..pos];
            let mpart = &body[pos..];
            let c = if cpart.is_empty() {
                rat(1)
            } else {
                parse_rational(cpart.strip_suffix('*').ok_or_else(bad)?)?
            };
            let power: usize = if mpart == "q" {
                1
            } else {
                mpart
                    .strip_prefix("q^")
                    .ok_or_else(bad)?
                    .parse()
                    .map_err(|_| bad())?
            };
            (c, power)
        } else {
            (parse_rational(&body)?, 0)
        };
        if coeffs.len() <= power {
            coeffs.resize(power + 1, rat(0));
        }
        coeffs[power] += c * rat(sign);
    }
    Ok(coeffs)
}

/// Pretty form, e.g. `1/(q-1)` or `(q+1)/(q^2*(q^3-1)^2)`.
impl fmt::Display for MotScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (mut terms, a, e) = self.canonical_parts();
        if terms.is_empty() {
            return write!(f, "0");
        }
        if a < 0 {
            for t in terms.iter_mut() {
                t.1 += (-a) as u32;
            }
        }
        let l = terms.iter().fold(BigInt::one(), |acc, (c, _)| acc.lcm(c.denom()));
        for t in terms.iter_mut() {
            t.0 = &t.0 * Rational::from_integer(l.clone());
        }
        let num = format_poly_terms(&terms).replace(' ', "");
        let mut den: Vec<String> = vec![];
        if !l.is_one() {
            den.push(l.to_string());
        }
        if a > 0 {
            den.push(if a == 1 { "q".into() } else { format!("q^{a}") });
        }
        for (i, k) in &e {
            let base = if *i == 1 { "(q-1)".to_string() } else { format!("(q^{i}-1)") };
            den.push(if *k == 1 { base } else { format!("{base}^{k}") });
        }
        let num = if terms.len() > 1 && !den.is_empty() {
            format!("({num})")
        } else {
            num
        };
        if den.is_empty() {
            write!(f, "{num}")
        } else if den.len() == 1 {
            write!(f, "{num}/{}", den[0])
        } else {
            write!(f, "{num}/({})", den.join("*"))
        }
    }
}

impl std::ops::Add for &MotScalar {
    type Output = MotScalar;
    fn add(self, rhs: &MotScalar) -> MotScalar {
        MotScalar::add(self, rhs)
    }
}

impl std::ops::Sub for &MotScalar {
    type Output = MotScalar;
    fn sub(self, rhs: &MotScalar) -> MotScalar {
        MotScalar::sub(self, rhs)
    }
}

impl std::ops::Mul for &MotScalar {
    type Output = MotScalar;
    fn mul(self, rhs: &MotScalar) -> MotScalar {
        MotScalar::mul(self, rhs)
    }
}

impl std::ops::Neg for &MotScalar {
    type Output = MotScalar;
    fn neg(self) -> MotScalar {
        MotScalar::neg(self)
    }
}

/// Accumulates a sum of scalars and products without intermediate
/// reduction; [`Accumulator::finish`] restores the canonical form.
#[derive(Clone, Debug, Default)]
pub struct Accumulator {
    acc: Option<MotScalar>,
}

impl Accumulator {
    /// Empty (zero) accumulator.
    pub fn new() -> Self {
        Accumulator { acc: None }
    }

    /// Adds `x`.
    pub fn add(&mut self, x: &MotScalar) {
        if x.is_zero() {
            return;
        }
        self.acc = Some(match self.acc.take() {
            None => x.clone(),
            Some(a) => a.add_raw(x),
        });
    }

    /// Adds the product `x * y`.
    pub fn add_product(&mut self, x: &MotScalar, y: &MotScalar) {
        if x.is_zero() || y.is_zero() {
            return;
        }
        let p = x.mul_raw(y);
        self.acc = Some(match self.acc.take() {
            None => p,
            Some(a) => a.add_raw(&p),
        });
    }

    /// Canonical value of the accumulated sum.
    pub fn finish(self) -> MotScalar {
        match self.acc {
            None => MotScalar::zero(),
            Some(mut a) => {
                a.normalize();
                a
            }
        }
    }
}
