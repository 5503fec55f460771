//! p-adic scalars with explicit precision tracking.
//!
//! A nonzero scalar is `p^val * unit` with the unit known modulo `p^prec`.
//! A zero is either exact or known only modulo `p^abs`. Every operation
//! propagates precision so that no digit is ever reported that is not
//! determined by the inputs.

use crate::error::{Error, Result};
use crate::ring::Ring;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

const EXACT: i64 = i64::MAX;

pub fn ppow(p: u64, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), e as usize)
}

/// p-adic valuation of a nonzero integer.
pub fn vp(p: u64, x: &BigInt) -> u32 {
    debug_assert!(!x.is_zero());
    let pb = BigInt::from(p);
    let mut x = x.clone();
    let mut v = 0;
    loop {
        let (q, r) = x.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        x = q;
        v += 1;
    }
}

pub fn vp_rational(p: u64, x: &BigRational) -> Option<i64> {
    if x.is_zero() {
        None
    } else {
        Some(vp(p, x.numer()) as i64 - vp(p, x.denom()) as i64)
    }
}

/// Inverse of a unit modulo `m`.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

#[derive(Clone, Debug)]
pub struct PadicScalar {
    p: u64,
    val: i64,
    unit: BigInt,
    prec: u32,
}

impl PadicScalar {
    pub fn zero(p: u64) -> Self {
        PadicScalar { p, val: EXACT, unit: BigInt::zero(), prec: 0 }
    }

    /// Zero known modulo `p^abs`.
    pub fn zero_mod(p: u64, abs: i64) -> Self {
        PadicScalar { p, val: abs, unit: BigInt::zero(), prec: 0 }
    }

    /// `x * p^val` known modulo `p^abs`.
    fn normalize(p: u64, val: i64, x: BigInt, abs: i64) -> Self {
        if abs <= val {
            return Self::zero_mod(p, abs);
        }
        let width = (abs - val) as u32;
        let m = ppow(p, width);
        let x = x.mod_floor(&m);
        if x.is_zero() {
            return Self::zero_mod(p, abs);
        }
        let v = vp(p, &x);
        let prec = width - v;
        let unit = (x / ppow(p, v)).mod_floor(&ppow(p, prec));
        PadicScalar { p, val: val + v as i64, unit, prec }
    }

    /// Integer with relative precision `prec`; zero is exact.
    pub fn from_bigint(p: u64, n: &BigInt, prec: u32) -> Self {
        if n.is_zero() {
            return Self::zero(p);
        }
        let v = vp(p, n);
        let unit = (n / ppow(p, v)).mod_floor(&ppow(p, prec));
        PadicScalar { p, val: v as i64, unit, prec }
    }

    pub fn from_i64(p: u64, n: i64, prec: u32) -> Self {
        Self::from_bigint(p, &BigInt::from(n), prec)
    }

    /// Rational with relative precision `prec`; zero is exact.
    pub fn from_rational(p: u64, x: &BigRational, prec: u32) -> Self {
        if x.is_zero() {
            return Self::zero(p);
        }
        let a = vp(p, x.numer());
        let b = vp(p, x.denom());
        let m = ppow(p, prec);
        let num = x.numer() / ppow(p, a);
        let den = x.denom() / ppow(p, b);
        let inv = mod_inverse(&den, &m).expect("denominator is a unit");
        PadicScalar { p, val: a as i64 - b as i64, unit: (num * inv).mod_floor(&m), prec }
    }

    /// Rational known modulo `p^abs`.
    pub fn from_rational_abs(p: u64, x: &BigRational, abs: i64) -> Self {
        match vp_rational(p, x) {
            None => Self::zero_mod(p, abs),
            Some(v) if v >= abs => Self::zero_mod(p, abs),
            Some(v) => Self::from_rational(p, x, (abs - v) as u32),
        }
    }

    /// Residue class `r mod p^n`, read as an integer known to absolute precision `n`.
    pub fn from_residue(p: u64, r: &BigInt, n: u32) -> Self {
        Self::normalize(p, 0, r.clone(), n as i64)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn is_exact_zero(&self) -> bool {
        self.prec == 0 && self.val == EXACT
    }

    /// True when no known digit is nonzero.
    pub fn is_zero(&self) -> bool {
        self.prec == 0
    }

    /// `None` for zero (exact or to precision).
    pub fn valuation(&self) -> Option<i64> {
        if self.prec == 0 {
            None
        } else {
            Some(self.val)
        }
    }

    /// `None` for an exact zero.
    pub fn abs_prec(&self) -> Option<i64> {
        if self.is_exact_zero() {
            None
        } else {
            Some(self.val + self.prec as i64)
        }
    }

    pub fn rel_prec(&self) -> u32 {
        self.prec
    }

    pub fn unit(&self) -> &BigInt {
        &self.unit
    }

    /// A relative precision comfortably above this scalar's, for auxiliary constants.
    pub fn spare_prec(&self) -> u32 {
        self.abs_prec().map(|a| a.max(0) as u32).unwrap_or(0) + 64
    }

    fn abs_or_max(&self) -> i64 {
        self.abs_prec().unwrap_or(EXACT)
    }

    fn check(&self, o: &Self) {
        assert_eq!(self.p, o.p, "p-adic scalars over different primes");
    }

    /// Drop digits beyond absolute precision `abs`.
    pub fn truncate_abs(&self, abs: i64) -> Self {
        if self.abs_or_max() <= abs {
            return self.clone();
        }
        if self.is_zero() {
            return Self::zero_mod(self.p, abs);
        }
        Self::normalize(self.p, self.val, self.unit.clone(), abs)
    }

    /// Drop digits beyond relative precision `prec`.
    pub fn truncate_rel(&self, prec: u32) -> Self {
        if self.is_zero() || self.prec <= prec {
            return self.clone();
        }
        self.truncate_abs(self.val + prec as i64)
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check(o);
        if self.is_exact_zero() {
            return o.clone();
        }
        if o.is_exact_zero() {
            return self.clone();
        }
        let abs = self.abs_or_max().min(o.abs_or_max());
        let v = self.val.min(o.val);
        if abs <= v {
            return Self::zero_mod(self.p, abs);
        }
        let term = |s: &Self| -> BigInt {
            if s.is_zero() || s.val >= abs {
                BigInt::zero()
            } else {
                &s.unit * ppow(s.p, (s.val - v) as u32)
            }
        };
        Self::normalize(self.p, v, term(self) + term(o), abs)
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let m = ppow(self.p, self.prec);
        PadicScalar { p: self.p, val: self.val, unit: (-&self.unit).mod_floor(&m), prec: self.prec }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.check(o);
        if self.is_exact_zero() || o.is_exact_zero() {
            return Self::zero(self.p);
        }
        match (self.is_zero(), o.is_zero()) {
            (true, true) => Self::zero_mod(self.p, self.val + o.val),
            (true, false) => Self::zero_mod(self.p, self.val + o.val),
            (false, true) => Self::zero_mod(self.p, self.val + o.val),
            (false, false) => {
                let prec = self.prec.min(o.prec);
                let m = ppow(self.p, prec);
                PadicScalar { p: self.p, val: self.val + o.val, unit: (&self.unit * &o.unit).mod_floor(&m), prec }
            }
        }
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let m = ppow(self.p, self.prec);
        let unit = mod_inverse(&self.unit, &m).ok_or(Error::DivisionByZero)?;
        Ok(PadicScalar { p: self.p, val: -self.val, unit, prec: self.prec })
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        self.check(o);
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let mut base = self.clone();
        let mut acc = self.one_like();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        Ok(acc)
    }

    /// Multiply by `p^k` exactly.
    pub fn shift(&self, k: i64) -> Self {
        if self.is_exact_zero() {
            return self.clone();
        }
        let mut out = self.clone();
        out.val += k;
        out
    }

    /// The integer representative of `self mod p^n`; requires integrality and
    /// enough absolute precision.
    pub fn residue(&self, n: u32) -> Result<BigInt> {
        if self.is_exact_zero() {
            return Ok(BigInt::zero());
        }
        let abs = self.abs_or_max();
        if abs < n as i64 {
            return Err(Error::InsufficientPrecision { needed: n as i64, have: abs });
        }
        if self.is_zero() || self.val >= n as i64 {
            return Ok(BigInt::zero());
        }
        if self.val < 0 {
            return Err(Error::NotIntegral);
        }
        Ok((&self.unit * ppow(self.p, self.val as u32)).mod_floor(&ppow(self.p, n)))
    }

    /// Rational representative `p^val * unit` (zero for zeros).
    pub fn to_rational(&self) -> BigRational {
        if self.is_zero() {
            return BigRational::zero();
        }
        let u = BigRational::from_integer(self.unit.clone());
        if self.val >= 0 {
            u * BigRational::from_integer(ppow(self.p, self.val as u32))
        } else {
            u / BigRational::from_integer(ppow(self.p, (-self.val) as u32))
        }
    }

    /// Base-p digits `(exponent, digit)` from the valuation up to the absolute precision.
    pub fn digits(&self) -> Vec<(i64, u64)> {
        let mut out = Vec::new();
        if self.is_zero() {
            return out;
        }
        let pb = BigInt::from(self.p);
        let mut u = self.unit.clone();
        for i in 0..self.prec {
            let (q, r) = u.div_rem(&pb);
            out.push((self.val + i as i64, r.to_u64().unwrap()));
            u = q;
        }
        out
    }

    /// Plain-text rendering, e.g. `3^-2 + 3^-1 + 2 + 3^1 + 2*3^2 + O(3^7)`.
    pub fn render(&self) -> String {
        self.render_with(|p, e| format!("{p}^{e}"), "*")
    }

    /// LaTeX rendering, e.g. `3^{-2} + 3^{-1} + 2 + 3^1 + 2\cdot3^2 + O(3^7)`.
    pub fn render_latex(&self) -> String {
        self.render_with(
            |p, e| if (0..10).contains(&e) { format!("{p}^{e}") } else { format!("{p}^{{{e}}}") },
            "\\cdot",
        )
    }

    fn render_with(&self, pw: impl Fn(u64, i64) -> String, times: &str) -> String {
        if self.is_exact_zero() {
            return "0".into();
        }
        let mut terms: Vec<String> = self
            .digits()
            .into_iter()
            .filter(|&(_, d)| d != 0)
            .map(|(e, d)| match (e, d) {
                (0, d) => d.to_string(),
                (e, 1) => pw(self.p, e),
                (e, d) => format!("{d}{times}{}", pw(self.p, e)),
            })
            .collect();
        terms.push(format!("O({})", pw(self.p, self.abs_or_max())));
        terms.join(" + ")
    }

    /// Square root with the unit part congruent to `branch` mod p when given.
    pub fn sqrt(&self, branch: Option<u64>) -> Result<Self> {
        hensel_sqrt(self, branch)
    }

    /// p-adic logarithm of a 1-unit.
    pub fn log(&self) -> Result<Self> {
        padic_log(self)
    }

    pub fn to_json(&self) -> PadicJson {
        PadicJson {
            p: self.p,
            valuation: self.valuation(),
            abs_prec: self.abs_prec(),
            digits: self.digits().into_iter().map(|(_, d)| d).collect(),
            text: self.render(),
        }
    }
}

/// Serialised form used in reports.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PadicJson {
    pub p: u64,
    pub valuation: Option<i64>,
    pub abs_prec: Option<i64>,
    pub digits: Vec<u64>,
    pub text: String,
}

/// Two scalars are equal when their difference has no known nonzero digit.
impl PartialEq for PadicScalar {
    fn eq(&self, o: &Self) -> bool {
        self.p == o.p && self.sub(o).is_zero()
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Ring for PadicScalar {
    fn zero_like(&self) -> Self {
        Self::zero(self.p)
    }
    fn one_like(&self) -> Self {
        Self::from_i64(self.p, 1, self.spare_prec())
    }
    fn int_like(&self, n: &BigInt) -> Self {
        Self::from_bigint(self.p, n, self.spare_prec())
    }
    fn is_zero_elt(&self) -> bool {
        self.is_zero()
    }
    fn add_r(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn sub_r(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn mul_r(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn neg_r(&self) -> Self {
        self.neg()
    }
    fn is_exact_zero_elt(&self) -> bool {
        self.is_exact_zero()
    }
    fn ring_name(&self) -> String {
        format!("Q_{}", self.p)
    }
}

impl crate::ring::Field for PadicScalar {
    fn inv_r(&self) -> Result<Self> {
        self.inv()
    }
}

/// Square roots of `u` modulo p by search (p is small throughout).
fn sqrt_mod_p(u: &BigInt, p: u64) -> Option<u64> {
    let r = u.mod_floor(&BigInt::from(p)).to_u64().unwrap();
    (0..p).find(|&x| (x as u128 * x as u128 % p as u128) as u64 == r)
}

pub fn hensel_sqrt(a: &PadicScalar, branch: Option<u64>) -> Result<PadicScalar> {
    let p = a.p;
    if p == 2 {
        return Err(Error::Unsupported("square roots for p = 2".into()));
    }
    if a.is_exact_zero() {
        return Ok(a.clone());
    }
    if a.is_zero() {
        return Ok(PadicScalar::zero_mod(p, a.val.div_euclid(2)));
    }
    if a.val % 2 != 0 {
        return Err(Error::NotASquare);
    }
    let mut r = sqrt_mod_p(&a.unit, p).ok_or(Error::NotASquare)?;
    if r == 0 {
        return Err(Error::NotASquare);
    }
    if let Some(b) = branch {
        let b = b % p;
        if b == p - r {
            r = p - r;
        } else if b != r {
            return Err(Error::InvalidInput(format!("{b} is not a square root branch mod {p}")));
        }
    }
    let m = ppow(p, a.prec);
    let mut x = BigInt::from(r);
    let mut k = 1u32;
    while k < a.prec {
        k = (2 * k).min(a.prec);
        let mk = ppow(p, k);
        let fx = (&x * &x - &a.unit).mod_floor(&mk);
        let inv = mod_inverse(&(BigInt::from(2) * &x), &mk).unwrap();
        x = (&x - fx * inv).mod_floor(&mk);
    }
    Ok(PadicScalar { p, val: a.val / 2, unit: x.mod_floor(&m), prec: a.prec })
}

/// Lift a simple root mod p of an integer polynomial (low-to-high coefficients) to mod p^n.
pub fn hensel_lift_root(coeffs: &[BigInt], root: &BigInt, p: u64, n: u32) -> Result<BigInt> {
    let eval = |x: &BigInt, cs: &[BigInt]| cs.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c);
    let deriv: Vec<BigInt> = coeffs.iter().enumerate().skip(1).map(|(i, c)| c * BigInt::from(i)).collect();
    let pm = BigInt::from(p);
    if !eval(root, coeffs).mod_floor(&pm).is_zero() {
        return Err(Error::InvalidInput("not a root mod p".into()));
    }
    if eval(root, &deriv).mod_floor(&pm).is_zero() {
        return Err(Error::InvalidInput("root is not simple mod p".into()));
    }
    let mut x = root.mod_floor(&pm);
    let mut k = 1u32;
    while k < n {
        k = (2 * k).min(n);
        let mk = ppow(p, k);
        let inv = mod_inverse(&eval(&x, &deriv), &mk).unwrap();
        x = (&x - eval(&x, coeffs) * inv).mod_floor(&mk);
    }
    Ok(x.mod_floor(&ppow(p, n)))
}

pub fn newton_converge(
    mut y: PadicScalar,
    f: impl Fn(&PadicScalar) -> PadicScalar,
    df: impl Fn(&PadicScalar) -> PadicScalar,
) -> Result<PadicScalar> {
    for _ in 0..200 {
        let step = f(&y).div(&df(&y))?;
        let next = y.sub(&step);
        if next.sub(&y).is_zero() && next.abs_prec() == y.abs_prec() {
            return Ok(next);
        }
        y = next;
    }
    Err(Error::SeriesDivergence)
}

/// Roots of `X^2 - trace*X + norm`, ordered by increasing valuation.
pub fn quad_roots(trace: &PadicScalar, norm: &PadicScalar) -> Result<(PadicScalar, PadicScalar)> {
    if norm.is_zero() {
        return Err(Error::InvalidInput("quadratic with vanishing constant term".into()));
    }
    let vn = norm.val;
    let unequal = match trace.valuation() {
        Some(vt) => 2 * vt < vn,
        None => false,
    };
    if unequal {
        let vt = trace.val;
        let t1 = trace.shift(-vt);
        let n1 = norm.shift(-2 * vt);
        // Seed with one digit but carry the inputs' precision so Newton can climb.
        let target = t1.abs_or_max().min(n1.abs_or_max());
        let y0 = PadicScalar::from_rational_abs(t1.p, &t1.truncate_rel(1).to_rational(), target);
        let y = newton_converge(
            y0,
            |y| y.mul(y).sub(&t1.mul(y)).add(&n1),
            |y| y.add(y).sub(&t1),
        )?;
        let alpha = y.shift(vt);
        let beta = norm.div(&alpha)?;
        return Ok((alpha, beta));
    }
    let four = trace.int_like(&BigInt::from(4));
    let two = trace.int_like(&BigInt::from(2));
    let disc = trace.mul(trace).sub(&four.mul(norm));
    if disc.is_zero() {
        let half = trace.div(&two)?;
        let abs = disc.abs_prec().map(|a| a.div_euclid(2)).unwrap_or(i64::MAX);
        let r = half.truncate_abs(abs);
        return Ok((r.clone(), r));
    }
    let s = hensel_sqrt(&disc, None).map_err(|e| match e {
        Error::NotASquare => Error::IrrationalRoots,
        e => e,
    })?;
    let r1 = trace.add(&s).div(&two)?;
    let r2 = trace.sub(&s).div(&two)?;
    let key = |r: &PadicScalar| r.valuation().unwrap_or(i64::MAX);
    if key(&r2) < key(&r1) {
        Ok((r2, r1))
    } else {
        Ok((r1, r2))
    }
}

/// Teichmüller representative of `a mod p` to `prec` digits.
pub fn teichmuller(a: u64, p: u64, prec: u32) -> PadicScalar {
    if a % p == 0 {
        return PadicScalar::zero(p);
    }
    let m = ppow(p, prec);
    let mut x = BigInt::from(a % p);
    for _ in 0..prec {
        x = x.modpow(&BigInt::from(p), &m);
    }
    PadicScalar::from_residue(p, &x, prec)
}

/// Logarithm of a 1-unit via the Mercator series.
pub fn padic_log(x: &PadicScalar) -> Result<PadicScalar> {
    let p = x.p;
    let one = PadicScalar::from_i64(p, 1, x.abs_prec().unwrap_or(64).max(1) as u32);
    let z = x.sub(&one);
    if z.is_exact_zero() {
        return Ok(PadicScalar::zero(p));
    }
    let target = z.abs_prec().unwrap();
    let vz = match z.valuation() {
        Some(v) => v,
        None => return Ok(PadicScalar::zero_mod(p, target)),
    };
    if vz < 1 || (p == 2 && vz < 2) {
        return Err(Error::InvalidInput("logarithm series needs a 1-unit".into()));
    }
    let mut sum = PadicScalar::zero(p);
    let mut zk = z.clone();
    let mut k: i64 = 1;
    loop {
        let lower = k * vz - (k as f64).log(p as f64).floor() as i64;
        if lower >= target && k > 1 {
            break;
        }
        let kk = PadicScalar::from_i64(p, k, (target + 8).max(8) as u32);
        let term = zk.div(&kk)?;
        sum = if k % 2 == 1 { sum.add(&term) } else { sum.sub(&term) };
        zk = zk.mul(&z);
        k += 1;
    }
    Ok(sum.truncate_abs(target))
}

/// Iwasawa logarithm: `log_p(p) = 0`, units via `u^(p-1)`.
pub fn padic_log_iwasawa(x: &PadicScalar) -> Result<PadicScalar> {
    if x.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let p = x.p;
    let u = x.shift(-x.val);
    let w = u.pow(p as i64 - 1)?;
    let l = padic_log(&w)?;
    l.div(&PadicScalar::from_i64(p, p as i64 - 1, 64))
}

/// Polynomial with p-adic coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct PadicPoly {
    pub coeffs: Vec<PadicScalar>,
}

impl PadicPoly {
    pub fn new(coeffs: Vec<PadicScalar>) -> Self {
        PadicPoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &PadicScalar) -> PadicScalar {
        let mut acc = x.zero_like();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    pub fn mul(&self, o: &Self) -> Self {
        let p = self.coeffs[0].p;
        let mut out = vec![PadicScalar::zero(p); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        PadicPoly { coeffs: out }
    }

    /// `prod (1 - r X)`.
    pub fn from_reciprocal_roots(roots: &[PadicScalar]) -> Self {
        let p = roots[0].p;
        let mut poly = PadicPoly { coeffs: vec![PadicScalar::from_i64(p, 1, 64)] };
        for r in roots {
            poly = poly.mul(&PadicPoly { coeffs: vec![PadicScalar::from_i64(p, 1, 64), r.neg()] });
        }
        poly
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: i64, prec: u32) -> PadicScalar {
        PadicScalar::from_i64(3, n, prec)
    }

    #[test]
    fn basic_arithmetic_and_precision() {
        let a = s(5, 10);
        let b = s(4, 10);
        assert_eq!(a.add(&b), s(9, 10));
        assert_eq!(a.add(&b).valuation(), Some(2));
        assert_eq!(a.add(&b).abs_prec(), Some(10));
        let z = a.sub(&a);
        assert!(z.is_zero());
        assert_eq!(z.abs_prec(), Some(10));
        assert_eq!(z, PadicScalar::zero(3));
        let q = s(1, 10).div(&s(9, 10)).unwrap();
        assert_eq!(q.valuation(), Some(-2));
        assert!(s(1, 5).div(&PadicScalar::zero_mod(3, 4)).is_err());
    }

    #[test]
    fn render_matches_headline_style() {
        // 3^-2 + 3^-1 + 2 + 3 + 2*3^2 + 3^5 + 2*3^6 as a rational
        let digits = [(-2, 1), (-1, 1), (0, 2), (1, 1), (2, 2), (5, 1), (6, 2)];
        let mut x = BigRational::zero();
        for (e, d) in digits {
            x += BigRational::from_integer(BigInt::from(d)) * BigRational::new(3.into(), 1.into()).pow(e);
        }
        let v = PadicScalar::from_rational_abs(3, &x, 7);
        assert_eq!(v.render(), "3^-2 + 3^-1 + 2 + 3^1 + 2*3^2 + 3^5 + 2*3^6 + O(3^7)");
        assert_eq!(v.render_latex(), "3^{-2} + 3^{-1} + 2 + 3^1 + 2\\cdot3^2 + 3^5 + 2\\cdot3^6 + O(3^7)");
    }

    #[test]
    fn sqrt_of_13_branch() {
        let r = hensel_sqrt(&s(13, 20), Some(1)).unwrap();
        assert_eq!(r.residue(3).unwrap(), BigInt::from(16));
        assert_eq!(r.mul(&r), s(13, 20));
        let r2 = hensel_sqrt(&s(13, 20), Some(2)).unwrap();
        assert_eq!(r.add(&r2), PadicScalar::zero(3));
        assert_eq!(hensel_sqrt(&s(2, 10), None), Err(Error::NotASquare));
    }

    #[test]
    fn quadratic_roots_unequal_slopes() {
        // X^2 - 28X + 27 = (X-1)(X-27)
        let (a, b) = quad_roots(&s(28, 20), &s(27, 20)).unwrap();
        assert_eq!(a, s(1, 20));
        assert_eq!(b, s(27, 20));
        assert!(a.abs_prec().unwrap() >= 19 && b.abs_prec().unwrap() >= 19);
        let (a, b) = quad_roots(&s(2, 20), &s(1, 20)).unwrap();
        assert_eq!(a, s(1, 10));
        assert_eq!(b, s(1, 10));
        assert_eq!(quad_roots(&s(1, 20), &s(1, 20)), Err(Error::IrrationalRoots));
    }

    #[test]
    fn teichmuller_is_root_of_unity() {
        let w = teichmuller(2, 3, 30);
        assert_eq!(w.mul(&w), s(1, 30));
        assert_eq!(w.residue(1).unwrap(), BigInt::from(2));
    }

    #[test]
    fn log_is_additive() {
        let a = s(4, 30);
        let b = s(7, 30);
        let lhs = padic_log(&a.mul(&b)).unwrap();
        let rhs = padic_log(&a).unwrap().add(&padic_log(&b).unwrap());
        assert_eq!(lhs, rhs);
        assert!(padic_log(&a).unwrap().abs_prec().unwrap() >= 29);
    }
}
