//! Real quadratic fields `Q(sqrt d)`: exact arithmetic, prime ideals,
//! factorisation, the inverse different and p-adic embeddings.

use crate::error::{Error, Result};
use crate::padic::{hensel_lift_root, vp, PadicScalar};
use crate::ring::Ring;
use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// `a + b sqrt(d)` with rational `a`, `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadElem {
    pub d: i64,
    pub a: BigRational,
    pub b: BigRational,
}

fn r(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl QuadElem {
    pub fn new(d: i64, a: BigRational, b: BigRational) -> Self {
        QuadElem { d, a, b }
    }

    pub fn from_int(d: i64, n: i64) -> Self {
        QuadElem { d, a: r(n), b: BigRational::zero() }
    }

    pub fn from_rational(d: i64, a: BigRational) -> Self {
        QuadElem { d, a, b: BigRational::zero() }
    }

    /// `(x + y sqrt d) / 2`.
    pub fn from_half(d: i64, x: i64, y: i64) -> Self {
        QuadElem { d, a: BigRational::new(x.into(), 2.into()), b: BigRational::new(y.into(), 2.into()) }
    }

    pub fn sqrt_d(d: i64) -> Self {
        QuadElem { d, a: BigRational::zero(), b: BigRational::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn conj(&self) -> Self {
        QuadElem { d: self.d, a: self.a.clone(), b: -&self.b }
    }

    pub fn trace(&self) -> BigRational {
        &self.a * r(2)
    }

    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - &self.b * &self.b * r(self.d)
    }

    pub fn add(&self, o: &Self) -> Self {
        QuadElem { d: self.d, a: &self.a + &o.a, b: &self.b + &o.b }
    }

    pub fn sub(&self, o: &Self) -> Self {
        QuadElem { d: self.d, a: &self.a - &o.a, b: &self.b - &o.b }
    }

    pub fn neg(&self) -> Self {
        QuadElem { d: self.d, a: -&self.a, b: -&self.b }
    }

    pub fn mul(&self, o: &Self) -> Self {
        debug_assert_eq!(self.d, o.d);
        QuadElem {
            d: self.d,
            a: &self.a * &o.a + &self.b * &o.b * r(self.d),
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        QuadElem { d: self.d, a: &self.a * q, b: &self.b * q }
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.norm();
        Ok(self.conj().scale(&(BigRational::one() / n)))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let mut acc = QuadElem::from_int(self.d, 1);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        Ok(acc)
    }

    /// Both real embeddings positive.
    pub fn is_totally_positive(&self) -> bool {
        self.a.is_positive() && self.norm().is_positive()
    }

    pub fn is_integral(&self) -> bool {
        self.omega_coords().is_some()
    }

    /// Coordinates `(u, v)` with `self = u + v*omega`, if integral.
    pub fn omega_coords(&self) -> Option<(BigInt, BigInt)> {
        if self.d.rem_euclid(4) == 1 {
            // a + b sqrt d = (a - b) + 2b * omega
            let v = &self.b * r(2);
            let u = &self.a - &self.b;
            if v.is_integer() && u.is_integer() {
                return Some((u.to_integer(), v.to_integer()));
            }
            None
        } else if self.a.is_integer() && self.b.is_integer() {
            Some((self.a.to_integer(), self.b.to_integer()))
        } else {
            None
        }
    }

    /// Approximate real value under the embedding `sqrt d > 0`.
    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap() + self.b.to_f64().unwrap() * (self.d as f64).sqrt()
    }

    /// Integer pair `(x, y)` with `self = (x + y sqrt d)/2`, if it exists.
    pub fn half_coords(&self) -> Option<(BigInt, BigInt)> {
        let x = &self.a * r(2);
        let y = &self.b * r(2);
        if x.is_integer() && y.is_integer() {
            Some((x.to_integer(), y.to_integer()))
        } else {
            None
        }
    }
}

impl fmt::Display for QuadElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let sign = if self.b.is_negative() { "-" } else { "+" };
        let bb = self.b.abs();
        let bs = if bb.is_one() { String::new() } else { format!("{bb}*") };
        if self.a.is_zero() {
            let lead = if self.b.is_negative() { "-" } else { "" };
            write!(f, "{lead}{bs}sqrt({})", self.d)
        } else {
            write!(f, "{} {sign} {bs}sqrt({})", self.a, self.d)
        }
    }
}

impl Ring for QuadElem {
    fn zero_like(&self) -> Self {
        QuadElem::from_int(self.d, 0)
    }
    fn one_like(&self) -> Self {
        QuadElem::from_int(self.d, 1)
    }
    fn int_like(&self, n: &BigInt) -> Self {
        QuadElem::from_rational(self.d, BigRational::from_integer(n.clone()))
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
    fn ring_name(&self) -> String {
        format!("Q(sqrt({}))", self.d)
    }
}

impl crate::ring::Field for QuadElem {
    fn inv_r(&self) -> Result<Self> {
        self.inv()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PrimeKind {
    /// `omega = root (mod P)`.
    Split { root: u64 },
    Inert,
    Ramified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PrimeIdeal {
    pub ell: u64,
    pub kind: PrimeKind,
}

impl PrimeIdeal {
    pub fn norm(&self) -> u64 {
        match self.kind {
            PrimeKind::Inert => self.ell * self.ell,
            _ => self.ell,
        }
    }
}

impl fmt::Display for PrimeIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PrimeKind::Split { root } => write!(f, "({}, w - {})", self.ell, root),
            PrimeKind::Inert => write!(f, "({})", self.ell),
            PrimeKind::Ramified => write!(f, "ram({})", self.ell),
        }
    }
}

/// Integral ideal stored by its prime factorisation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct QuadIdeal {
    pub factors: BTreeMap<PrimeIdeal, u32>,
}

impl QuadIdeal {
    pub fn unit() -> Self {
        QuadIdeal::default()
    }

    pub fn prime(p: PrimeIdeal) -> Self {
        let mut factors = BTreeMap::new();
        factors.insert(p, 1);
        QuadIdeal { factors }
    }

    pub fn norm(&self) -> BigInt {
        self.factors.iter().fold(BigInt::one(), |acc, (p, &e)| acc * num_traits::pow(BigInt::from(p.norm()), e as usize))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut factors = self.factors.clone();
        for (p, e) in &o.factors {
            *factors.entry(*p).or_insert(0) += e;
        }
        QuadIdeal { factors }
    }

    pub fn valuation(&self, p: &PrimeIdeal) -> u32 {
        self.factors.get(p).copied().unwrap_or(0)
    }

    pub fn divides(&self, o: &Self) -> bool {
        self.factors.iter().all(|(p, &e)| o.valuation(p) >= e)
    }

    /// `self / o`, if `o` divides `self`.
    pub fn quotient(&self, o: &Self) -> Option<Self> {
        if !o.divides(self) {
            return None;
        }
        let mut factors = self.factors.clone();
        for (p, e) in &o.factors {
            let x = factors.get_mut(p).unwrap();
            *x -= e;
            if *x == 0 {
                factors.remove(p);
            }
        }
        Some(QuadIdeal { factors })
    }
}

impl fmt::Display for QuadIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "(1)");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(p, e)| if *e == 1 { p.to_string() } else { format!("{p}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

fn pow_mod(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut acc = 1u128 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Square root of `a` modulo an odd prime (Tonelli-Shanks).
pub fn sqrt_mod_prime(a: i64, ell: u64) -> Option<u64> {
    let m = ell as u128;
    let a = a.rem_euclid(ell as i64) as u128;
    if a == 0 {
        return Some(0);
    }
    if ell == 2 {
        return Some(a as u64);
    }
    if pow_mod(a, (m - 1) / 2, m) != 1 {
        return None;
    }
    let (mut q, mut s) = (m - 1, 0u32);
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..m).find(|&z| pow_mod(z, (m - 1) / 2, m) == m - 1).unwrap();
    let mut c = pow_mod(z, q, m);
    let mut x = pow_mod(a, (q + 1) / 2, m);
    let mut t = pow_mod(a, q, m);
    let mut mm = s;
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = tt * tt % m;
            i += 1;
        }
        let b = pow_mod(c, 1u128 << (mm - i - 1), m);
        x = x * b % m;
        c = b * b % m;
        t = t * c % m;
        mm = i;
    }
    Some(x as u64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut k = 2;
    while k * k <= n {
        let mut e = 0;
        while n % k == 0 {
            n /= k;
            e += 1;
        }
        if e > 0 {
            out.push((k, e));
        }
        k += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadField {
    pub d: i64,
    /// Largest absolute norm accepted by `factor`.
    pub factor_bound: u64,
}

impl QuadField {
    pub fn new(d: i64) -> Result<Self> {
        if d <= 1 || factor_u64(d as u64).iter().any(|&(_, e)| e > 1) {
            return Err(Error::InvalidInput(format!("{d} is not a squarefree integer > 1")));
        }
        Ok(QuadField { d, factor_bound: 1_000_000_000_000 })
    }

    fn one_mod_four(&self) -> bool {
        self.d.rem_euclid(4) == 1
    }

    pub fn discriminant(&self) -> i64 {
        if self.one_mod_four() {
            self.d
        } else {
            4 * self.d
        }
    }

    pub fn elem(&self, a: BigRational, b: BigRational) -> QuadElem {
        QuadElem::new(self.d, a, b)
    }

    pub fn omega(&self) -> QuadElem {
        if self.one_mod_four() {
            QuadElem::from_half(self.d, 1, 1)
        } else {
            QuadElem::sqrt_d(self.d)
        }
    }

    /// Minimal polynomial of omega as `X^2 - tX - c`, returned as `(t, c)`.
    fn omega_poly(&self) -> (i64, i64) {
        if self.one_mod_four() {
            (1, (self.d - 1) / 4)
        } else {
            (0, self.d)
        }
    }

    /// Generator of the different.
    pub fn different(&self) -> QuadElem {
        if self.one_mod_four() {
            QuadElem::sqrt_d(self.d)
        } else {
            QuadElem::sqrt_d(self.d).scale(&r(2))
        }
    }

    /// Fundamental unit `> 1`, from the continued fraction of omega.
    pub fn fundamental_unit(&self) -> QuadElem {
        let d = self.d as i128;
        let sd = d.sqrt();
        let (t, c) = self.omega_poly();
        let (t, c) = (t as i128, c as i128);
        let (mut pk, mut qk) = if self.one_mod_four() { (1i128, 2i128) } else { (0, 1) };
        let (mut a_prev, mut a_cur) = (1i128, 0i128);
        let (mut b_prev, mut b_cur) = (0i128, 1i128);
        for _ in 0..100_000 {
            let ak = (pk + sd).div_euclid(qk);
            let a_next = ak * a_prev + a_cur;
            let b_next = ak * b_prev + b_cur;
            a_cur = a_prev;
            b_cur = b_prev;
            a_prev = a_next;
            b_prev = b_next;
            // Nm(A - B*omega) for omega^2 = t*omega + c
            let nm = a_prev * a_prev - t * a_prev * b_prev - c * b_prev * b_prev;
            if nm == 1 || nm == -1 {
                // A - B*conj(omega) = A - B*t + B*omega
                let u = QuadElem::from_int(self.d, (a_prev - b_prev * t) as i64);
                return u.add(&self.omega().scale(&r(b_prev as i64)));
            }
            pk = ak * qk - pk;
            qk = (d - pk * pk) / qk;
        }
        unreachable!("continued fraction period not found")
    }

    /// Prime ideals above the rational prime `ell`.
    pub fn primes_above(&self, ell: u64) -> Vec<PrimeIdeal> {
        let disc = self.discriminant();
        if disc.rem_euclid(ell as i64) == 0 {
            return vec![PrimeIdeal { ell, kind: PrimeKind::Ramified }];
        }
        let (t, c) = self.omega_poly();
        let roots: Vec<u64> = if ell == 2 {
            (0..2u64).filter(|&x| ((x * x) as i64 - t * x as i64 - c).rem_euclid(2) == 0).collect()
        } else {
            // X^2 - tX - c: X = (t +- sqrt(t^2 + 4c)) / 2
            match sqrt_mod_prime(t * t + 4 * c, ell) {
                None => vec![],
                Some(s) => {
                    let inv2 = (ell as u128 + 1) / 2;
                    let m = ell as u128;
                    let t = t.rem_euclid(ell as i64) as u128;
                    let s = s as u128;
                    let mut v = vec![((t + s) * inv2 % m) as u64, ((t + m - s) * inv2 % m) as u64];
                    v.sort();
                    v.dedup();
                    v
                }
            }
        };
        if roots.is_empty() {
            vec![PrimeIdeal { ell, kind: PrimeKind::Inert }]
        } else {
            roots.into_iter().map(|root| PrimeIdeal { ell, kind: PrimeKind::Split { root } }).collect()
        }
    }

    pub fn conjugate_prime(&self, p: &PrimeIdeal) -> PrimeIdeal {
        match p.kind {
            PrimeKind::Split { root } => {
                let (t, _) = self.omega_poly();
                let other = (t - root as i64).rem_euclid(p.ell as i64) as u64;
                PrimeIdeal { ell: p.ell, kind: PrimeKind::Split { root: other } }
            }
            _ => *p,
        }
    }

    pub fn conjugate_ideal(&self, a: &QuadIdeal) -> QuadIdeal {
        QuadIdeal { factors: a.factors.iter().map(|(p, e)| (self.conjugate_prime(p), *e)).collect() }
    }

    /// Root of the omega polynomial lifted to `Z/ell^n` for a split prime.
    pub fn lifted_root(&self, p: &PrimeIdeal, n: u32) -> Result<BigInt> {
        let PrimeKind::Split { root } = p.kind else {
            return Err(Error::InvalidInput(format!("{p} is not split")));
        };
        let (t, c) = self.omega_poly();
        hensel_lift_root(&[BigInt::from(-c), BigInt::from(-t), BigInt::one()], &BigInt::from(root), p.ell, n)
    }

    /// `v_P(x)` for nonzero `x` in F; `None` for zero.
    pub fn valuation(&self, x: &QuadElem, p: &PrimeIdeal) -> Option<i64> {
        if x.is_zero() {
            return None;
        }
        // clear denominators with an integer m, whose valuation is known
        let m = x.a.denom().lcm(x.b.denom()) * BigInt::from(2);
        let y = x.scale(&BigRational::from_integer(m.clone()));
        let (u, v) = y.omega_coords().expect("scaled element is integral");
        let e_m = vp_or_zero(p.ell, &m) as i64 * if p.kind == PrimeKind::Ramified { 2 } else { 1 };
        let vy = match p.kind {
            PrimeKind::Inert => vp_or_max(p.ell, &u).min(vp_or_max(p.ell, &v)) as i64,
            PrimeKind::Ramified => vp(p.ell, &y.norm().to_integer().abs()) as i64,
            PrimeKind::Split { .. } => {
                let nm = y.norm().to_integer().abs();
                let k = vp(p.ell, &nm) + 1;
                let rt = self.lifted_root(p, k).unwrap();
                let z = (u + v * rt).mod_floor(&num_traits::pow(BigInt::from(p.ell), k as usize));
                if z.is_zero() { k as i64 } else { vp(p.ell, &z) as i64 }
            }
        };
        Some(vy - e_m)
    }

    /// Factorisation of the principal ideal `(x)` for integral nonzero `x`.
    pub fn factor(&self, x: &QuadElem) -> Result<QuadIdeal> {
        if x.is_zero() || !x.is_integral() {
            return Err(Error::InvalidInput(format!("cannot factor {x}")));
        }
        let nm = x.norm().to_integer().abs();
        let n = nm.to_u64().filter(|&n| n <= self.factor_bound).ok_or_else(|| Error::FactorBoundExceeded {
            norm: nm.to_string(),
            bound: self.factor_bound,
        })?;
        let mut factors = BTreeMap::new();
        for (ell, _) in factor_u64(n) {
            for p in self.primes_above(ell) {
                let v = self.valuation(x, &p).unwrap();
                if v > 0 {
                    factors.insert(p, v as u32);
                }
            }
        }
        Ok(QuadIdeal { factors })
    }

    /// Totally positive elements of the inverse different with trace `n`,
    /// written `n/2 + x sqrt(d)/(2d)` and sorted by `x`.
    pub fn enumerate_trace(&self, n: i64) -> Vec<QuadElem> {
        if n <= 0 {
            return vec![];
        }
        let (d, parity) = (self.d, self.one_mod_four());
        // |x| < n sqrt(d)  <=>  x^2 < n^2 d
        let bound = ((n * n * d) as i128).sqrt() as i64 + 1;
        (-bound..=bound)
            .filter(|&x| (x as i128) * (x as i128) < (n as i128) * (n as i128) * d as i128)
            .filter(|&x| !parity || (x - n).rem_euclid(2) == 0)
            .map(|x| QuadElem::new(self.d, BigRational::new(n.into(), 2.into()), BigRational::new(x.into(), (2 * d).into())))
            .collect()
    }

    /// `true` when `x` is a totally positive element of the inverse different.
    pub fn in_inverse_different_plus(&self, x: &QuadElem) -> bool {
        x.is_totally_positive() && x.mul(&self.different()).is_integral()
    }

    /// The integral ideal `lambda * d`.
    pub fn ideal_of(&self, lambda: &QuadElem) -> Result<QuadIdeal> {
        if !self.in_inverse_different_plus(lambda) {
            return Err(Error::NotInInverseDifferent(lambda.to_string()));
        }
        self.factor(&lambda.mul(&self.different()))
    }

    /// Totally positive generator of minimal trace (largest sqrt(d)-coefficient
    /// on ties), if the ideal is narrowly principal.
    pub fn canonical_generator(&self, a: &QuadIdeal) -> Option<QuadElem> {
        let nm = a.norm().to_i64()?;
        let eps = self.fundamental_unit().to_f64();
        let cap = ((nm as f64).sqrt() * (eps + 1.0 / eps)).ceil() as i64 + 2;
        let d = self.d;
        // x = (s + t sqrt d)/2 with s^2 - d t^2 = 4 Nm(a)
        for s in 1..=2 * cap {
            let rhs = (s as i128) * (s as i128) - 4 * nm as i128;
            if rhs < 0 || rhs % d as i128 != 0 {
                continue;
            }
            let t2 = rhs / d as i128;
            let t = t2.sqrt();
            if t * t != t2 {
                continue;
            }
            for t in [t as i64, -(t as i64)] {
                let x = QuadElem::from_half(d, s, t);
                if !x.is_integral() || !x.is_totally_positive() {
                    continue;
                }
                if let Ok(f) = self.factor(&x) {
                    if &f == a {
                        return Some(x);
                    }
                }
            }
        }
        None
    }

    /// p-adic image of `x` under the embedding attached to the split prime `p`
    /// above the embedding prime, i.e. `omega -> root` lifted.
    pub fn embed(&self, x: &QuadElem, p: &PrimeIdeal, prec: u32) -> Result<PadicScalar> {
        let ell = p.ell;
        let rt = self.lifted_root(p, prec)?;
        let omega = PadicScalar::from_residue(ell, &rt, prec);
        let sqrt_d = if self.one_mod_four() {
            omega.add(&omega).sub(&PadicScalar::from_i64(ell, 1, prec + 8))
        } else {
            omega
        };
        let a = PadicScalar::from_rational(ell, &x.a, prec);
        let b = PadicScalar::from_rational(ell, &x.b, prec);
        Ok(a.add(&b.mul(&sqrt_d)))
    }
}

fn vp_or_zero(p: u64, x: &BigInt) -> u32 {
    if x.is_zero() { 0 } else { vp(p, x) }
}

fn vp_or_max(p: u64, x: &BigInt) -> u32 {
    if x.is_zero() { u32::MAX } else { vp(p, x) }
}
