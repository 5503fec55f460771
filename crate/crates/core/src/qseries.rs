//! Truncated q-expansions with tracked trust ranges, the operators
//! `theta`, `U_p`, `V_p`, and the classical series used by the overconvergent
//! computation.

use crate::error::{Error, Result};
use crate::lvalues::{bernoulli, dirichlet_l_nonpos, DirichletChar};
use crate::ring::{Field, Ring};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use std::fmt::Display;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SeriesMeta {
    pub weight: Option<i64>,
    pub level: u64,
    pub character: Option<String>,
}

/// `sum a_n q^n`, with every coefficient for `n <= trusted` known and every
/// coefficient below `start` structurally zero.
#[derive(Clone, Debug)]
pub struct QExpansion<C: Ring> {
    coeffs: Vec<C>,
    start: usize,
    pub meta: SeriesMeta,
}

#[derive(Serialize)]
pub struct SeriesDump {
    pub ring: String,
    pub start: usize,
    pub trusted_t: usize,
    pub coeffs: Vec<String>,
}

impl<C: Ring> QExpansion<C> {
    /// Coefficients `a_0..=a_T`; trusted to `T = coeffs.len() - 1`.
    pub fn new(coeffs: Vec<C>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least a_0");
        let start = coeffs.iter().position(|c| !c.is_exact_zero_elt()).unwrap_or(coeffs.len());
        QExpansion { coeffs, start, meta: SeriesMeta { level: 1, ..Default::default() } }
    }

    pub fn from_fn(t: usize, f: impl Fn(usize) -> C) -> Self {
        Self::new((0..=t).map(f).collect())
    }

    pub fn with_meta(mut self, meta: SeriesMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn trusted(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Lower bound for the order at infinity.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn is_cuspidal(&self) -> bool {
        self.start >= 1
    }

    pub fn coeff(&self, n: usize) -> Option<&C> {
        self.coeffs.get(n)
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    fn zero(&self) -> C {
        self.coeffs[0].zero_like()
    }

    pub fn truncate(&self, t: usize) -> Self {
        let mut out = self.clone();
        out.coeffs.truncate(t + 1);
        out.start = out.start.min(t + 1);
        out
    }

    pub fn map<D: Ring>(&self, f: impl Fn(&C) -> D) -> QExpansion<D> {
        let mut out = QExpansion::new(self.coeffs.iter().map(f).collect());
        out.start = out.start.max(self.start);
        out.meta = self.meta.clone();
        out
    }

    fn zip(&self, o: &Self, f: impl Fn(&C, &C) -> C) -> Self {
        let t = self.trusted().min(o.trusted());
        let mut out = Self::new((0..=t).map(|n| f(&self.coeffs[n], &o.coeffs[n])).collect());
        out.start = out.start.max(self.start.min(o.start)).min(t + 1);
        out.meta = self.meta.clone();
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.add_r(b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.sub_r(b))
    }

    pub fn neg(&self) -> Self {
        self.map(|a| a.neg_r())
    }

    pub fn scale(&self, c: &C) -> Self {
        self.map(|a| a.mul_r(c))
    }

    /// Product trusted to `min(T_f + v_g, T_g + v_f)`.
    pub fn mul(&self, o: &Self) -> Self {
        let t = (self.trusted() + o.start).min(o.trusted() + self.start);
        let z = self.zero();
        let mut out = vec![z; t + 1];
        for i in self.start..=t.min(self.trusted()) {
            let a = &self.coeffs[i];
            if a.is_exact_zero_elt() {
                continue;
            }
            for j in o.start..=(t - i).min(o.trusted()) {
                let b = &o.coeffs[j];
                if !b.is_exact_zero_elt() {
                    out[i + j] = out[i + j].add_r(&a.mul_r(b));
                }
            }
        }
        let mut r = Self::new(out);
        r.start = r.start.max(self.start + o.start).min(t + 1);
        r
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::new(vec![self.coeffs[0].one_like()]);
        acc.coeffs.resize(self.trusted() + 1, self.zero());
        acc.start = 0;
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// `q d/dq`.
    pub fn theta(&self) -> Self {
        let mut out = self.clone();
        for (n, c) in out.coeffs.iter_mut().enumerate() {
            *c = c.scale_int(n as i64);
        }
        out.start = out.start.max(1).min(out.coeffs.len());
        if let Some(w) = out.meta.weight {
            out.meta.weight = Some(w + 2);
        }
        out
    }

    pub fn theta_pow(&self, k: u32) -> Self {
        (0..k).fold(self.clone(), |f, _| f.theta())
    }

    /// `a_n -> a_{pn}`; trusted range divides by p.
    pub fn u_op(&self, p: usize) -> Self {
        let t = self.trusted() / p;
        let mut out = Self::new((0..=t).map(|n| self.coeffs[p * n].clone()).collect());
        out.start = out.start.max(self.start.div_ceil(p)).min(t + 1);
        out.meta = self.meta.clone();
        out
    }

    /// `q -> q^p`.
    pub fn v_op(&self, p: usize) -> Self {
        let t = p * (self.trusted() + 1) - 1;
        let z = self.zero();
        let mut out = Self::new((0..=t).map(|n| if n % p == 0 { self.coeffs[n / p].clone() } else { z.clone() }).collect());
        out.start = out.start.max(p * self.start).min(t + 1);
        out.meta = self.meta.clone();
        out
    }

    /// `(1 - V U)`: kill the coefficients at multiples of p.
    pub fn deplete(&self, p: usize) -> Self {
        let mut out = self.clone();
        let z = self.zero();
        for (n, c) in out.coeffs.iter_mut().enumerate() {
            if n % p == 0 {
                *c = z.clone();
            }
        }
        out.start = out.start.max(1).min(out.coeffs.len());
        out
    }

    pub fn dump(&self) -> SeriesDump
    where
        C: Display,
    {
        SeriesDump {
            ring: self.coeffs[0].ring_name(),
            start: self.start,
            trusted_t: self.trusted(),
            coeffs: self.coeffs.iter().map(|c| c.to_string()).collect(),
        }
    }
}

impl<C: Field> QExpansion<C> {
    /// Multiplicative inverse; needs an invertible constant term.
    pub fn inverse(&self) -> Result<Self> {
        if self.start > 0 {
            return Err(Error::DivisionByZero);
        }
        let t = self.trusted();
        let inv0 = self.coeffs[0].inv_r()?;
        let mut out: Vec<C> = Vec::with_capacity(t + 1);
        out.push(inv0.clone());
        for n in 1..=t {
            let mut s = self.zero();
            for k in 1..=n {
                let a = &self.coeffs[k];
                if !a.is_exact_zero_elt() {
                    s = s.add_r(&a.mul_r(&out[n - k]));
                }
            }
            out.push(s.mul_r(&inv0).neg_r());
        }
        Ok(Self::new(out))
    }
}

impl<C: Ring + PartialEq> PartialEq for QExpansion<C> {
    /// Equality on the common trusted range.
    fn eq(&self, o: &Self) -> bool {
        let t = self.trusted().min(o.trusted());
        (0..=t).all(|n| self.coeffs[n] == o.coeffs[n])
    }
}

pub fn rq(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d * d != n {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

/// `q^{sum m e / 24} prod_n prod_(m,e) (1 - q^{mn})^e` with integer coefficients.
pub fn eta_product(factors: &[(u64, i64)], t: usize) -> Result<QExpansion<BigRational>> {
    let shift: i64 = factors.iter().map(|&(m, e)| m as i64 * e).sum();
    if shift % 24 != 0 || shift < 0 {
        return Err(Error::InvalidInput("eta quotient must have a non-negative integral q-order".into()));
    }
    let shift = (shift / 24) as usize;
    let mut c = vec![BigInt::zero(); t + 1];
    if shift > t {
        return Ok(QExpansion::new(c.into_iter().map(BigRational::from_integer).collect()));
    }
    let width = t - shift;
    let mut body = vec![BigInt::zero(); width + 1];
    body[0] = BigInt::one();
    for &(m, e) in factors {
        let mut k = m as usize;
        while k <= width {
            for _ in 0..e.unsigned_abs() {
                if e > 0 {
                    // multiply by (1 - q^k)
                    for n in (k..=width).rev() {
                        let x = body[n - k].clone();
                        body[n] -= x;
                    }
                } else {
                    // divide by (1 - q^k)
                    for n in k..=width {
                        let x = body[n - k].clone();
                        body[n] += x;
                    }
                }
            }
            k += m as usize;
        }
    }
    for (n, b) in body.into_iter().enumerate() {
        c[n + shift] = b;
    }
    Ok(QExpansion::new(c.into_iter().map(BigRational::from_integer).collect()))
}

/// `g = (Delta(3z)/Delta(z))^{1/2} = q prod ((1-q^{3n})/(1-q^n))^{12}`.
pub fn kolberg_g(t: usize) -> QExpansion<BigRational> {
    let mut g = eta_product(&[(3, 12), (1, -12)], t).expect("integral q-order");
    g.meta = SeriesMeta { weight: Some(0), level: 3, character: None };
    g
}

fn sigma_with(n: u64, k: u32, keep: impl Fn(u64) -> bool) -> BigInt {
    divisors(n).into_iter().filter(|&d| keep(d)).map(|d| num_traits::pow(BigInt::from(d), k as usize)).sum()
}

fn check_level1_weight(w: u32) -> Result<()> {
    if w < 4 || w % 2 == 1 {
        return Err(Error::InvalidWeight(format!("level 1 Eisenstein series need even weight >= 4, got {w}")));
    }
    Ok(())
}

/// `E_w = 1 - (2w/B_w) sum sigma_{w-1}(n) q^n`.
pub fn eisenstein_level1(w: u32, t: usize) -> Result<QExpansion<BigRational>> {
    check_level1_weight(w)?;
    let c = -rq(2 * w) / bernoulli(w as usize);
    let e = QExpansion::from_fn(t, |n| if n == 0 { rq(1) } else { &c * rq(sigma_with(n as u64, w - 1, |_| true)) });
    Ok(e.with_meta(SeriesMeta { weight: Some(w as i64), level: 1, character: None }))
}

/// The p-ordinary Eisenstein series from its p-free divisor sums.
pub fn eisenstein_ord(w: u32, p: u64, t: usize) -> Result<QExpansion<BigRational>> {
    check_level1_weight(w)?;
    let pw = rq(num_traits::pow(BigInt::from(p), w as usize - 1));
    let c = -rq(2 * w) / bernoulli(w as usize) / (rq(1) - pw);
    let e = QExpansion::from_fn(t, |n| {
        if n == 0 {
            rq(1)
        } else {
            &c * rq(sigma_with(n as u64, w - 1, |d| d % p != 0))
        }
    });
    Ok(e.with_meta(SeriesMeta { weight: Some(w as i64), level: p, character: None }))
}

/// `(E_w - p^{w-1} V_p E_w) / (1 - p^{w-1})`, the defining route.
pub fn eisenstein_ord_via_v(w: u32, p: u64, t: usize) -> Result<QExpansion<BigRational>> {
    let e = eisenstein_level1(w, t)?;
    let pw = rq(num_traits::pow(BigInt::from(p), w as usize - 1));
    let ve = e.v_op(p as usize).truncate(t);
    let num = e.sub(&ve.scale(&pw));
    Ok(num.scale(&(rq(1) - pw).recip()).with_meta(e.meta.clone()))
}

/// `E_chi = L(chi,-1-k)/2 + sum_n sum_{d|n} chi(d) d^{k+1} q^n` of weight k+2.
pub fn eisenstein_chi(k: u32, chi: &DirichletChar, t: usize) -> Result<QExpansion<BigRational>> {
    let sign = if k % 2 == 0 { 1 } else { -1 };
    if chi.parity() != sign {
        return Err(Error::ParityMismatch);
    }
    if k == 0 && chi.is_trivial() {
        return Err(Error::TrivialWeightZero);
    }
    let c0 = dirichlet_l_nonpos(chi, k as usize + 2)? / rq(2);
    let e = QExpansion::from_fn(t, |n| {
        if n == 0 {
            c0.clone()
        } else {
            divisors(n as u64)
                .into_iter()
                .map(|d| rq(chi.eval(d as i64)) * rq(num_traits::pow(BigInt::from(d), k as usize + 1)))
                .sum()
        }
    });
    Ok(e.with_meta(SeriesMeta { weight: Some(k as i64 + 2), level: chi.modulus(), character: Some(format!("{chi:?}")) }))
}

/// `E_chi(z) - E_chi(pz)`: the critical-slope p-stabilisation.
pub fn eisenstein_crit(k: u32, chi: &DirichletChar, p: u64, t: usize) -> Result<QExpansion<BigRational>> {
    let e = eisenstein_chi(k, chi, t)?;
    let out = e.sub(&e.v_op(p as usize).truncate(t));
    let mut meta = e.meta.clone();
    meta.level = chi.modulus() * p;
    Ok(out.with_meta(meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(f: &QExpansion<BigRational>, upto: usize) -> Vec<i64> {
        (0..=upto).map(|n| f.coeff(n).unwrap().to_integer().try_into().unwrap()).collect()
    }

    #[test]
    fn theta_of_q() {
        let q = QExpansion::from_fn(5, |n| rq(if n == 1 { 1 } else { 0 }));
        assert_eq!(q.theta(), q);
    }

    #[test]
    fn kolberg_leading_terms() {
        let g = kolberg_g(4);
        assert_eq!(ints(&g, 4), vec![0, 1, 12, 90, 508]);
        assert_eq!(g.start(), 1);
    }

    #[test]
    fn ordinary_eisenstein_coefficients() {
        let e = eisenstein_ord(8, 3, 5).unwrap();
        assert_eq!(e.coeff(0).unwrap(), &rq(1));
        assert_eq!(e.coeff(1).unwrap(), &(rq(-240) / rq(1093)));
        assert_eq!(e.coeff(2).unwrap(), &(rq(-240 * 129) / rq(1093)));
        assert_eq!(e, eisenstein_ord_via_v(8, 3, 5).unwrap());
    }

    #[test]
    fn critical_eisenstein_head() {
        let e = eisenstein_crit(6, &DirichletChar::trivial(1), 3, 4).unwrap();
        assert_eq!(ints(&e, 4), vec![0, 1, 129, 2187, 16513]);
    }

    #[test]
    fn crit_errors() {
        assert_eq!(eisenstein_crit(5, &DirichletChar::trivial(1), 3, 4).unwrap_err(), Error::ParityMismatch);
        assert_eq!(eisenstein_crit(0, &DirichletChar::trivial(1), 3, 4).unwrap_err(), Error::TrivialWeightZero);
    }

    #[test]
    fn trust_ranges() {
        let g = kolberg_g(30);
        assert_eq!(g.u_op(3).trusted(), 10);
        assert_eq!(g.v_op(3).trusted(), 92);
        assert_eq!(g.mul(&g).trusted(), 31);
        let e = eisenstein_ord(8, 3, 30).unwrap();
        assert_eq!(g.mul(&e).trusted(), 30);
    }

    #[test]
    fn inverse_roundtrip() {
        let e = eisenstein_level1(4, 20).unwrap();
        let one = e.mul(&e.inverse().unwrap());
        assert_eq!(one, QExpansion::from_fn(20, |n| rq(if n == 0 { 1 } else { 0 })));
    }
}
