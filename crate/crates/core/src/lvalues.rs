//! Bernoulli numbers, Dirichlet L-values at non-positive integers,
//! Kubota-Leopoldt p-adic L-values, Gauss sums, and the Eisenstein period
//! constant.
//!
//! Characters are restricted to rational (hence quadratic or trivial) value
//! tables. Anything else raises `UnsupportedCharacterRing`.

use crate::error::{Error, Result};
use crate::padic::{padic_log, padic_log_iwasawa, teichmuller, vp, PadicScalar};
use crate::ring::{binomial, factorial};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::sync::Mutex;

static BERNOULLI: Mutex<Vec<BigRational>> = Mutex::new(Vec::new());

/// B_n with B_1 = -1/2.
pub fn bernoulli(n: usize) -> BigRational {
    let mut cache = BERNOULLI.lock().unwrap_or_else(|e| e.into_inner());
    while cache.len() <= n {
        let m = cache.len();
        if m == 0 {
            cache.push(BigRational::one());
            continue;
        }
        if m > 1 && m % 2 == 1 {
            cache.push(BigRational::zero());
            continue;
        }
        // sum_{k<=m} C(m+1, k) B_k = 0
        let mut s = BigRational::zero();
        for (k, b) in cache.iter().enumerate() {
            if !b.is_zero() {
                s += BigRational::from_integer(binomial(m as i64 + 1, k as i64)) * b;
            }
        }
        cache.push(-s / BigRational::from_integer(BigInt::from(m + 1)));
    }
    cache[n].clone()
}

/// B_n(x) = sum_k C(n,k) B_k x^{n-k}.
pub fn bernoulli_poly(n: usize, x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    let mut xp = BigRational::one();
    for k in (0..=n).rev() {
        let b = bernoulli(k);
        if !b.is_zero() {
            acc += BigRational::from_integer(binomial(n as i64, k as i64)) * b * &xp;
        }
        xp *= x;
    }
    acc
}

/// Kronecker symbol (d / n) for n >= 1.
pub fn kronecker_symbol(d: i64, n: u64) -> i8 {
    let mut n = n;
    let mut out: i8 = 1;
    while n % 2 == 0 {
        n /= 2;
        if d % 2 == 0 {
            return 0;
        }
        let r = d.rem_euclid(8);
        if r == 3 || r == 5 {
            out = -out;
        }
    }
    // Jacobi (d / n), n odd
    let mut a = d.rem_euclid(n as i64) as u64;
    let mut m = n;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if m % 8 == 3 || m % 8 == 5 {
                out = -out;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            out = -out;
        }
        a %= m;
    }
    if m == 1 {
        out
    } else {
        0
    }
}

/// A rational-valued Dirichlet character, stored as its table on Z/N.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DirichletChar {
    modulus: u64,
    values: Vec<i8>,
}

impl DirichletChar {
    pub fn trivial(modulus: u64) -> Self {
        let m = modulus.max(1);
        let values = (0..m).map(|a| if a.gcd(&m) == 1 { 1 } else { 0 }).collect();
        DirichletChar { modulus: m, values }
    }

    /// a -> (d / a) modulo |d|; intended for fundamental discriminants.
    pub fn kronecker(d: i64) -> Self {
        let m = d.unsigned_abs().max(1);
        let values = (0..m)
            .map(|a| {
                let a = if a == 0 { m } else { a };
                if a.gcd(&m) != 1 {
                    0
                } else {
                    kronecker_symbol(d, a)
                }
            })
            .collect();
        DirichletChar { modulus: m, values }
    }

    /// The power `omega^i` of the Teichmüller character at `p`, when rational.
    pub fn teichmuller_power(p: u64, i: i64) -> Result<Self> {
        let e = i.rem_euclid(p as i64 - 1);
        if e == 0 {
            return Ok(Self::trivial(1));
        }
        if p > 2 && 2 * e == p as i64 - 1 {
            let pstar = if p % 4 == 1 { p as i64 } else { -(p as i64) };
            return Ok(Self::kronecker(pstar));
        }
        Err(Error::UnsupportedCharacterRing(format!("omega^{i} at p = {p}")))
    }

    /// Build from a value table indexed by residues 0..N.
    pub fn from_values(modulus: u64, values: &[i64]) -> Result<Self> {
        if modulus == 0 || values.len() as u64 != modulus {
            return Err(Error::InvalidInput("value table must have one entry per residue".into()));
        }
        let mut out = Vec::with_capacity(values.len());
        for (a, &v) in values.iter().enumerate() {
            let unit = (a as u64).gcd(&modulus) == 1;
            match (unit, v) {
                (false, 0) => out.push(0),
                (false, _) => return Err(Error::InvalidInput(format!("chi({a}) must vanish"))),
                (true, 1) | (true, -1) => out.push(v as i8),
                (true, _) => return Err(Error::UnsupportedCharacterRing(format!("chi({a}) = {v}"))),
            }
        }
        let chi = DirichletChar { modulus, values: out };
        for a in 0..modulus {
            for b in 0..modulus {
                if chi.eval(a as i64 * b as i64) != chi.eval(a as i64) * chi.eval(b as i64) {
                    return Err(Error::InvalidInput("table is not multiplicative".into()));
                }
            }
        }
        Ok(chi)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn eval(&self, a: i64) -> i8 {
        self.values[a.rem_euclid(self.modulus as i64) as usize]
    }

    pub fn is_trivial(&self) -> bool {
        self.values.iter().all(|&v| v != -1)
    }

    /// chi(-1).
    pub fn parity(&self) -> i8 {
        self.eval(-1)
    }

    pub fn conductor(&self) -> u64 {
        let n = self.modulus;
        (1..=n)
            .filter(|f| n % f == 0)
            .find(|&f| (0..n).all(|a| a.gcd(&n) != 1 || a % f != 1 % f || self.eval(a as i64) == 1))
            .unwrap_or(n)
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus
    }

    /// The primitive character inducing this one.
    pub fn primitive(&self) -> Self {
        let f = self.conductor();
        let n = self.modulus;
        let values = (0..f)
            .map(|a| {
                if a.gcd(&f) != 1 {
                    return 0;
                }
                let lift = (0..n).map(|k| a + k * f).find(|x| x.gcd(&n) == 1).unwrap();
                self.eval(lift as i64)
            })
            .collect();
        DirichletChar { modulus: f, values }
    }

    /// Pointwise product on the lcm modulus.
    pub fn mul(&self, o: &Self) -> Self {
        let m = self.modulus.lcm(&o.modulus);
        let values = (0..m).map(|a| self.eval(a as i64) * o.eval(a as i64)).collect();
        DirichletChar { modulus: m, values }
    }
}

/// B_{n,chi} = F^{n-1} sum_{a=1}^{F} chi(a) B_n(a/F), with F the modulus of chi.
///
/// The modulus is taken as given, so an imprimitive chi yields the Bernoulli
/// number of its imprimitive L-function. For the trivial character mod 1 this
/// gives B_1 = +1/2.
pub fn gen_bernoulli(n: usize, chi: &DirichletChar) -> BigRational {
    let f = chi.modulus();
    let fr = BigRational::from_integer(BigInt::from(f));
    let mut acc = BigRational::zero();
    for a in 1..=f {
        let c = chi.eval(a as i64);
        if c != 0 {
            let x = BigRational::new(BigInt::from(a), BigInt::from(f));
            acc += BigRational::from_integer(BigInt::from(c)) * bernoulli_poly(n, &x);
        }
    }
    acc * pow_rat(&fr, n as i64 - 1)
}

fn pow_rat(x: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

/// L(chi, 1-n) = -B_{n,chi}/n, for n >= 1.
pub fn dirichlet_l_nonpos(chi: &DirichletChar, n: usize) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::InvalidInput("need n >= 1".into()));
    }
    Ok(-gen_bernoulli(n, chi) / BigRational::from_integer(BigInt::from(n)))
}

/// L_p(chi, 1-n) by interpolation: -(1 - psi(p) p^{n-1}) B_{n,psi}/n with
/// psi the primitive character of chi * omega^{-n}.
pub fn kubota_leopoldt_interpolated(chi: &DirichletChar, n: usize, p: u64) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::InvalidInput("need n >= 1".into()));
    }
    let psi = chi.primitive().mul(&DirichletChar::teichmuller_power(p, -(n as i64))?).primitive();
    let pr = BigRational::from_integer(BigInt::from(p));
    let euler = BigRational::one() - BigRational::from_integer(BigInt::from(psi.eval(p as i64))) * pow_rat(&pr, n as i64 - 1);
    Ok(-euler * gen_bernoulli(n, &psi) / BigRational::from_integer(BigInt::from(n)))
}

fn floor_log(p: u64, j: u64) -> i64 {
    let mut k = 0;
    let mut x = j;
    while x >= p {
        x /= p;
        k += 1;
    }
    k
}

/// Smallest truncation depth whose tail terms all have valuation >= `need`.
fn series_depth(v_f: i64, need: i64, p: u64, derivative: bool) -> usize {
    let mut j: u64 = 1;
    loop {
        // check every term beyond j: the bound is increasing past this point
        let b = |t: u64| t as i64 * v_f - 1 - if derivative { floor_log(p, t) } else { 0 };
        if (j + 1..j + 1 + 4 * p).all(|t| b(t) >= need) {
            return j as usize;
        }
        j += 1;
    }
}

/// The series for L_p(chi, s) truncated at `depth`, with working precision `work`.
///
/// s != 1 uses (1/F)(1/(s-1)) sum_a chi(a) <a>^{1-s} sum_j C(1-s,j)(F/a)^j B_j;
/// s = 1 uses its derivative in s, which is finite for nontrivial chi.
pub fn kubota_leopoldt_series(chi: &DirichletChar, s: i64, p: u64, work: u32, depth: usize) -> Result<PadicScalar> {
    if p == 2 {
        return Err(Error::Unsupported("p = 2".into()));
    }
    let chi = chi.primitive();
    if s == 1 && chi.is_trivial() {
        return Err(Error::Pole);
    }
    let f = chi.modulus().lcm(&p);
    let fr = BigRational::from_integer(BigInt::from(f));
    let mut total = PadicScalar::zero(p);
    for a in 1..=f {
        let c = chi.eval(a as i64);
        if a % p == 0 || c == 0 {
            continue;
        }
        let ar = BigRational::from_integer(BigInt::from(a));
        let ratio = &fr / &ar;
        let avec = PadicScalar::from_i64(p, a as i64, work);
        let bracket = avec.div(&teichmuller(a % p, p, work))?;
        let term = if s == 1 {
            let mut inner = BigRational::zero();
            for j in 1..=depth {
                let b = bernoulli(j);
                if b.is_zero() {
                    continue;
                }
                let sign = if j % 2 == 1 { 1 } else { -1 };
                inner += BigRational::new(BigInt::from(sign), BigInt::from(j)) * pow_rat(&ratio, j as i64) * b;
            }
            padic_log(&bracket)?.neg().sub(&PadicScalar::from_rational_abs(p, &inner, work as i64))
        } else {
            let mut inner = BigRational::zero();
            for j in 0..=depth {
                let b = bernoulli(j);
                if b.is_zero() {
                    continue;
                }
                inner += BigRational::from_integer(binomial(1 - s, j as i64)) * pow_rat(&ratio, j as i64) * b;
            }
            bracket.pow(1 - s)?.mul(&PadicScalar::from_rational_abs(p, &inner, work as i64))
        };
        total = if c > 0 { total.add(&term) } else { total.sub(&term) };
    }
    let mut denom = BigInt::from(f);
    if s != 1 {
        denom *= BigInt::from(s - 1);
    }
    total.div(&PadicScalar::from_bigint(p, &denom, work + 8))
}

/// L_p(chi, s) known modulo p^prec.
pub fn kubota_leopoldt(chi: &DirichletChar, s: i64, p: u64, prec: u32) -> Result<PadicScalar> {
    if p == 2 {
        return Err(Error::Unsupported("p = 2".into()));
    }
    let f = chi.primitive().modulus().lcm(&p);
    let v_f = vp(p, &BigInt::from(f)) as i64;
    if v_f < 1 {
        return Err(Error::SeriesDivergence);
    }
    let v_s = if s == 1 { 0 } else { vp(p, &BigInt::from(s - 1)) as i64 };
    let need = prec as i64 + v_f + v_s + 1;
    let depth = series_depth(v_f, need, p, s == 1);
    let work = need as u32 + floor_log(p, depth as u64) as u32 + 8;
    let val = kubota_leopoldt_series(chi, s, p, work, depth)?;
    Ok(val.truncate_abs(prec as i64))
}

/// Integer polynomial helpers for exact cyclotomic arithmetic.
fn poly_divrem_monic(a: &[BigInt], m: &[BigInt]) -> (Vec<BigInt>, Vec<BigInt>) {
    let dm = m.len() - 1;
    let mut r = a.to_vec();
    if r.len() <= dm {
        return (vec![], r);
    }
    let mut q = vec![BigInt::zero(); r.len() - dm];
    for i in (dm..r.len()).rev() {
        let c = r[i].clone();
        if c.is_zero() {
            continue;
        }
        q[i - dm] = c.clone();
        for (k, mk) in m.iter().enumerate() {
            r[i - dm + k] -= &c * mk;
        }
    }
    r.truncate(dm);
    (q, r)
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// The cyclotomic polynomial Phi_n, lowest degree first.
pub fn cyclotomic_poly(n: u64) -> Vec<BigInt> {
    let mut num = vec![BigInt::zero(); n as usize + 1];
    num[0] = BigInt::from(-1);
    num[n as usize] = BigInt::one();
    for d in 1..n {
        if n % d == 0 {
            let (q, _) = poly_divrem_monic(&num, &cyclotomic_poly(d));
            num = q;
        }
    }
    num
}

/// An exact Gauss sum sum_a chi(a) zeta_N^a in Q(zeta_N), zeta_N = exp(2 pi i / N).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GaussSum {
    pub modulus: u64,
    /// Coordinates in the power basis of Z[zeta_N].
    pub coords: Vec<BigInt>,
    /// G^2 when it is rational.
    pub square: Option<BigInt>,
    /// +1 when G = sqrt(G^2) with the principal branch (i sqrt|.| for negative squares).
    pub sign: i8,
}

pub fn gauss_sum(chi: &DirichletChar) -> GaussSum {
    let n = chi.modulus();
    if n == 1 {
        return GaussSum { modulus: 1, coords: vec![BigInt::one()], square: Some(BigInt::one()), sign: 1 };
    }
    let phi = cyclotomic_poly(n);
    let mut g = vec![BigInt::zero(); n as usize];
    for a in 0..n {
        g[a as usize] += BigInt::from(chi.eval(a as i64));
    }
    let (_, coords) = poly_divrem_monic(&g, &phi);
    let (_, sq) = poly_divrem_monic(&poly_mul(&coords, &coords), &phi);
    let square = if sq.iter().skip(1).all(|c| c.is_zero()) { sq.first().cloned().or(Some(BigInt::zero())) } else { None };
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for a in 0..n {
        let t = 2.0 * std::f64::consts::PI * a as f64 / n as f64;
        re += chi.eval(a as i64) as f64 * t.cos();
        im += chi.eval(a as i64) as f64 * t.sin();
    }
    let sign = match &square {
        Some(s) if s.is_negative() => if im >= 0.0 { 1 } else { -1 },
        _ => if re >= 0.0 { 1 } else { -1 },
    };
    GaussSum { modulus: n, coords, square, sign }
}

/// A primitive N-th root of unity in Z_p (Teichmüller lift of the least
/// residue of exact order N); requires N | p - 1.
pub fn padic_root_of_unity(n: u64, p: u64, prec: u32) -> Result<PadicScalar> {
    if n == 0 || (p - 1) % n != 0 {
        return Err(Error::UnsupportedCharacterRing(format!("zeta_{n} is not in Q_{p}")));
    }
    let order = |a: u64| (1..=p - 1).find(|&k| BigInt::from(a).modpow(&BigInt::from(k), &BigInt::from(p)).is_one()).unwrap();
    let a = (1..p).find(|&a| order(a) == n).unwrap();
    Ok(teichmuller(a, p, prec))
}

/// The Gauss sum embedded in Q_p through `padic_root_of_unity`.
pub fn gauss_sum_padic(chi: &DirichletChar, p: u64, prec: u32) -> Result<PadicScalar> {
    let n = chi.modulus();
    if n == 1 {
        return Ok(PadicScalar::from_i64(p, 1, prec));
    }
    let zeta = padic_root_of_unity(n, p, prec)?;
    let mut acc = PadicScalar::zero(p);
    for a in 1..n {
        let c = chi.eval(a as i64);
        if c != 0 {
            let t = zeta.pow(a as i64)?;
            acc = if c > 0 { acc.add(&t) } else { acc.sub(&t) };
        }
    }
    Ok(acc)
}

/// sum_a conj(chi)(a) log_p(1 - zeta^a), the cyclotomic-unit side of L_p(chi, 1).
pub fn cyclotomic_log_sum(chi: &DirichletChar, p: u64, prec: u32) -> Result<PadicScalar> {
    let n = chi.modulus();
    let zeta = padic_root_of_unity(n, p, prec)?;
    let one = PadicScalar::from_i64(p, 1, prec);
    let mut acc = PadicScalar::zero(p);
    for a in 1..n {
        let c = chi.eval(a as i64);
        if c != 0 {
            let t = padic_log_iwasawa(&one.sub(&zeta.pow(a as i64)?))?;
            acc = if c > 0 { acc.add(&t) } else { acc.sub(&t) };
        }
    }
    Ok(acc)
}

/// (-1)^{k+1} k! N^k / (4 G(chi^{-1})) * L_p(chi^{-1}, 1+k) * L(chi, -1-k).
pub fn eisenstein_period(k: u32, chi: &DirichletChar, p: u64, prec: u32) -> Result<PadicScalar> {
    if !chi.is_primitive() {
        return Err(Error::InvalidInput("character must be primitive".into()));
    }
    let sign = if k % 2 == 0 { 1 } else { -1 };
    if chi.parity() != sign {
        return Err(Error::ParityMismatch);
    }
    let n = chi.modulus();
    // rational characters are their own inverses
    let work = prec + 16;
    let g = gauss_sum_padic(chi, p, work)?;
    let lp = kubota_leopoldt(chi, k as i64 + 1, p, work)?;
    let lval = dirichlet_l_nonpos(chi, k as usize + 2)?;
    let mut c = BigRational::from_integer(factorial(k as u64) * num_traits::pow(BigInt::from(n), k as usize));
    c /= BigRational::from_integer(BigInt::from(4));
    if k % 2 == 0 {
        c = -c;
    }
    c *= lval;
    let cp = PadicScalar::from_rational(p, &c, work + 8);
    Ok(cp.mul(&lp).div(&g)?.truncate_abs(prec as i64 + cp.valuation().unwrap_or(0).min(0)))
}

/// Von Staudt-Clausen: the denominator of B_n (n even >= 2).
pub fn staudt_denominator(n: usize) -> BigInt {
    let mut d = BigInt::one();
    for q in 2..=(n as u64 + 1) {
        if crate::qfield::is_prime(q) && n as u64 % (q - 1) == 0 {
            d *= BigInt::from(q);
        }
    }
    d
}

/// The rational number as a float (for display).
pub fn rat_to_f64(x: &BigRational) -> f64 {
    x.numer().to_f64().unwrap_or(f64::NAN) / x.denom().to_f64().unwrap_or(f64::NAN)
}
