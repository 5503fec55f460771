//! Fourier-Whittaker coefficients of Hilbert modular forms over a real
//! quadratic field: Hecke eigenvalue tables, depletion, the theta operators,
//! the diagonal pullback `iota^*` and Rankin-Cohen brackets.
//!
//! A form is stored as its weight `(r1, r2, t1, t2)` together with a
//! coefficient function `lambda -> c(lambda)` on totally positive elements of
//! the inverse different. The q-expansion coefficient at `lambda` is
//! `sigma_1(lambda)^{-t1} sigma_2(lambda)^{-t2} c(lambda)`, so both `theta_i`
//! and the inverse of `Theta_1` act on the weight alone.

use crate::error::{Error, Result};
use crate::padic::PadicScalar;
use crate::qfield::{PrimeIdeal, PrimeKind, QuadElem, QuadField, QuadIdeal};
use crate::qseries::QExpansion;
use crate::ring::binomial;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

/// `(r1, r2, t1, t2)` with `r1 + 2 t1 = r2 + 2 t2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Weight {
    pub r1: i64,
    pub r2: i64,
    pub t1: i64,
    pub t2: i64,
}

impl Weight {
    pub fn new(r1: i64, r2: i64, t1: i64, t2: i64) -> Result<Self> {
        if r1 + 2 * t1 != r2 + 2 * t2 {
            return Err(Error::InvalidWeight(format!("({r1}, {r2}, {t1}, {t2}) violates r1 + 2t1 = r2 + 2t2")));
        }
        Ok(Weight { r1, r2, t1, t2 })
    }

    /// The weight after `theta_i^a`: `(2a, 0, -a, 0)` or `(0, 2a, 0, -a)`.
    pub fn theta_shift(&self, i: usize, a: i64) -> Self {
        match i {
            1 => Weight { r1: self.r1 + 2 * a, t1: self.t1 - a, ..*self },
            2 => Weight { r2: self.r2 + 2 * a, t2: self.t2 - a, ..*self },
            _ => panic!("infinite places are 1 and 2"),
        }
    }

    pub fn swapped(&self) -> Self {
        Weight { r1: self.r2, r2: self.r1, t1: self.t2, t2: self.t1 }
    }

    /// `w + 1 = r1 + 2 t1 - 1`, the exponent in the Hecke recurrence.
    pub fn hecke_exponent(&self) -> u32 {
        (self.r1 + 2 * self.t1 - 1) as u32
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.r1, self.r2, self.t1, self.t2)
    }
}

/// A table cell: an integer or a rational written as text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Text(String),
}

impl Num {
    fn to_rational(&self) -> Result<BigRational> {
        match self {
            Num::Int(n) => Ok(BigRational::from_integer(BigInt::from(*n))),
            Num::Text(s) => s.trim().parse::<BigRational>().map_err(|_| Error::Table(format!("cannot parse {s:?}"))),
        }
    }
}

/// One row: the prime `((x + y sqrt D)/2)` of norm `norm` has eigenvalue `mu_a + mu_b sqrt D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub x: i64,
    pub y: i64,
    pub norm: u64,
    pub mu_a: Num,
    pub mu_b: Num,
}

/// Hecke eigenvalues `mu(p)` at prime ideals, closed under conjugation.
#[derive(Clone, Debug)]
pub struct EigenvalueTable {
    pub field: QuadField,
    pub weight: Weight,
    entries: BTreeMap<PrimeIdeal, QuadElem>,
    /// Primes filled in from their conjugates.
    pub completed: Vec<PrimeIdeal>,
}

pub const FIXTURE_CSV: &str = include_str!("../data/d13_weight_2_8_3_0.csv");

impl EigenvalueTable {
    pub fn from_rows(d: i64, weight: Weight, rows: &[TableRow]) -> Result<Self> {
        let field = QuadField::new(d)?;
        let mut entries = BTreeMap::new();
        for row in rows {
            let g = QuadElem::from_half(d, row.x, row.y);
            if !g.is_integral() || !g.is_totally_positive() {
                return Err(Error::Table(format!("generator {g} is not a totally positive integer")));
            }
            let id = field.factor(&g)?;
            let mut it = id.factors.iter();
            let (p, e) = match (it.next(), it.next()) {
                (Some((p, 1)), None) => (*p, 1),
                _ => return Err(Error::Table(format!("({g}) is not prime"))),
            };
            debug_assert_eq!(e, 1);
            if p.norm() != row.norm {
                return Err(Error::Table(format!("({g}) has norm {}, table says {}", p.norm(), row.norm)));
            }
            let mu = QuadElem::new(d, row.mu_a.to_rational()?, row.mu_b.to_rational()?);
            if entries.insert(p, mu).is_some() {
                return Err(Error::Table(format!("duplicate row for {p}")));
            }
        }
        let mut completed = Vec::new();
        let keys: Vec<PrimeIdeal> = entries.keys().copied().collect();
        for p in keys {
            let q = field.conjugate_prime(&p);
            let mu = entries[&p].clone();
            if q == p {
                if !mu.b.is_zero() {
                    return Err(Error::Table(format!("mu({p}) must be rational for a Galois-stable prime")));
                }
                continue;
            }
            match entries.get(&q) {
                Some(other) if *other != mu.conj() => {
                    return Err(Error::Table(format!("mu({q}) is not the conjugate of mu({p})")));
                }
                Some(_) => {}
                None => {
                    entries.insert(q, mu.conj());
                    completed.push(q);
                }
            }
        }
        Ok(EigenvalueTable { field, weight, entries, completed })
    }

    pub fn from_csv_str(d: i64, weight: Weight, text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<TableRow>, _>>()
            .map_err(|e| Error::Table(e.to_string()))?;
        Self::from_rows(d, weight, &rows)
    }

    pub fn from_json_str(d: i64, weight: Weight, text: &str) -> Result<Self> {
        let rows: Vec<TableRow> = serde_json::from_str(text).map_err(|e| Error::Table(e.to_string()))?;
        Self::from_rows(d, weight, &rows)
    }

    /// CSV or JSON by file extension.
    pub fn load(path: &Path, d: i64, weight: Weight) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Table(format!("{}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(d, weight, &text),
            _ => Self::from_csv_str(d, weight, &text),
        }
    }

    /// The shipped table for `Q(sqrt 13)` in weight `(2, 8, 3, 0)`.
    pub fn fixture() -> Self {
        Self::from_csv_str(13, Weight::new(2, 8, 3, 0).unwrap(), FIXTURE_CSV).expect("fixture is valid")
    }

    pub fn get(&self, p: &PrimeIdeal) -> Option<&QuadElem> {
        self.entries.get(p)
    }

    pub fn primes(&self) -> impl Iterator<Item = &PrimeIdeal> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest `B` such that every prime of norm `<= B` is present.
    pub fn coverage_bound(&self) -> u64 {
        let mut first_missing = u64::MAX;
        let mut ell = 2u64;
        while ell <= first_missing {
            if crate::qfield::is_prime(ell) {
                for p in self.field.primes_above(ell) {
                    if !self.entries.contains_key(&p) {
                        first_missing = first_missing.min(p.norm());
                    }
                }
            }
            ell += 1;
        }
        first_missing - 1
    }

    /// The table of `F^sigma`: `mu'(p) = mu(sigma p)`.
    pub fn conjugated(&self) -> Self {
        let entries = self.entries.iter().map(|(p, _)| (*p, self.entries[&self.field.conjugate_prime(p)].clone())).collect();
        EigenvalueTable { field: self.field.clone(), weight: self.weight.swapped(), entries, completed: vec![] }
    }

    /// `v_p(mu(p))` for every prime, to check divisibility by `p^t`.
    pub fn divisibility_report(&self) -> Vec<(PrimeIdeal, Option<i64>)> {
        self.entries.iter().map(|(p, mu)| (*p, self.field.valuation(mu, p))).collect()
    }

    /// `mu(p^e)` by `mu(p^{a+1}) = mu(p) mu(p^a) - Nm(p)^{w+1} mu(p^{a-1})`.
    pub fn mu_prime_power(&self, p: &PrimeIdeal, e: u32) -> Result<QuadElem> {
        let mu = self.entries.get(p).ok_or_else(|| Error::MissingPrime { prime: p.to_string(), bound: p.norm() })?;
        let d = self.field.d;
        let nw = QuadElem::from_rational(d, BigRational::from_integer(num_traits::pow(BigInt::from(p.norm()), self.weight.hecke_exponent() as usize)));
        let (mut prev, mut cur) = (QuadElem::from_int(d, 1), mu.clone());
        if e == 0 {
            return Ok(prev);
        }
        for _ in 1..e {
            let next = mu.mul(&cur).sub(&nw.mul(&prev));
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }

    pub fn mu_of_ideal(&self, m: &QuadIdeal) -> Result<QuadElem> {
        let mut acc = QuadElem::from_int(self.field.d, 1);
        for (p, e) in &m.factors {
            acc = acc.mul(&self.mu_prime_power(p, *e)?);
        }
        Ok(acc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Licence {
    /// Depleted at both primes above p.
    Fornea,
    /// Depleted at the first prime and non-ordinary at the second.
    SsTheta,
}

pub type CoefficientFn = Arc<dyn Fn(&QuadElem) -> Result<QuadElem> + Send + Sync>;

#[derive(Clone)]
pub enum CoefficientSource {
    /// `c(lambda) = mu(lambda d)`.
    Table(Arc<EigenvalueTable>),
    Synthetic(CoefficientFn),
}

/// A p-adic Hilbert modular form through its Fourier-Whittaker coefficients.
#[derive(Clone)]
pub struct FWForm {
    pub field: QuadField,
    pub p: u64,
    /// `[p1, p2]`; p-adic values are taken through the embedding attached to `p1`.
    pub primes: [PrimeIdeal; 2],
    pub weight: Weight,
    source: CoefficientSource,
    conjugate: bool,
    pub depleted: [bool; 2],
    pub non_ordinary_p2: Option<bool>,
    pub licence: Option<Licence>,
    pub history: Vec<String>,
}

impl fmt::Debug for FWForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FWForm")
            .field("weight", &self.weight)
            .field("primes", &self.primes)
            .field("depleted", &self.depleted)
            .field("licence", &self.licence)
            .field("history", &self.history)
            .finish()
    }
}

fn split_pair(field: &QuadField, p: u64, p1: PrimeIdeal) -> Result<[PrimeIdeal; 2]> {
    if p1.ell != p || !matches!(p1.kind, PrimeKind::Split { .. }) {
        return Err(Error::Unsupported(format!("{p1} is not a split prime above {p}")));
    }
    Ok([p1, field.conjugate_prime(&p1)])
}

impl FWForm {
    pub fn from_table(table: Arc<EigenvalueTable>, p: u64, p1: PrimeIdeal) -> Result<Self> {
        let field = table.field.clone();
        let primes = split_pair(&field, p, p1)?;
        let weight = table.weight;
        let mut f = FWForm {
            field,
            p,
            primes,
            weight,
            source: CoefficientSource::Table(table.clone()),
            conjugate: false,
            depleted: [false, false],
            non_ordinary_p2: None,
            licence: None,
            history: vec![],
        };
        if let Some(mu2) = table.get(&primes[1]) {
            let v = f.sigma(1, mu2, 30)?.valuation().unwrap_or(i64::MAX);
            f.non_ordinary_p2 = Some(v > weight.t2);
        }
        Ok(f)
    }

    pub fn synthetic(field: QuadField, p: u64, p1: PrimeIdeal, weight: Weight, c: CoefficientFn) -> Result<Self> {
        let primes = split_pair(&field, p, p1)?;
        Ok(FWForm {
            field,
            p,
            primes,
            weight,
            source: CoefficientSource::Synthetic(c),
            conjugate: false,
            depleted: [false, false],
            non_ordinary_p2: None,
            licence: None,
            history: vec![],
        })
    }

    /// `sigma_1` is the embedding attached to `p1`, `sigma_2 = sigma_1 o conj`.
    pub fn sigma(&self, i: usize, x: &QuadElem, prec: u32) -> Result<PadicScalar> {
        match i {
            1 => self.field.embed(x, &self.primes[0], prec),
            2 => self.field.embed(&x.conj(), &self.primes[0], prec),
            _ => Err(Error::InvalidInput("infinite places are 1 and 2".into())),
        }
    }

    /// `c(lambda)` before depletion.
    pub fn raw_coefficient(&self, lambda: &QuadElem) -> Result<QuadElem> {
        let l = if self.conjugate { lambda.conj() } else { lambda.clone() };
        match &self.source {
            CoefficientSource::Table(t) => t.mu_of_ideal(&self.field.ideal_of(&l)?),
            CoefficientSource::Synthetic(f) => {
                if !self.field.in_inverse_different_plus(&l) {
                    return Err(Error::NotInInverseDifferent(l.to_string()));
                }
                f(&l)
            }
        }
    }

    /// `v_{p_i}(lambda d)`.
    pub fn p_valuation(&self, i: usize, lambda: &QuadElem) -> i64 {
        let x = lambda.mul(&self.field.different());
        self.field.valuation(&x, &self.primes[i]).unwrap_or(i64::MAX)
    }

    fn killed(&self, lambda: &QuadElem) -> bool {
        (0..2).any(|i| self.depleted[i] && self.p_valuation(i, lambda) > 0)
    }

    pub fn fw_coefficient(&self, lambda: &QuadElem) -> Result<QuadElem> {
        if !self.field.in_inverse_different_plus(lambda) {
            return Err(Error::NotInInverseDifferent(lambda.to_string()));
        }
        if self.killed(lambda) {
            return Ok(QuadElem::from_int(self.field.d, 0));
        }
        self.raw_coefficient(lambda)
    }

    /// `(1 - V U)` at each listed prime (0 for `p1`, 1 for `p2`).
    pub fn deplete(&self, which: &[usize]) -> Self {
        let mut out = self.clone();
        for &i in which {
            out.depleted[i] = true;
        }
        out.history.push(format!("deplete{which:?}"));
        out
    }

    /// `theta_i^a`: a shift of weight, coefficients unchanged.
    pub fn theta(&self, i: usize, a: u32) -> Self {
        let mut out = self.clone();
        out.weight = self.weight.theta_shift(i, a as i64);
        if a > 0 {
            out.history.push(format!("theta{i}^{a}"));
        }
        out
    }

    /// `Theta_1^{-1}`: re-tag to `(2 - r1, r2, t1 + r1 - 1, t2)`.
    pub fn theta1_inverse(&self) -> Result<Self> {
        if self.weight.r1 < 2 {
            return Err(Error::InvalidWeight(format!("Theta_1 inverse needs r1 >= 2, weight is {}", self.weight)));
        }
        if !self.depleted[0] {
            return Err(Error::LicenceMissing("form is not p1-depleted".into()));
        }
        let licence = if self.depleted[1] {
            Licence::Fornea
        } else if self.non_ordinary_p2 == Some(true) {
            Licence::SsTheta
        } else {
            return Err(Error::LicenceMissing("form is neither p2-depleted nor known to be non-ordinary at p2".into()));
        };
        let w = self.weight;
        let mut out = self.clone();
        out.weight = Weight { r1: 2 - w.r1, r2: w.r2, t1: w.t1 + w.r1 - 1, t2: w.t2 };
        out.licence = Some(licence);
        out.history.push(format!("Theta1^-1 [{licence:?}]"));
        Ok(out)
    }

    /// `F^sigma`: weights and primes swap roles, `c'(lambda) = c(sigma lambda)`.
    pub fn conjugate(&self) -> Self {
        let mut out = self.clone();
        out.conjugate = !self.conjugate;
        out.weight = self.weight.swapped();
        out.depleted = [self.depleted[1], self.depleted[0]];
        out.non_ordinary_p2 = None;
        out.licence = None;
        out.history.push("conjugate".into());
        out
    }

    /// Largest `Nm(lambda d)` over `Tr(lambda) = n`.
    pub fn norm_bound(&self, n: i64) -> u64 {
        self.field
            .enumerate_trace(n)
            .iter()
            .map(|l| l.mul(&self.field.different()).norm().to_integer().abs().to_u64().unwrap_or(u64::MAX))
            .max()
            .unwrap_or(0)
    }

    fn rebound(&self, e: Error, n_max: usize) -> Error {
        match e {
            Error::MissingPrime { prime, .. } => Error::MissingPrime { prime, bound: self.norm_bound(n_max as i64) },
            other => other,
        }
    }

    /// `sigma_1(l)^{-t1} sigma_2(l)^{-t2} sigma_1(c(l))`, or zero.
    fn pullback_term(&self, lambda: &QuadElem, work: u32) -> Result<PadicScalar> {
        let c = self.fw_coefficient(lambda)?;
        if c.is_zero() {
            return Ok(PadicScalar::zero(self.p));
        }
        let mut term = self.sigma(1, &c, work)?;
        for (i, t) in [(1usize, self.weight.t1), (2, self.weight.t2)] {
            let s = self.sigma(i, lambda, work)?;
            if t > 0 && s.valuation().unwrap_or(i64::MAX) > 0 {
                return Err(Error::DivisionByNonUnit(format!("sigma_{i}({lambda}) at an undepleted coefficient")));
            }
            term = term.mul(&s.pow(-t)?);
        }
        Ok(term)
    }

    /// `iota^*`: `a_n = sum_{Tr lambda = n} sigma_1^{-t1} sigma_2^{-t2} c(lambda)`, modulo `p^prec`.
    pub fn pullback_iota(&self, n_max: usize, prec: u32) -> Result<QExpansion<PadicScalar>> {
        let work = prec + 12;
        let coeffs: Vec<Result<PadicScalar>> = (0..=n_max)
            .into_par_iter()
            .map(|n| {
                if n == 0 {
                    return Ok(PadicScalar::zero(self.p));
                }
                let mut acc = PadicScalar::zero(self.p);
                for l in self.field.enumerate_trace(n as i64) {
                    acc = acc.add(&self.pullback_term(&l, work)?);
                }
                Ok(acc.truncate_abs(prec as i64))
            })
            .collect();
        let coeffs = coeffs.into_iter().collect::<Result<Vec<_>>>().map_err(|e| self.rebound(e, n_max))?;
        Ok(QExpansion::new(coeffs))
    }

    /// The same pullback computed exactly in F (`sigma_1 = id`, `sigma_2 = conj`).
    pub fn pullback_exact(&self, n_max: usize) -> Result<QExpansion<QuadElem>> {
        let d = self.field.d;
        let coeffs: Vec<Result<QuadElem>> = (0..=n_max)
            .into_par_iter()
            .map(|n| {
                let mut acc = QuadElem::from_int(d, 0);
                for l in self.field.enumerate_trace(n as i64) {
                    let c = self.fw_coefficient(&l)?;
                    if c.is_zero() {
                        continue;
                    }
                    let term = c.mul(&l.pow(-self.weight.t1)?).mul(&l.conj().pow(-self.weight.t2)?);
                    acc = acc.add(&term);
                }
                Ok(acc)
            })
            .collect();
        let coeffs = coeffs.into_iter().collect::<Result<Vec<_>>>().map_err(|e| self.rebound(e, n_max))?;
        Ok(QExpansion::new(coeffs))
    }

    fn bracket_weights(&self, n: u32) -> Vec<(u32, BigInt)> {
        let (r1, r2, n) = (self.weight.r1, self.weight.r2, n as i64);
        (0..=n)
            .map(|a1| {
                let sign = if a1 % 2 == 0 { 1 } else { -1 };
                (a1 as u32, BigInt::from(sign) * binomial(r1 + n - 1, n - a1) * binomial(r2 + n - 1, a1))
            })
            .collect()
    }

    /// `[F]_n = sum (-1)^{a1} C(r1+n-1, a2) C(r2+n-1, a1) iota^*(theta_1^{a1} theta_2^{a2} F)`.
    pub fn rankin_cohen(&self, n: u32, n_max: usize, prec: u32) -> Result<QExpansion<PadicScalar>> {
        let mut acc: Option<QExpansion<PadicScalar>> = None;
        for (a1, c) in self.bracket_weights(n) {
            if c.is_zero() {
                continue;
            }
            let g = self.theta(1, a1).theta(2, n - a1).pullback_iota(n_max, prec)?;
            let cs = PadicScalar::from_bigint(self.p, &c, prec + 16);
            let g = g.scale(&cs);
            acc = Some(match acc {
                None => g,
                Some(a) => a.add(&g),
            });
        }
        let acc = acc.unwrap_or_else(|| QExpansion::from_fn(n_max, |_| PadicScalar::zero(self.p)));
        Ok(acc.map(|c| c.truncate_abs(prec as i64)))
    }

    /// `[F]_n` computed exactly in F.
    pub fn rankin_cohen_exact(&self, n: u32, n_max: usize) -> Result<QExpansion<QuadElem>> {
        let d = self.field.d;
        let mut acc = QExpansion::from_fn(n_max, |_| QuadElem::from_int(d, 0));
        for (a1, c) in self.bracket_weights(n) {
            let g = self.theta(1, a1).theta(2, n - a1).pullback_exact(n_max)?;
            acc = acc.add(&g.scale(&QuadElem::from_rational(d, BigRational::from_integer(c))));
        }
        Ok(acc)
    }
}

/// Polynomial in `Y1, Y2` with coefficients in F.
pub type YPoly = BTreeMap<(u32, u32), QuadElem>;

/// A nearly holomorphic form: at each `lambda`, a polynomial in `Y1, Y2`
/// whose coefficients are q-expansion coefficients.
#[derive(Clone, Debug)]
pub struct NearlyFWForm {
    pub d: i64,
    pub r: (i64, i64),
    pub terms: Vec<(QuadElem, YPoly)>,
}

impl NearlyFWForm {
    /// The holomorphic form `F`, restricted to traces `<= n_max`.
    pub fn from_form(f: &FWForm, n_max: usize) -> Result<Self> {
        let mut terms = Vec::new();
        for n in 1..=n_max as i64 {
            for l in f.field.enumerate_trace(n) {
                let c = f.fw_coefficient(&l)?;
                if c.is_zero() {
                    continue;
                }
                let a = c.mul(&l.pow(-f.weight.t1)?).mul(&l.conj().pow(-f.weight.t2)?);
                terms.push((l, BTreeMap::from([((0, 0), a)])));
            }
        }
        Ok(NearlyFWForm { d: f.field.d, r: (f.weight.r1, f.weight.r2), terms })
    }

    /// `delta_i`: `f Y^m -> theta_i(f) Y^m + (r_i - m) f Y^{m+1}` in the i-th variable.
    pub fn delta(&self, i: usize) -> Self {
        let ri = if i == 1 { self.r.0 } else { self.r.1 };
        let terms = self
            .terms
            .iter()
            .map(|(l, poly)| {
                let s = if i == 1 { l.clone() } else { l.conj() };
                let mut out: YPoly = BTreeMap::new();
                for (&(m1, m2), f) in poly {
                    let m = if i == 1 { m1 } else { m2 };
                    let up = if i == 1 { (m1 + 1, m2) } else { (m1, m2 + 1) };
                    let add = |out: &mut YPoly, k: (u32, u32), v: QuadElem| {
                        let e = out.entry(k).or_insert_with(|| QuadElem::from_int(self.d, 0));
                        *e = e.add(&v);
                    };
                    add(&mut out, (m1, m2), f.mul(&s));
                    let c = ri - m as i64;
                    if c != 0 {
                        add(&mut out, up, f.scale(&BigRational::from_integer(BigInt::from(c))));
                    }
                }
                (l.clone(), out)
            })
            .collect();
        let r = if i == 1 { (self.r.0 + 2, self.r.1) } else { (self.r.0, self.r.1 + 2) };
        NearlyFWForm { d: self.d, r, terms }
    }

    /// `iota^*` with `Y1 = Y2 = Y`: coefficient `n` is a polynomial in `Y`.
    pub fn pullback(&self, n_max: usize) -> Vec<BTreeMap<u32, QuadElem>> {
        let mut out = vec![BTreeMap::new(); n_max + 1];
        for (l, poly) in &self.terms {
            let n = l.trace().to_integer().to_usize().unwrap();
            if n > n_max {
                continue;
            }
            for (&(m1, m2), f) in poly {
                let e = out[n].entry(m1 + m2).or_insert_with(|| QuadElem::from_int(self.d, 0));
                *e = e.add(f);
            }
        }
        out
    }
}

/// `[F]_n` through delta operators: each coefficient is a polynomial in `Y`.
pub fn rankin_cohen_nearly(f: &FWForm, n: u32, n_max: usize) -> Result<Vec<BTreeMap<u32, QuadElem>>> {
    let base = NearlyFWForm::from_form(f, n_max)?;
    let d = f.field.d;
    let mut acc: Vec<BTreeMap<u32, QuadElem>> = vec![BTreeMap::new(); n_max + 1];
    for (a1, c) in f.bracket_weights(n) {
        let mut g = base.clone();
        for _ in 0..n - a1 {
            g = g.delta(2);
        }
        for _ in 0..a1 {
            g = g.delta(1);
        }
        let cq = BigRational::from_integer(c);
        for (k, poly) in g.pullback(n_max).into_iter().enumerate() {
            for (deg, v) in poly {
                let e = acc[k].entry(deg).or_insert_with(|| QuadElem::from_int(d, 0));
                *e = e.add(&v.scale(&cq));
            }
        }
    }
    for poly in &mut acc {
        poly.retain(|_, v| !v.is_zero());
    }
    Ok(acc)
}
