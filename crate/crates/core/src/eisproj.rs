//! The critical-slope Eisenstein functional and the regulator built on it.
//!
//! The functional `ell` is a left eigenvector of the `U_p` matrix for the
//! critical eigenvalue `p^{k+1}`, scaled so that it takes the value 1 on the
//! critical Eisenstein series. Pairing a form with the Eisenstein class only
//! sees this projection, so `ell` is all we keep of the class.

use crate::euler::{combinatorial_constant, AsaiData, Route, SymPoly};
use crate::hilbert::FWForm;
use crate::lvalues::{eisenstein_period, DirichletChar};
use crate::ocspace::{assemble_u_matrix, certificate_r, to_padic_series, BanachBasis, UMatrix};
use crate::padic::{ppow, PadicJson, PadicScalar};
use crate::plinalg::{condition_number, left_kernel_mod, KernelVector};
use crate::qseries::{eisenstein_crit, eisenstein_level1, eta_product, QExpansion};
use crate::ring::binomial;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Extra digits carried by the basis beyond the matrix modulus.
const BASIS_SLACK: u32 = 6;

#[derive(Clone, Debug)]
pub struct EisFunctional {
    pub p: u64,
    pub k: u32,
    pub eigenvalue: BigInt,
    /// Modulus exponent of the matrix.
    pub modulus: u32,
    pub rr: usize,
    pub condition: u32,
    /// Raw left kernel vector, known modulo `p^{modulus - condition}`.
    pub kernel: KernelVector,
    /// Value of the raw kernel vector on the critical Eisenstein series.
    pub normalization: PadicScalar,
    pub ell: Vec<PadicScalar>,
    basis: Arc<BanachBasis>,
    matrix: Arc<UMatrix>,
}

/// How coordinates beyond those computed from `h` are controlled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TailPolicy {
    /// Nothing is assumed; any unseen coordinate makes the result uncertified.
    None,
    /// All coordinates past those computed vanish, e.g. for finite combinations of basis elements.
    KnownZero,
    /// `h` is a `U_p`-eigenform whose eigenvalue has this valuation. The
    /// matrix certificate then bounds every coordinate.
    UEigen { valuation: i64 },
    /// Assumed `v(b_n) >= bound` for `n > start`; never applied silently.
    Conjecture { bound: i64, start: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailReport {
    /// `(n, v_p(b_n))` for the computed coordinates.
    pub observed: Vec<(usize, Option<i64>)>,
    /// Least-squares slope of `v_p(b_n)` against `n` over the nonzero coordinates.
    pub fitted_slope: Option<f64>,
    pub policy: TailPolicy,
    pub assumes_tail_bound: bool,
    /// Lower bound for the valuation of the neglected part of the sum.
    pub tail_valuation: Option<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrecisionAudit {
    pub matrix_modulus: u32,
    pub condition: u32,
    pub functional_precision: u32,
    pub normalization_valuation: i64,
    /// Absolute precision of the computed finite sum.
    pub head_precision: i64,
    /// Bound from coordinates past the matrix window, where `ell` is only bounded.
    pub window_tail: Option<i64>,
    pub tail: Option<i64>,
    pub certified: i64,
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub value: PadicScalar,
    pub coords_used: usize,
    pub tail: TailReport,
    pub audit: PrecisionAudit,
}

/// Critical-slope Eisenstein functional for weight `k + 2` at `p`, from the
/// `U_p` matrix modulo `p^n`.
pub fn critical_functional(k: u32, chi: &DirichletChar, p: u64, n: u32) -> Result<EisFunctional> {
    if p != 3 {
        return Err(Error::Unsupported(format!("the Banach basis is only implemented for p = 3, not {p}")));
    }
    if !chi.is_trivial() || chi.modulus() != 1 {
        return Err(Error::Unsupported("only the trivial character of level 1".into()));
    }
    if k % 2 != 0 || k < 2 {
        return Err(Error::InvalidWeight(format!("k = {k} must be even and at least 2")));
    }
    let rr = certificate_r(n);
    let basis = BanachBasis::new(k + 2, BigRational::new(1.into(), 6.into()), rr, 3 * rr + 3, n + rr as u32 + BASIS_SLACK)?;
    let matrix = assemble_u_matrix(&basis, rr, n)?;
    // The window R(N) rests on v(a_ij) >= 2i and a_ij = 0 for j > 3i.
    if !matrix.structural_zero_violations().is_empty() || !matrix.valuation_violations(|i, _| 2 * i as i64).is_empty() {
        return Err(Error::NoCertificate(format!("weight {} at radius 1/6", k + 2)));
    }
    let eigenvalue = BigInt::from(p).pow(k + 1);
    let m = matrix.matrix.minus_scalar(&eigenvalue);
    let rep = condition_number(&m, &BigInt::zero())?;
    if rep.condition >= n {
        return Err(Error::InsufficientPrecision { needed: rep.condition as i64 + 1, have: n as i64 });
    }
    let kernel = left_kernel_mod(&m, n - rep.condition)?;

    let ecrit = eisenstein_crit(k, chi, p, basis.trunc)?;
    let coords = basis.coords_from_qexp(&to_padic_series(&ecrit, basis.prec), rr)?;
    let w = kernel.to_padic();
    let normalization = dot(&w, &coords.coords, p);
    if normalization.is_zero() {
        return Err(Error::PrecisionExhausted("the left eigenvector vanishes on E_crit at working precision".into()));
    }
    let ell = w.iter().map(|x| x.div(&normalization)).collect::<Result<Vec<_>>>()?;
    Ok(EisFunctional {
        p,
        k,
        eigenvalue,
        modulus: n,
        rr,
        condition: rep.condition,
        kernel,
        normalization,
        ell,
        basis: Arc::new(basis),
        matrix: Arc::new(matrix),
    })
}

fn dot(a: &[PadicScalar], b: &[PadicScalar], p: u64) -> PadicScalar {
    a.iter().zip(b).fold(PadicScalar::zero(p), |acc, (x, y)| acc.add(&x.mul(y)))
}

fn min_valuation(xs: &[PadicScalar]) -> Option<i64> {
    xs.iter().filter_map(|x| x.valuation()).min()
}

/// Valuation lower bound, falling back on the absolute precision for unknown zeros.
fn floor_val(x: &PadicScalar) -> i64 {
    x.valuation().or_else(|| x.abs_prec()).unwrap_or(i64::MAX)
}

impl EisFunctional {
    pub fn functional_precision(&self) -> u32 {
        self.kernel.prec
    }

    pub fn basis(&self) -> &BanachBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &UMatrix {
        &self.matrix
    }

    fn lambda_valuation(&self) -> i64 {
        self.k as i64 + 1
    }

    /// Lower bound for `v(ell_i)` when `i` lies past the matrix window.
    pub fn ell_tail_bound(&self, i: usize) -> i64 {
        let head = min_valuation(&self.ell).unwrap_or(0);
        2 * i.div_ceil(3) as i64 - self.lambda_valuation() + head
    }

    /// Smallest valuation of `w (A - lambda)` modulo `p^N`, or `None` if it vanishes.
    pub fn eigen_residual_valuation(&self) -> Option<u32> {
        let m = ppow(self.p, self.modulus);
        let at = self.matrix.matrix.transpose().minus_scalar(&self.eigenvalue).apply(&self.kernel.entries);
        at.iter()
            .map(|x| x.mod_floor(&m))
            .filter(|x| !x.is_zero())
            .map(|x| crate::padic::vp(self.p, &x))
            .min()
    }

    /// `sum ell_i y_i` over the given head coordinates.
    pub fn apply_coords(&self, y: &[PadicScalar]) -> PadicScalar {
        dot(&self.ell, y, self.p)
    }

    /// Coordinates of `h` against `b_1, ..., b_count`, widening the basis if needed.
    pub fn coordinates(&self, h: &QExpansion<PadicScalar>, count: usize) -> Result<Vec<PadicScalar>> {
        if count <= self.basis.size {
            return Ok(self.basis.coords_from_qexp(h, count)?.coords);
        }
        let wide = BanachBasis::new(self.k + 2, self.basis.radius.clone(), count, count, self.basis.prec + count as u32)?;
        Ok(wide.coords_from_qexp(h, count)?.coords)
    }

    /// `ell(h)`, the `q`-coefficient of the critical-slope Eisenstein projection of `h`.
    pub fn project(&self, h: &QExpansion<PadicScalar>, policy: &TailPolicy) -> Result<Projection> {
        if h.trusted() < self.rr {
            return Err(Error::InsufficientTruncation { needed: self.rr, have: h.trusted() });
        }
        let span = match policy {
            TailPolicy::Conjecture { start, .. } => {
                if h.trusted() < *start {
                    return Err(Error::InsufficientTruncation { needed: *start, have: h.trusted() });
                }
                (*start).max(self.rr)
            }
            _ => self.rr,
        };
        let y = self.coordinates(h, span)?;
        let head = self.apply_coords(&y[..self.rr]);
        let head_precision = head.abs_prec().unwrap_or(i64::MAX);

        // ell is only bounded past the window, so those terms are error, not value.
        let window_tail = y[self.rr..].iter().enumerate().map(|(i, yi)| self.ell_tail_bound(self.rr + 1 + i) + floor_val(yi)).min();

        let ymin = min_valuation(&y).unwrap_or(0);
        let tail = match policy {
            TailPolicy::None => {
                return Err(Error::TailUnbounded(format!(
                    "coordinates past b_{span} are unknown and no tail policy was given"
                )))
            }
            TailPolicy::KnownZero => None,
            TailPolicy::UEigen { valuation } => {
                let i = span + 1;
                Some(self.ell_tail_bound(i) + 2 * i as i64 - valuation + ymin)
            }
            TailPolicy::Conjecture { bound, .. } => Some(self.ell_tail_bound(span + 1) + bound),
        };
        let certified = [Some(head_precision), window_tail, tail].into_iter().flatten().min().unwrap();
        let value = head.truncate_abs(certified);
        let observed: Vec<(usize, Option<i64>)> = y.iter().enumerate().map(|(i, c)| (i + 1, c.valuation())).collect();
        let tail_report = TailReport {
            fitted_slope: fit_slope(&observed),
            observed,
            policy: policy.clone(),
            assumes_tail_bound: matches!(policy, TailPolicy::Conjecture { .. }),
            tail_valuation: tail,
        };
        let audit = PrecisionAudit {
            matrix_modulus: self.modulus,
            condition: self.condition,
            functional_precision: self.functional_precision(),
            normalization_valuation: self.normalization.valuation().unwrap_or(0),
            head_precision,
            window_tail,
            tail,
            certified,
        };
        Ok(Projection { value, coords_used: span, tail: tail_report, audit })
    }

    /// Diagnostic: `ell` on `theta^{k+1}(Delta / E_6^3)`, an explicit image
    /// of `theta^{k+1}` from weight `-k` when `k = 6`. Reported, never asserted.
    pub fn theta_image_diagnostic(&self) -> Result<ThetaDiagnostic> {
        if self.k != 6 {
            return Err(Error::Unsupported("the theta-image diagnostic is built for k = 6".into()));
        }
        let t = self.basis.trunc;
        let delta = eta_product(&[(1, 24)], t)?;
        let e6 = eisenstein_level1(6, t)?;
        let g = delta.mul(&e6.pow(3).inverse()?).truncate(t);
        let h = to_padic_series(&g.theta_pow(self.k + 1), self.basis.prec);
        let c = self.basis.coords_from_qexp(&h, self.rr)?;
        Ok(ThetaDiagnostic {
            value: self.apply_coords(&c.coords).to_json(),
            residual_valuation: c.residual_valuation,
            coordinate_valuations: c.coords.iter().map(|x| x.valuation()).collect(),
        })
    }

    pub fn summary(&self) -> FunctionalSummary {
        FunctionalSummary {
            p: self.p,
            k: self.k,
            eigenvalue: self.eigenvalue.to_string(),
            modulus: self.modulus,
            window: self.rr,
            condition: self.condition,
            precision: self.functional_precision(),
            kernel: self.kernel.entries.iter().map(|x| x.to_string()).collect(),
            normalization: self.normalization.to_json(),
            ell: self.ell.iter().map(|x| x.to_json()).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaDiagnostic {
    pub value: PadicJson,
    pub residual_valuation: Option<i64>,
    pub coordinate_valuations: Vec<Option<i64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FunctionalSummary {
    pub p: u64,
    pub k: u32,
    pub eigenvalue: String,
    pub modulus: u32,
    pub window: usize,
    pub condition: u32,
    pub precision: u32,
    pub kernel: Vec<String>,
    pub normalization: PadicJson,
    pub ell: Vec<PadicJson>,
}

fn fit_slope(points: &[(usize, Option<i64>)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter_map(|&(n, v)| v.map(|v| (n as f64, v as f64))).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / k, sy / k);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Coefficients `c_a` of `X^a Y^{n-a}` in the bracket polynomial
/// `P = sum (-1)^a C(r1+n-1, n-a) C(r2+n-1, a) X^a Y^{n-a}`.
pub fn bracket_polynomial(r1: i64, r2: i64, n: u32) -> SymPoly {
    let n = n as i64;
    let mut acc = SymPoly::zero(2);
    for a in 0..=n {
        let sign = if a % 2 == 0 { 1 } else { -1 };
        let c = BigInt::from(sign) * binomial(r1 + n - 1, n - a) * binomial(r2 + n - 1, a);
        let mut m = SymPoly::monomial(2, &[(0, a as u32), (1, (n - a) as u32)], 1);
        m = m.mul(&SymPoly::constant_big(2, c));
        acc = acc.add(&m);
    }
    acc
}

/// `P(X, -X) = (-1)^n C(t-2, n) X^n` with `t = r1 + r2 + 2n`, in the symbolic ring.
pub fn bracket_identity_holds(r1: i64, r2: i64, n: u32) -> bool {
    let p = bracket_polynomial(r1, r2, n);
    let x = SymPoly::var(1, 0);
    let lhs = p.eval(&[x.clone(), x.neg()]);
    let sign = if n % 2 == 0 { 1 } else { -1 };
    let t = r1 + r2 + 2 * n as i64;
    let rhs = SymPoly::constant_big(1, BigInt::from(sign) * binomial(t - 2, n as i64)).mul(&x.pow(n));
    lhs.sub(&rhs).is_zero()
}

/// Factor turning `[G]_n` into `(-1)^j Pi^oc iota^* delta_1^n G` for `G` of
/// weight `(r1, r2)`, read off from the bracket polynomial at `Y = -X`.
pub fn delta_to_bracket(r1: i64, r2: i64, n: u32, j: i64) -> Result<BigRational> {
    let p = bracket_polynomial(r1, r2, n);
    let one = BigInt::one();
    let s: BigInt = p.terms().iter().map(|(e, c)| if (e[1] % 2) == 0 { c.clone() } else { -c }).sum();
    if s.is_zero() {
        return Err(Error::IdentityFailure(format!("P(1, -1) vanishes for weight ({r1}, {r2}), n = {n}")));
    }
    let sign = if j % 2 == 0 { one } else { -one };
    Ok(BigRational::new(sign, s))
}

#[derive(Clone, Debug)]
pub struct RegulatorOptions {
    /// Pullback coefficients to compute.
    pub n_coeffs: usize,
    /// Absolute precision of the pullback coefficients.
    pub prec: u32,
    pub tail: TailPolicy,
    /// Also emit the period-normalized product.
    pub period: bool,
}

impl RegulatorOptions {
    pub fn new(n_coeffs: usize, tail: TailPolicy) -> Self {
        RegulatorOptions { n_coeffs, prec: 30 + n_coeffs as u32, tail, period: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegulatorReport {
    pub route: Route,
    pub j: i64,
    pub k: [i64; 2],
    pub bracket_order: u32,
    pub euler: PadicJson,
    pub combinatorial: String,
    pub prefactor: PadicJson,
    /// Constant applied to the bracket before projection (1 for both depletions).
    pub bracket_constant: String,
    /// `ell` of the projected form, unit-normalized.
    pub projection: PadicJson,
    pub raw_product: PadicJson,
    pub period: Option<PadicJson>,
    pub period_normalized: Option<PadicJson>,
    pub licences: Vec<String>,
    pub history: Vec<String>,
    pub tail: TailReport,
    pub audit: PrecisionAudit,
}

/// Regulator of the Asai-Flach class of `f` at twist `j` along `route`.
pub fn regulator(
    f: &FWForm,
    asai: &AsaiData,
    ell: &EisFunctional,
    j: i64,
    route: Route,
    opts: &RegulatorOptions,
) -> Result<RegulatorReport> {
    let [k1, k2] = asai.k;
    if f.weight.r1 - 2 != k1 || f.weight.r2 - 2 != k2 {
        return Err(Error::InvalidWeight(format!("form weight {} does not match Euler data k = ({k1}, {k2})", f.weight)));
    }
    if j < 0 || j > k1.min(k2) {
        return Err(Error::InvalidInput(format!("j = {j} must lie in [0, {}]", k1.min(k2))));
    }
    if k1 + k2 - 2 * j != ell.k as i64 {
        return Err(Error::InvalidWeight(format!("functional has k = {}, need {}", ell.k, k1 + k2 - 2 * j)));
    }
    let pre = asai.prefactor(j, route)?;
    let n = (k1 - j) as u32;
    let (g, constant) = match route {
        Route::TheoremB => (f.deplete(&[0, 1]).theta1_inverse()?, BigRational::one()),
        Route::RegAE1 => {
            let g = f.deplete(&[0]).theta1_inverse()?;
            let c = delta_to_bracket(g.weight.r1, g.weight.r2, n, j)?;
            (g, c)
        }
    };
    let h = g.rankin_cohen(n, opts.n_coeffs, opts.prec)?;
    let h = h.scale(&PadicScalar::from_rational(f.p, &constant, opts.prec + 8));
    let proj = ell.project(&h, &opts.tail)?;
    let raw = pre.value.mul(&proj.value);
    let (period, normalized) = if opts.period {
        let c = eisenstein_period(ell.k, &DirichletChar::trivial(1), f.p, opts.prec)?;
        let nz = raw.mul(&c);
        (Some(c.to_json()), Some(nz.to_json()))
    } else {
        (None, None)
    };
    Ok(RegulatorReport {
        route,
        j,
        k: [k1, k2],
        bracket_order: n,
        euler: pre.euler.to_json(),
        combinatorial: pre.combinatorial.to_string(),
        prefactor: pre.value.to_json(),
        bracket_constant: constant.to_string(),
        projection: proj.value.to_json(),
        raw_product: raw.to_json(),
        period,
        period_normalized: normalized,
        licences: g.licence.iter().map(|l| format!("{l:?}")).collect(),
        history: g.history.clone(),
        tail: proj.tail,
        audit: proj.audit,
    })
}

/// Product of the route's combinatorial constant and its bracket constant.
/// The two routes agree exactly when this is route-independent.
pub fn route_total_constant(k1: i64, k2: i64, j: i64, route: Route) -> Result<BigRational> {
    let c = combinatorial_constant(k1, k2, j, route);
    match route {
        Route::TheoremB => Ok(c),
        // Theta_1^{-1} F has weight (-k1, k2 + 2)
        Route::RegAE1 => Ok(c * delta_to_bracket(-k1, k2 + 2, (k1 - j) as u32, j)?),
    }
}

/// Pullback of `Theta_1^{-1}` of the `p1`-depletion minus that of the
/// double depletion. It is supported on coefficients prime to `p`.
pub fn depletion_difference(f: &FWForm, n_max: usize, prec: u32) -> Result<QExpansion<PadicScalar>> {
    let a = f.deplete(&[0]).theta1_inverse()?.pullback_iota(n_max, prec)?;
    let b = f.deplete(&[0, 1]).theta1_inverse()?.pullback_iota(n_max, prec)?;
    Ok(a.sub(&b))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RouteConsistency {
    pub single: PadicJson,
    pub double: PadicJson,
    pub shared_precision: i64,
    pub agree: bool,
}

/// `ell` of both depletions' pullbacks, at `j = k1 = 0`.
pub fn route_consistency(f: &FWForm, ell: &EisFunctional, n_coeffs: usize, prec: u32, tail: &TailPolicy) -> Result<RouteConsistency> {
    let a = f.deplete(&[0]).theta1_inverse()?.pullback_iota(n_coeffs, prec)?;
    let b = f.deplete(&[0, 1]).theta1_inverse()?.pullback_iota(n_coeffs, prec)?;
    let (x, y) = (ell.project(&a, tail)?, ell.project(&b, tail)?);
    let shared = x.audit.certified.min(y.audit.certified);
    let agree = x.value.sub(&y.value).truncate_abs(shared).is_zero();
    Ok(RouteConsistency { single: x.value.to_json(), double: y.value.to_json(), shared_precision: shared, agree })
}
