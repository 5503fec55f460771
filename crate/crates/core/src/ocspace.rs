//! Overconvergent 3-adic cusp forms of level 1 in the Kolberg basis
//! `b_n = 3^{floor(6rn)} g^n E_k^ord`, the matrix of `U(3)`, its
//! rational generating function, and slope data.

use crate::error::{Error, Result};
use crate::padic::{newton_converge, ppow, PadicScalar};
use crate::plinalg::{char_coeffs, kernel_mod, slope_dimension, KernelVector, NewtonPolygon, PMatrix, SlopeCensus};
use crate::qseries::{eisenstein_ord, kolberg_g, QExpansion};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const P: u64 = 3;

/// The Kolberg basis, held as the unscaled series `g^n E_k^ord` for `0 <= n <= size`.
#[derive(Clone, Debug)]
pub struct BanachBasis {
    pub k: u32,
    pub radius: BigRational,
    pub size: usize,
    pub trunc: usize,
    pub prec: u32,
    unscaled: Vec<QExpansion<PadicScalar>>,
}

/// Coordinates `y_1..y_R` of a series, plus what is left over beyond `q^R`.
#[derive(Clone, Debug)]
pub struct Coordinates {
    pub coords: Vec<PadicScalar>,
    /// Smallest valuation among the residual coefficients `R < n <= checked`.
    pub residual_valuation: Option<i64>,
    pub checked: usize,
}

fn padic_of(x: &BigRational, abs: u32) -> PadicScalar {
    PadicScalar::from_rational_abs(P, x, abs as i64)
}

impl BanachBasis {
    /// `k` even >= 4, `0 <= r < 3/4`; series kept to `q^trunc` modulo `3^prec`.
    pub fn new(k: u32, radius: BigRational, size: usize, trunc: usize, prec: u32) -> Result<Self> {
        if radius.is_negative() || radius >= BigRational::new(3.into(), 4.into()) {
            return Err(Error::InvalidInput("radius must lie in [0, 3/4)".into()));
        }
        if trunc < size {
            return Err(Error::InsufficientTruncation { needed: size, have: trunc });
        }
        let g = kolberg_g(trunc).map(|c| padic_of(c, prec));
        let e = eisenstein_ord(k, P, trunc)?.map(|c| padic_of(c, prec));
        let mut unscaled = Vec::with_capacity(size + 1);
        unscaled.push(e);
        for n in 1..=size {
            let next = unscaled[n - 1].mul(&g).truncate(trunc);
            unscaled.push(next);
        }
        Ok(BanachBasis { k, radius, size, trunc, prec, unscaled })
    }

    /// Weight 8, `r = 1/6`.
    pub fn kolberg(size: usize, trunc: usize, prec: u32) -> Result<Self> {
        Self::new(8, BigRational::new(1.into(), 6.into()), size, trunc, prec)
    }

    /// `floor(6 r n)`.
    pub fn exponent(&self, n: usize) -> i64 {
        (&self.radius * BigRational::from_integer(BigInt::from(6 * n))).floor().to_integer().to_i64().unwrap()
    }

    pub fn unscaled(&self, n: usize) -> &QExpansion<PadicScalar> {
        &self.unscaled[n]
    }

    pub fn element(&self, n: usize) -> QExpansion<PadicScalar> {
        let e = self.exponent(n);
        self.unscaled[n].map(|c| c.shift(e))
    }

    /// Coordinates against `g^i E` for `1 <= i <= rr` by forward substitution.
    fn solve_unscaled(&self, f: &QExpansion<PadicScalar>, rr: usize) -> Result<(Vec<PadicScalar>, Vec<PadicScalar>)> {
        if rr > self.size {
            return Err(Error::InvalidInput(format!("basis has only {} elements", self.size)));
        }
        if f.trusted() < rr {
            return Err(Error::InsufficientTruncation { needed: rr, have: f.trusted() });
        }
        if !f.coeff(0).unwrap().is_zero() {
            return Err(Error::NotCuspidal);
        }
        let len = f.trusted().min(self.trunc);
        let mut rem: Vec<PadicScalar> = f.coeffs()[..=len].to_vec();
        let mut x = Vec::with_capacity(rr);
        for i in 1..=rr {
            let xi = rem[i].clone();
            if !xi.is_exact_zero() {
                let u = self.unscaled[i].coeffs();
                for n in i..=len {
                    if !u[n].is_exact_zero() {
                        rem[n] = rem[n].sub(&xi.mul(&u[n]));
                    }
                }
            }
            x.push(xi);
        }
        Ok((x, rem))
    }

    pub fn coords_from_qexp(&self, f: &QExpansion<PadicScalar>, rr: usize) -> Result<Coordinates> {
        let (x, rem) = self.solve_unscaled(f, rr)?;
        let coords = x.iter().enumerate().map(|(i, xi)| xi.shift(-self.exponent(i + 1))).collect();
        let residual_valuation = rem.iter().skip(rr + 1).filter_map(|c| c.valuation()).min();
        Ok(Coordinates { coords, residual_valuation, checked: rem.len() - 1 })
    }

    /// `sum y_i b_i`, trusted to the basis truncation.
    pub fn qexp_from_coords(&self, coords: &[PadicScalar]) -> QExpansion<PadicScalar> {
        let mut acc = QExpansion::from_fn(self.trunc, |_| PadicScalar::zero(P));
        for (i, y) in coords.iter().enumerate() {
            if y.is_exact_zero() {
                continue;
            }
            let c = y.shift(self.exponent(i + 1));
            acc = acc.add(&self.unscaled[i + 1].scale(&c));
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Assembled,
    Oracle,
}

/// The `R x R` window of `U(3)` modulo `3^N`, indices shifted by one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UMatrix {
    pub matrix: PMatrix,
    pub r: usize,
    pub n: u32,
    pub provenance: Provenance,
}

/// `R(N) = 3 ceil(N/2) - 3`: entries outside the window vanish modulo `3^N`.
pub fn certificate_r(n: u32) -> usize {
    (3 * n.div_ceil(2) as usize).saturating_sub(3)
}

/// Entry `(i, j)` is the coefficient of `b_i` in `U(b_j)`.
pub fn assemble_u_matrix(basis: &BanachBasis, rr: usize, n: u32) -> Result<UMatrix> {
    if basis.trunc < 3 * rr {
        return Err(Error::InsufficientTruncation { needed: 3 * rr, have: basis.trunc });
    }
    if (basis.prec as usize) < n as usize + rr {
        return Err(Error::InsufficientPrecision { needed: n as i64 + rr as i64, have: basis.prec as i64 });
    }
    let m = ppow(P, n);
    let cols: Vec<Result<Vec<BigInt>>> = (1..=rr)
        .into_par_iter()
        .map(|j| {
            let image = basis.unscaled(j).u_op(P as usize);
            let (x, _) = basis.solve_unscaled(&image, rr)?;
            x.iter()
                .enumerate()
                .map(|(i0, c)| {
                    let shift = basis.exponent(j) - basis.exponent(i0 + 1);
                    let a = c.shift(shift);
                    if a.is_zero() && a.abs_prec().is_some_and(|ap| ap < n as i64) {
                        return Err(Error::InsufficientPrecision { needed: n as i64, have: a.abs_prec().unwrap() });
                    }
                    Ok(a.truncate_abs(n as i64).residue(n)?.mod_floor(&m))
                })
                .collect()
        })
        .collect();
    let mut matrix = PMatrix::zeros(P, n, rr, rr);
    for (j0, col) in cols.into_iter().enumerate() {
        for (i0, a) in col?.into_iter().enumerate() {
            matrix.set(i0, j0, a);
        }
    }
    Ok(UMatrix { matrix, r: rr, n, provenance: Provenance::Assembled })
}

/// The nonzero entries of `A mod 3^10` for weight 8 and `r = 1/6`, as printed
/// in the literature: `((i, j), a_ij)`.
pub const PUBLISHED_BLOCK_MOD_3_10: [((usize, usize), i64); 18] = [
    ((1, 1), 48087),
    ((1, 2), 21195),
    ((1, 3), 9),
    ((2, 1), 4374),
    ((2, 2), 52488),
    ((2, 3), 51030),
    ((2, 4), 8019),
    ((2, 5), 14580),
    ((2, 6), 81),
    ((3, 3), 39366),
    ((3, 5), 6561),
    ((3, 6), 6561),
    ((3, 7), 15309),
    ((3, 8), 21870),
    ((3, 9), 729),
    ((4, 10), 39366),
    ((4, 11), 39366),
    ((4, 12), 6561),
];

/// Numerator of the generating function `sum_{i,j>=0} a_ij X^i Y^j`.
const GENFUN_NUM: [((usize, usize), i64); 12] = [
    ((0, 0), 1093),
    ((1, 0), 2106),
    ((2, 0), -2187),
    ((1, 1), -230580),
    ((2, 1), -34222176),
    ((1, 2), -40068),
    ((3, 1), -2449943010),
    ((2, 2), -5959575),
    ((4, 1), -48920206932),
    ((3, 2), -304338546),
    ((5, 1), -282300396318),
    ((4, 2), -1742595039),
];
/// Denominator factors `(1093 + 2106X - 2187X^2)` and the two-variable one.
const GENFUN_DEN_X: [i64; 3] = [1093, 2106, -2187];
const GENFUN_DEN_XY: [((usize, usize), i64); 6] =
    [((1, 1), -270), ((2, 1), -8748), ((1, 2), -108), ((3, 1), -59049), ((2, 2), -729), ((1, 3), -9)];

/// All `a_ij mod 3^N` for `0 <= i, j <= size`, from the rational generating
/// function for weight 8 and `r = 1/6`.
pub fn genfun_table(size: usize, n: u32) -> Vec<Vec<BigInt>> {
    let m = ppow(P, n);
    let mut s = vec![vec![BigInt::zero(); size + 1]; size + 1];
    for &((i, j), c) in &GENFUN_NUM {
        if i <= size && j <= size {
            s[i][j] = BigInt::from(c).mod_floor(&m);
        }
    }
    // divide by the XY factor (constant term 1)
    let mut t = vec![vec![BigInt::zero(); size + 1]; size + 1];
    for i in 0..=size {
        for j in 0..=size {
            let mut acc = s[i][j].clone();
            for &((a, b), c) in &GENFUN_DEN_XY {
                if i >= a && j >= b {
                    acc -= BigInt::from(c) * &t[i - a][j - b];
                }
            }
            t[i][j] = acc.mod_floor(&m);
        }
    }
    // divide by the X factor; 1093 is a 3-adic unit
    let inv = crate::padic::mod_inverse(&BigInt::from(GENFUN_DEN_X[0]), &m).unwrap();
    let mut u = vec![vec![BigInt::zero(); size + 1]; size + 1];
    for j in 0..=size {
        for i in 0..=size {
            let mut acc = t[i][j].clone();
            for a in 1..=2 {
                if i >= a {
                    acc -= BigInt::from(GENFUN_DEN_X[a]) * &u[i - a][j];
                }
            }
            u[i][j] = (acc * &inv).mod_floor(&m);
        }
    }
    u
}

pub fn genfun_oracle(i: usize, j: usize, n: u32) -> BigInt {
    genfun_table(i.max(j), n)[i][j].clone()
}

impl UMatrix {
    pub fn from_genfun(rr: usize, n: u32) -> Self {
        let t = genfun_table(rr, n);
        let matrix = PMatrix::from_fn(P, n, rr, rr, |i, j| t[i + 1][j + 1].clone());
        UMatrix { matrix, r: rr, n, provenance: Provenance::Oracle }
    }

    /// `a_ij` with 1-based indices.
    pub fn entry(&self, i: usize, j: usize) -> &BigInt {
        self.matrix.get(i - 1, j - 1)
    }

    /// Pairs `(i, j)` violating `a_ij = 0` for `j > 3i`.
    pub fn structural_zero_violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 1..=self.r {
            for j in (3 * i + 1)..=self.r {
                if !self.entry(i, j).is_zero() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Pairs `(i, j)` violating `v(a_ij) >= min(bound(i, j), N)`.
    pub fn valuation_violations(&self, bound: impl Fn(usize, usize) -> i64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 1..=self.r {
            for j in 1..=self.r {
                let v = self.matrix.val(i - 1, j - 1).map(|v| v as i64).unwrap_or(self.n as i64);
                if v < bound(i, j).min(self.n as i64) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Coordinates of column vector `A x`.
    /// `((i, j), a_ij)` for every entry that is nonzero modulo `p^N`, row-major.
    pub fn nonzero_entries(&self) -> Vec<((usize, usize), BigInt)> {
        let mut out = vec![];
        for i in 1..=self.r {
            for j in 1..=self.r {
                let a = self.entry(i, j);
                if !a.is_zero() {
                    out.push(((i, j), a.clone()));
                }
            }
        }
        out
    }

    pub fn apply(&self, x: &[BigInt]) -> Vec<BigInt> {
        self.matrix.apply(x)
    }

    /// Lower bound for `v(c_r)` of the full operator: `r(r+1)` from the row
    /// bound, and `N(r - R)` past the window.
    pub fn coefficient_lower_bound(&self, r: usize) -> i64 {
        let row = (r * (r + 1)) as i64;
        let tail = if r > self.r { self.n as i64 * (r - self.r) as i64 } else { 0 };
        row.max(tail)
    }

    /// `c_0..c_R` of `det(1 - tA)` modulo `3^N`.
    pub fn char_coeffs(&self) -> Vec<BigInt> {
        char_coeffs(&self.matrix, self.r)
    }

    pub fn newton_polygon(&self) -> NewtonPolygon {
        NewtonPolygon::new(P, self.n, &self.char_coeffs(), |r| self.coefficient_lower_bound(r))
    }

    /// Dimension of the slope `<= slope` subspace, certified against the bounds above.
    pub fn slope_leq(&self, slope: i64) -> SlopeCensus {
        let poly = self.newton_polygon();
        let horizon = self.r + 2 * slope.max(0) as usize + 2;
        slope_dimension(&poly, slope, horizon, |r| self.coefficient_lower_bound(r))
    }

    /// The eigenvalue near `approx`, by Newton iteration on `det(1 - tA)` at
    /// `t = 1/lambda`; precision is limited by the unknown high coefficients.
    pub fn refine_eigenvalue(&self, approx: &BigRational) -> Result<PadicScalar> {
        let coeffs: Vec<PadicScalar> = self
            .char_coeffs()
            .iter()
            .enumerate()
            .map(|(r, c)| {
                if c.is_zero() {
                    PadicScalar::zero_mod(P, self.coefficient_lower_bound(r).max(self.n as i64))
                } else {
                    PadicScalar::from_residue(P, c, self.n)
                }
            })
            .collect();
        let t0 = padic_of(&approx.recip(), self.n + 8);
        let vt = t0.valuation().unwrap_or(0);
        // neglected terms r > R contribute at least lower(r) + r v(t)
        let tail = (self.r + 1..self.r + 64).map(|r| self.coefficient_lower_bound(r) + r as i64 * vt).min().unwrap();
        let eval = |t: &PadicScalar| {
            let mut acc = PadicScalar::zero_mod(P, tail);
            for c in coeffs.iter().rev() {
                acc = acc.mul(t).add(c);
            }
            acc
        };
        let deriv = |t: &PadicScalar| {
            let mut acc = PadicScalar::zero(P);
            for (r, c) in coeffs.iter().enumerate().skip(1).rev() {
                acc = acc.mul(t).add(&c.scale_by(r as i64));
            }
            acc
        };
        let t = newton_converge(t0, eval, deriv)?;
        t.inv()
    }

    /// Kernel of `A - lambda` modulo `3^target`.
    pub fn eigenvector(&self, lambda: &BigInt, target: u32) -> Result<KernelVector> {
        kernel_mod(&self.matrix.minus_scalar(lambda), target)
    }
}

impl PadicScalar {
    fn scale_by(&self, k: i64) -> Self {
        self.mul(&PadicScalar::from_i64(P, k, self.spare_prec()))
    }
}

/// Residues `x_i mod 3^n` of p-adic coordinates.
pub fn coords_residues(coords: &[PadicScalar], n: u32) -> Result<Vec<BigInt>> {
    coords.iter().map(|c| c.truncate_abs(n as i64).residue(n)).collect()
}

/// Convenience: a series with p-adic coefficients from an exact one.
pub fn to_padic_series(f: &QExpansion<BigRational>, prec: u32) -> QExpansion<PadicScalar> {
    f.map(|c| padic_of(c, prec))
}

/// The constant series 1 known to `q^t`, for building test forms.
pub fn one_series(t: usize, prec: u32) -> QExpansion<PadicScalar> {
    QExpansion::from_fn(t, |n| if n == 0 { PadicScalar::from_i64(P, 1, prec) } else { PadicScalar::zero(P) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn certificate_values() {
        assert_eq!(certificate_r(10), 12);
        assert_eq!(certificate_r(20), 27);
    }

    #[test]
    fn coords_of_basis_vector() {
        let b = BanachBasis::kolberg(6, 18, 30).unwrap();
        let c = b.coords_from_qexp(&b.element(2), 6).unwrap();
        for (i, x) in c.coords.iter().enumerate() {
            let want = if i == 1 { 1 } else { 0 };
            assert_eq!(x, &PadicScalar::from_i64(P, want, 20), "coordinate {}", i + 1);
        }
    }

    #[test]
    fn genfun_origin_and_corner() {
        assert_eq!(genfun_oracle(0, 0, 10), BigInt::one());
        assert_eq!(genfun_oracle(1, 1, 10), BigInt::from(48087));
    }

    #[test]
    fn paper_block_mod_3_10() {
        let b = BanachBasis::kolberg(12, 36, 24).unwrap();
        let a = assemble_u_matrix(&b, 12, 10).unwrap();
        assert_eq!(a.entry(1, 1), &BigInt::from(48087));
        assert_eq!(a.entry(2, 4), &BigInt::from(8019));
        assert_eq!(a.entry(4, 12), &BigInt::from(6561));
        assert_eq!(a, UMatrix { provenance: Provenance::Assembled, ..UMatrix::from_genfun(12, 10) });
        let got: Vec<((usize, usize), i64)> = a.nonzero_entries().into_iter().map(|(ij, x)| (ij, x.to_i64().unwrap())).collect();
        assert_eq!(got, PUBLISHED_BLOCK_MOD_3_10.to_vec());
    }
}
