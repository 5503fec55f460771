//! Linear algebra over `Z/p^N`: Smith normal form, kernels, characteristic
//! coefficients and Newton polygons.

use crate::error::{Error, Result};
use crate::padic::{mod_inverse, ppow, vp, PadicScalar};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Dense matrix of residues modulo `p^n`, stored row-major in `[0, p^n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PMatrix {
    pub p: u64,
    pub n: u32,
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigInt>,
}

impl PMatrix {
    pub fn zeros(p: u64, n: u32, rows: usize, cols: usize) -> Self {
        PMatrix { p, n, rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(p: u64, n: u32, size: usize) -> Self {
        let mut m = Self::zeros(p, n, size, size);
        for i in 0..size {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_fn(p: u64, n: u32, rows: usize, cols: usize, f: impl Fn(usize, usize) -> BigInt) -> Self {
        let mut m = Self::zeros(p, n, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn modulus(&self) -> BigInt {
        ppow(self.p, self.n)
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: BigInt) {
        let m = self.modulus();
        self.data[i * self.cols + j] = x.mod_floor(&m);
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Valuation of an entry, `None` when it vanishes mod `p^n`.
    pub fn val(&self, i: usize, j: usize) -> Option<u32> {
        let x = self.get(i, j);
        if x.is_zero() {
            None
        } else {
            Some(vp(self.p, x))
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.p, self.n, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// Reduce to a smaller modulus `p^n`.
    pub fn reduce(&self, n: u32) -> Self {
        assert!(n <= self.n);
        Self::from_fn(self.p, n, self.rows, self.cols, |i, j| self.get(i, j).clone())
    }

    /// Top-left `r x c` block.
    pub fn block(&self, r: usize, c: usize) -> Self {
        Self::from_fn(self.p, self.n, r, c, |i, j| self.get(i, j).clone())
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        let mut out = Self::zeros(self.p, self.n.min(o.n), self.rows, o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc = BigInt::zero();
                for k in 0..self.cols {
                    acc += self.get(i, k) * o.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn apply(&self, v: &[BigInt]) -> Vec<BigInt> {
        let m = self.modulus();
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(BigInt::zero(), |acc, (a, b)| acc + a * b).mod_floor(&m))
            .collect()
    }

    /// `M - lambda * I` for a square matrix.
    pub fn minus_scalar(&self, lambda: &BigInt) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            let x = out.get(i, i) - lambda;
            out.set(i, i, x);
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row_a -= f * row_b
    fn row_axpy(&mut self, a: usize, b: usize, f: &BigInt, m: &BigInt) {
        for j in 0..self.cols {
            let x = (&self.data[a * self.cols + j] - f * &self.data[b * self.cols + j]).mod_floor(m);
            self.data[a * self.cols + j] = x;
        }
    }

    /// col_a -= f * col_b
    fn col_axpy(&mut self, a: usize, b: usize, f: &BigInt, m: &BigInt) {
        for i in 0..self.rows {
            let x = (&self.data[i * self.cols + a] - f * &self.data[i * self.cols + b]).mod_floor(m);
            self.data[i * self.cols + a] = x;
        }
    }

    fn scale_row(&mut self, a: usize, f: &BigInt, m: &BigInt) {
        for j in 0..self.cols {
            let x = (&self.data[a * self.cols + j] * f).mod_floor(m);
            self.data[a * self.cols + j] = x;
        }
    }

    /// Determinant modulo p, used to certify invertibility of transforms.
    pub fn det_mod_p(&self) -> u64 {
        assert_eq!(self.rows, self.cols);
        let p = BigInt::from(self.p);
        let mut a: Vec<Vec<BigInt>> = (0..self.rows).map(|i| self.row(i).iter().map(|x| x.mod_floor(&p)).collect()).collect();
        let mut det = BigInt::one();
        let n = self.rows;
        for c in 0..n {
            let Some(r) = (c..n).find(|&r| !a[r][c].is_zero()) else { return 0 };
            if r != c {
                a.swap(r, c);
                det = -det;
            }
            det = (det * &a[c][c]).mod_floor(&p);
            let inv = mod_inverse(&a[c][c], &p).unwrap();
            for r in c + 1..n {
                let f = (&a[r][c] * &inv).mod_floor(&p);
                for k in c..n {
                    let x = (&a[r][k] - &f * &a[c][k]).mod_floor(&p);
                    a[r][k] = x;
                }
            }
        }
        num_traits::ToPrimitive::to_u64(&det.mod_floor(&p)).unwrap()
    }
}

#[derive(Clone, Debug)]
pub struct SnfResult {
    pub u: PMatrix,
    pub d: PMatrix,
    pub v: PMatrix,
    /// Exponents of the diagonal entries; `None` marks a divisor that is zero mod `p^n`.
    pub divisors: Vec<Option<u32>>,
}

/// Smith normal form `U M V = D` with `D = diag(p^{e_i})`.
///
/// Pivots are chosen by minimal valuation, ties broken by lowest row then
/// lowest column, so the output is deterministic.
pub fn smith_normal_form(m: &PMatrix) -> SnfResult {
    let modulus = m.modulus();
    let mut d = m.clone();
    let mut u = PMatrix::identity(m.p, m.n, m.rows);
    let mut v = PMatrix::identity(m.p, m.n, m.cols);
    let size = m.rows.min(m.cols);
    let mut divisors = Vec::with_capacity(size);
    for t in 0..size {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in t..d.rows {
            for j in t..d.cols {
                if let Some(e) = d.val(i, j) {
                    if best.map_or(true, |(b, _, _)| e < b) {
                        best = Some((e, i, j));
                    }
                }
            }
        }
        let Some((e, pi, pj)) = best else {
            divisors.extend(std::iter::repeat(None).take(size - t));
            break;
        };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);
        let pe = ppow(m.p, e);
        let unit = d.get(t, t) / &pe;
        let uinv = mod_inverse(&unit, &modulus).expect("pivot unit part is invertible");
        for i in t + 1..d.rows {
            if d.get(i, t).is_zero() {
                continue;
            }
            let f = ((d.get(i, t) / &pe) * &uinv).mod_floor(&modulus);
            d.row_axpy(i, t, &f, &modulus);
            u.row_axpy(i, t, &f, &modulus);
        }
        for j in t + 1..d.cols {
            if d.get(t, j).is_zero() {
                continue;
            }
            let f = ((d.get(t, j) / &pe) * &uinv).mod_floor(&modulus);
            d.col_axpy(j, t, &f, &modulus);
            v.col_axpy(j, t, &f, &modulus);
        }
        d.scale_row(t, &uinv, &modulus);
        u.scale_row(t, &uinv, &modulus);
        divisors.push(Some(e));
    }
    SnfResult { u, d, v, divisors }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ConditionReport {
    pub divisors: Vec<Option<u32>>,
    pub zero_divisors: usize,
    /// Largest finite elementary-divisor exponent; this is also the exponent of
    /// the smallest non-zero divisor in absolute value.
    pub condition: u32,
}

fn condition_of(divisors: &[Option<u32>]) -> Result<ConditionReport> {
    let zeros = divisors.iter().filter(|d| d.is_none()).count();
    if zeros != 1 {
        return Err(Error::EigenspaceNotOneDimensional { zeros });
    }
    let condition = divisors.iter().flatten().copied().max().unwrap_or(0);
    Ok(ConditionReport { divisors: divisors.to_vec(), zero_divisors: zeros, condition })
}

/// Condition number of `lambda` for the truncated matrix `m` (a residue mod `p^n`).
pub fn condition_number(m: &PMatrix, lambda: &BigInt) -> Result<ConditionReport> {
    condition_of(&smith_normal_form(&m.minus_scalar(lambda)).divisors)
}

/// Generator of a rank-one kernel, known modulo `p^prec`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelVector {
    pub p: u64,
    pub prec: u32,
    pub condition: u32,
    pub entries: Vec<BigInt>,
}

impl KernelVector {
    /// Rescale so that entry `idx` becomes 1; it must be a unit.
    pub fn normalized_at(&self, idx: usize) -> Result<Self> {
        let m = ppow(self.p, self.prec);
        let inv = mod_inverse(&self.entries[idx], &m)
            .ok_or_else(|| Error::DivisionByNonUnit(format!("kernel coordinate {idx}")))?;
        let entries = self.entries.iter().map(|x| (x * &inv).mod_floor(&m)).collect();
        Ok(KernelVector { entries, ..self.clone() })
    }

    pub fn reduce(&self, prec: u32) -> Self {
        let m = ppow(self.p, prec);
        KernelVector { prec, entries: self.entries.iter().map(|x| x.mod_floor(&m)).collect(), ..self.clone() }
    }

    pub fn to_padic(&self) -> Vec<PadicScalar> {
        self.entries.iter().map(|x| PadicScalar::from_residue(self.p, x, self.prec)).collect()
    }

    /// Whether `self` and `o` span the same line modulo `p^prec`.
    pub fn proportional(&self, o: &Self, prec: u32) -> bool {
        let m = ppow(self.p, prec);
        let Some(idx) = self.entries.iter().position(|x| !x.mod_floor(&BigInt::from(self.p)).is_zero()) else {
            return false;
        };
        let Some(inv) = mod_inverse(&self.entries[idx], &m) else { return false };
        let scale = (&o.entries[idx] * inv).mod_floor(&m);
        self.entries.iter().zip(&o.entries).all(|(a, b)| ((a * &scale) - b).mod_floor(&m).is_zero())
    }
}

fn normalize_first_unit(p: u64, prec: u32, col: Vec<BigInt>, condition: u32) -> KernelVector {
    let m = ppow(p, prec);
    let vals: Vec<Option<u32>> = col.iter().map(|x| {
        let x = x.mod_floor(&m);
        if x.is_zero() { None } else { Some(vp(p, &x)) }
    }).collect();
    let minv = vals.iter().flatten().copied().min().unwrap_or(0);
    let idx = vals.iter().position(|v| *v == Some(minv)).unwrap_or(0);
    let unit = (&col[idx] / ppow(p, minv)).mod_floor(&m);
    let inv = mod_inverse(&unit, &m).unwrap_or_else(BigInt::one);
    let entries = col.iter().map(|x| (x * &inv).mod_floor(&m)).collect();
    KernelVector { p, prec, condition, entries }
}

/// Kernel of `m` modulo `p^target`; requires `m.n >= target + c` where `c` is
/// the condition number.
pub fn kernel_mod(m: &PMatrix, target: u32) -> Result<KernelVector> {
    let snf = smith_normal_form(m);
    let rep = condition_of(&snf.divisors)?;
    let have = m.n as i64 - rep.condition as i64;
    if have < target as i64 {
        return Err(Error::InsufficientPrecision { needed: target as i64 + rep.condition as i64, have: m.n as i64 });
    }
    let k = snf.divisors.iter().position(|d| d.is_none()).unwrap();
    let col: Vec<BigInt> = (0..snf.v.rows).map(|i| snf.v.get(i, k).clone()).collect();
    Ok(normalize_first_unit(m.p, target, col, rep.condition))
}

/// Left kernel (`x m = 0`) modulo `p^target`.
pub fn left_kernel_mod(m: &PMatrix, target: u32) -> Result<KernelVector> {
    kernel_mod(&m.transpose(), target)
}

/// Coefficients `c_0..c_{r_max}` of `det(1 - tA)` mod `p^n`, by the
/// division-free Berkowitz algorithm.
pub fn char_coeffs(a: &PMatrix, r_max: usize) -> Vec<BigInt> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let m = a.modulus();
    // charpoly det(xI - A) = sum_k q[k] x^{n-k}; then c_r = q[r].
    let mut q: Vec<BigInt> = vec![BigInt::one()];
    for k in 0..n {
        // leading principal (k+1)x(k+1) block; partition as [[B, c],[r, a_kk]]
        let akk = a.get(k, k).clone();
        let r: Vec<BigInt> = (0..k).map(|j| a.get(k, j).clone()).collect();
        let c: Vec<BigInt> = (0..k).map(|i| a.get(i, k).clone()).collect();
        // Toeplitz column: 1, -a_kk, -r c, -r B c, -r B^2 c, ...
        let mut t = vec![BigInt::one(), (-&akk).mod_floor(&m)];
        let mut bc = c.clone();
        for _ in 0..k {
            let s = r.iter().zip(&bc).fold(BigInt::zero(), |acc, (x, y)| acc + x * y);
            t.push((-s).mod_floor(&m));
            bc = (0..k)
                .map(|i| (0..k).fold(BigInt::zero(), |acc, j| acc + a.get(i, j) * &bc[j]).mod_floor(&m))
                .collect();
        }
        let mut next = vec![BigInt::zero(); k + 2];
        for i in 0..k + 2 {
            let mut acc = BigInt::zero();
            for j in 0..=i.min(k) {
                if i - j < t.len() {
                    acc += &t[i - j] * &q[j];
                }
            }
            next[i] = acc.mod_floor(&m);
        }
        q = next;
    }
    q.truncate(r_max + 1);
    while q.len() < r_max + 1 {
        q.push(BigInt::zero());
    }
    q
}

/// A point `(r, v)` of a Newton polygon; `v = None` marks a coefficient known
/// only to be divisible by `p^lower`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NpPoint {
    pub r: usize,
    pub v: Option<i64>,
    pub lower: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonPolygon {
    pub points: Vec<NpPoint>,
    /// Vertices `(r, v)` of the lower convex hull of the known points.
    pub vertices: Vec<(usize, i64)>,
}

impl NewtonPolygon {
    /// Hull of `(r, v_p(c_r))`; `lower(r)` bounds the valuation of coefficients
    /// that vanish to the working precision (and of all `r` beyond the list).
    pub fn new(p: u64, n: u32, coeffs: &[BigInt], lower: impl Fn(usize) -> i64) -> Self {
        let points: Vec<NpPoint> = coeffs
            .iter()
            .enumerate()
            .map(|(r, c)| {
                let c = c.mod_floor(&ppow(p, n));
                if c.is_zero() {
                    NpPoint { r, v: None, lower: lower(r).max(n as i64) }
                } else {
                    NpPoint { r, v: Some(vp(p, &c) as i64), lower: vp(p, &c) as i64 }
                }
            })
            .collect();
        let known: Vec<(usize, i64)> = points.iter().filter_map(|pt| pt.v.map(|v| (pt.r, v))).collect();
        let mut hull: Vec<(usize, i64)> = Vec::new();
        for &pt in &known {
            while hull.len() >= 2 {
                let (x1, y1) = hull[hull.len() - 2];
                let (x2, y2) = hull[hull.len() - 1];
                // drop the middle point when it lies on or above the chord
                let cross = (x2 as i64 - x1 as i64) * (pt.1 - y1) - (y2 - y1) * (pt.0 as i64 - x1 as i64);
                if cross <= 0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(pt);
        }
        NewtonPolygon { points, vertices: hull }
    }

    /// Segments as `(slope numerator, slope denominator, length)`.
    pub fn segments(&self) -> Vec<(i64, i64, usize)> {
        self.vertices
            .windows(2)
            .map(|w| {
                let (x1, y1) = w[0];
                let (x2, y2) = w[1];
                (y2 - y1, (x2 - x1) as i64, x2 - x1)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeCensus {
    pub bound: i64,
    pub dimension: usize,
    pub certified: bool,
    pub polygon: NewtonPolygon,
}

/// Dimension of the slope `<= n` part: the last `r` minimising `v(c_r) - n r`.
///
/// Certified when every coefficient of unknown valuation (including all
/// `r` beyond the computed range, via `lower`) stays strictly above that
/// minimum.
pub fn slope_dimension(poly: &NewtonPolygon, n: i64, r_horizon: usize, lower: impl Fn(usize) -> i64) -> SlopeCensus {
    let mut best = i64::MAX;
    let mut dim = 0;
    for pt in &poly.points {
        if let Some(v) = pt.v {
            if v - n * pt.r as i64 <= best {
                best = v - n * pt.r as i64;
                dim = pt.r;
            }
        }
    }
    let mut certified = poly
        .points
        .iter()
        .filter(|pt| pt.v.is_none())
        .all(|pt| pt.lower - n * pt.r as i64 > best);
    for r in poly.points.len()..=r_horizon {
        if lower(r) - n * r as i64 <= best {
            certified = false;
        }
    }
    SlopeCensus { bound: n, dimension: dim, certified, polygon: poly.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(p: u64, n: u32, rows: &[&[i64]]) -> PMatrix {
        PMatrix::from_fn(p, n, rows.len(), rows[0].len(), |i, j| BigInt::from(rows[i][j]))
    }

    #[test]
    fn snf_diag_and_transforms() {
        let a = m(3, 6, &[&[9, 3], &[0, 27]]);
        let s = smith_normal_form(&a);
        assert_eq!(s.divisors, vec![Some(1), Some(4)]);
        assert_eq!(s.u.mul(&a).mul(&s.v), s.d);
        assert_ne!(s.u.det_mod_p(), 0);
        assert_ne!(s.v.det_mod_p(), 0);
    }

    #[test]
    fn zero_divisor_and_condition() {
        let a = m(3, 8, &[&[2, 1], &[4, 2]]);
        let rep = condition_number(&a, &BigInt::zero()).unwrap();
        assert_eq!(rep.zero_divisors, 1);
        assert_eq!(rep.condition, 0);
        let k = kernel_mod(&a, 8).unwrap();
        assert!(a.apply(&k.entries).iter().all(|x| x.is_zero()));
        let lk = left_kernel_mod(&a, 8).unwrap();
        assert!(a.transpose().apply(&lk.entries).iter().all(|x| x.is_zero()));
        assert!(condition_number(&PMatrix::zeros(3, 4, 2, 2), &BigInt::zero()).is_err());
    }

    #[test]
    fn berkowitz_small() {
        // det(1 - tA) for A = [[1,2],[3,4]] is 1 - 5t - 2t^2
        let a = m(5, 10, &[&[1, 2], &[3, 4]]);
        let c = char_coeffs(&a, 2);
        let md = ppow(5, 10);
        assert_eq!(c[0], BigInt::one());
        assert_eq!(c[1], BigInt::from(-5).mod_floor(&md));
        assert_eq!(c[2], BigInt::from(-2).mod_floor(&md));
    }

    #[test]
    fn newton_polygon_of_diagonal() {
        let a = m(3, 20, &[&[1, 0, 0], &[0, 27, 0], &[0, 0, 2187]]);
        let c = char_coeffs(&a, 3);
        let np = NewtonPolygon::new(3, 20, &c, |_| 20);
        assert_eq!(np.vertices, vec![(0, 0), (1, 0), (2, 3), (3, 10)]);
        let s = slope_dimension(&np, 3, 3, |_| 20);
        assert_eq!(s.dimension, 2);
        assert!(s.certified);
    }
}
