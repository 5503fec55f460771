//! Shared generators for the randomized suites.

use asaireg::euler::BivarPoly;
use asaireg::padic::PadicScalar;
use asaireg::plinalg::PMatrix;
use asaireg::qseries::QExpansion;
use asaireg::ring::Ring;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

pub const SCALAR_CASES: u32 = 1000;
pub const MATRIX_CASES: u32 = 100;

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn small_prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![3u64, 5, 7, 11])
}

/// `u p^v` with `u` a unit, relative precision `prec`.
pub fn scalar(p: u64) -> impl Strategy<Value = PadicScalar> {
    (-4i64..6, 1i64..1_000_000, 4u32..30).prop_map(move |(v, u, prec)| {
        let u = if u % p as i64 == 0 { u + 1 } else { u };
        let x = BigRational::from_integer(u.into()) * BigRational::from_integer(p.into()).pow(v as i32);
        PadicScalar::from_rational(p, &x, prec)
    })
}

pub fn unit(p: u64) -> impl Strategy<Value = PadicScalar> {
    (1i64..1_000_000, 2u32..40).prop_map(move |(u, prec)| {
        let u = if u % p as i64 == 0 { u + 1 } else { u };
        PadicScalar::from_i64(p, u, prec)
    })
}

/// A 1-unit `1 + p a` known to `prec` digits.
pub fn one_unit(p: u64) -> impl Strategy<Value = PadicScalar> {
    (0i64..1_000_000, 4u32..25).prop_map(move |(a, prec)| PadicScalar::from_i64(p, 1 + p as i64 * a, prec))
}

pub fn same(a: &PadicScalar, b: &PadicScalar) -> bool {
    a.sub(b).is_zero()
}

pub fn rational_series(len: usize) -> impl Strategy<Value = QExpansion<BigRational>> {
    prop::collection::vec((-50i64..50, 1i64..4), len).prop_map(|v| QExpansion::new(v.into_iter().map(|(n, d)| q(n, d)).collect()))
}

/// Integer matrix with a planted kernel: the last column is a combination
/// of the others.
pub fn singular_integer_matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (2usize..6).prop_flat_map(|n| {
        (prop::collection::vec(prop::collection::vec(-500i64..500, n - 1), n), prop::collection::vec(-5i64..5, n - 1)).prop_map(|(mut rows, c)| {
            for r in rows.iter_mut() {
                let last: i64 = r.iter().zip(&c).map(|(a, b)| a * b).sum();
                r.push(last);
            }
            rows
        })
    })
}

pub fn integer_matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-1000i64..1000, c), r))
}

pub fn reduce(rows: &[Vec<i64>], p: u64, n: u32) -> PMatrix {
    PMatrix::from_fn(p, n, rows.len(), rows[0].len(), |i, j| BigInt::from(rows[i][j]))
}

pub fn bivar_mul(a: &BivarPoly<BigRational>, b: &BivarPoly<BigRational>) -> BivarPoly<BigRational> {
    let mut out = BivarPoly::new();
    for ((x1, y1), c1) in a {
        for ((x2, y2), c2) in b {
            let e = out.entry((x1 + x2, y1 + y2)).or_insert_with(|| c1.zero_like());
            *e = e.add_r(&c1.mul_r(c2));
        }
    }
    out.retain(|_, c| !c.is_zero_elt());
    out
}

pub fn bivar_add(a: &BivarPoly<BigRational>, b: &BivarPoly<BigRational>) -> BivarPoly<BigRational> {
    let mut out = a.clone();
    for (k, c) in b {
        let e = out.entry(*k).or_insert_with(|| c.zero_like());
        *e = e.add_r(c);
    }
    out.retain(|_, c| !c.is_zero_elt());
    out
}
