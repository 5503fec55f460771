use asaireg::lvalues::DirichletChar;
use asaireg::ocspace::*;
use asaireg::padic::PadicScalar;
use asaireg::plinalg::condition_number;
use asaireg::qseries::{eisenstein_crit, eta_product, QExpansion};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use std::sync::OnceLock;

const N: u32 = 20;

fn window() -> &'static (BanachBasis, UMatrix) {
    static W: OnceLock<(BanachBasis, UMatrix)> = OnceLock::new();
    W.get_or_init(|| {
        let r = certificate_r(N);
        let b = BanachBasis::kolberg(r, 3 * r + 3, N + r as u32 + 6).unwrap();
        let a = assemble_u_matrix(&b, r, N).unwrap();
        (b, a)
    })
}

fn ecrit(t: usize) -> QExpansion<BigRational> {
    eisenstein_crit(6, &DirichletChar::trivial(1), 3, t).unwrap()
}

fn signed(x: &BigInt, n: u32) -> i64 {
    let m = BigInt::from(3).pow(n);
    let r = x % &m;
    let r = if r > &m / 2 { r - &m } else { r };
    r.to_i64().unwrap()
}

#[test]
fn assembled_agrees_with_generating_function() {
    let (_, a) = window();
    let o = UMatrix::from_genfun(a.r, N);
    for i in 1..=20 {
        for j in 1..=20 {
            assert_eq!(a.entry(i, j), o.entry(i, j), "({i},{j})");
        }
    }
}

#[test]
fn structure_and_valuations() {
    let (_, a) = window();
    assert!(a.structural_zero_violations().is_empty());
    assert!(a.valuation_violations(|i, _| 2 * i as i64).is_empty());
    let strong = |i: usize, j: usize| if j <= 3 * i { 2 * i as i64 + (3 * i - j).div_ceil(2) as i64 } else { i64::MAX };
    let small: Vec<_> = a.valuation_violations(strong).into_iter().filter(|&(i, _)| i <= 8).collect();
    assert!(small.is_empty(), "{small:?}");
}

#[test]
fn critical_eisenstein_is_eigen() {
    let (b, a) = window();
    let e = to_padic_series(&ecrit(b.trunc), 60);
    let c = b.coords_from_qexp(&e, a.r).unwrap();
    assert!(c.residual_valuation.map_or(true, |v| v >= N as i64));
    // E_crit has coordinate 1/3 at b_1, so scale by 3 before reducing
    let x: Vec<BigInt> = coords_residues(&c.coords.iter().map(|y| y.shift(1)).collect::<Vec<_>>(), N - 1).unwrap();
    let ax = a.apply(&x);
    let m = BigInt::from(3).pow(N - 9);
    for (i, (l, r)) in ax.iter().zip(&x).enumerate() {
        let d = (l - BigInt::from(2187) * r) % &m;
        assert!(d.is_zero(), "row {}", i + 1);
    }
}

#[test]
fn kernel_and_condition_number() {
    let (_, a) = window();
    let rep = condition_number(&a.matrix.minus_scalar(&BigInt::from(2187)), &BigInt::zero()).unwrap();
    assert_eq!(rep.zero_divisors, 1);
    let k = a.eigenvector(&BigInt::from(2187), N - rep.condition).unwrap();
    let k = k.normalized_at(1).unwrap().reduce(10);
    let head: Vec<i64> = k.entries[..5].iter().map(|x| x.to_i64().unwrap()).collect();
    assert_eq!(head, vec![42041, 1, 54513, 21870, 0]);
}

#[test]
fn slope_at_most_seven_is_two_dimensional() {
    let r = certificate_r(40);
    let b = BanachBasis::kolberg(r, 3 * r + 3, 40 + r as u32 + 6).unwrap();
    let a = assemble_u_matrix(&b, r, 40).unwrap();
    let s = a.slope_leq(7);
    assert_eq!(s.dimension, 2);
    assert!(s.certified);
    let lam = a.refine_eigenvalue(&BigRational::from_integer((-27).into())).unwrap();
    assert!(lam.abs_prec().unwrap() >= 15);
    assert_eq!(lam, PadicScalar::from_i64(3, -27, 60));
}

#[test]
fn slope_three_newform() {
    let (b, a) = window();
    let k = a.eigenvector(&BigInt::from(-27), 12).unwrap();
    let ys: Vec<PadicScalar> = k.to_padic();
    let f = b.qexp_from_coords(&ys);
    let lead = f.coeff(1).unwrap().clone();
    // eta(z)^6 eta(3z)^6 (3 E_2(3z) - E_2(z)) / 2
    let t = 12;
    let eta = eta_product(&[(1, 6), (3, 6)], t).unwrap();
    let e2 = QExpansion::from_fn(t, |n| {
        if n == 0 {
            BigRational::from_integer(1.into())
        } else {
            let s: i64 = (1..=n as i64).filter(|d| n as i64 % d == 0).sum();
            BigRational::from_integer((-24 * s).into())
        }
    });
    let comb = e2.v_op(3).truncate(t).scale(&BigRational::from_integer(3.into())).sub(&e2);
    let newform = eta.mul(&comb).scale(&BigRational::new(1.into(), 2.into()));
    let want: Vec<i64> = (1..=10).map(|n| newform.coeff(n).unwrap().to_integer().to_i64().unwrap()).collect();
    assert_eq!(&want[..5], &[1, 6, -27, -92, 390]);
    for n in 1..=10 {
        let got = f.coeff(n).unwrap().div(&lead).unwrap().truncate_abs(6).residue(6).unwrap();
        assert_eq!(signed(&got, 6), signed(&BigInt::from(want[n - 1].rem_euclid(729)), 6), "n = {n}");
    }
}
