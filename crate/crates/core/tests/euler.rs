use asaireg::euler::{asai_from_traces, depletion_factor_check, identity_check, AsaiData, Route};
use asaireg::hilbert::EigenvalueTable;
use asaireg::padic::PadicScalar;
use asaireg::qfield::{PrimeIdeal, QuadElem};
use asaireg::Error;
use num_bigint::BigInt;
use num_rational::BigRational;

fn setup() -> (EigenvalueTable, PrimeIdeal) {
    let t = EigenvalueTable::fixture();
    let p1 = *t.field.factor(&QuadElem::from_half(13, 5, 1)).unwrap().factors.keys().next().unwrap();
    (t, p1)
}

fn residue(x: &PadicScalar, n: u32) -> BigInt {
    x.residue(n).unwrap()
}

#[test]
fn root_valuations() {
    let (t, p1) = setup();
    let a = AsaiData::from_table(&t, p1, 30).unwrap();
    assert_eq!(a.k, [0, 6]);
    let v: Vec<i64> = a.roots().iter().map(|r| r.valuation().unwrap()).collect();
    assert_eq!(v, vec![0, 1, 1, 6]);
    let all = a.alpha1.mul(&a.beta1).mul(&a.alpha2).mul(&a.beta2);
    assert_eq!(all.valuation(), Some(8));
    let pp = a.asai_polynomial();
    assert_eq!(residue(&pp.coeffs[0], 20), BigInt::from(1));
    assert_eq!(pp.coeffs[4].valuation(), Some(16));
}

#[test]
fn star_product_two_routes() {
    let (t, p1) = setup();
    let a = AsaiData::from_table(&t, p1, 30).unwrap();
    let direct = a.asai_polynomial();
    let res = a.asai_polynomial_resultant();
    for (x, y) in direct.coeffs.iter().zip(&res.coeffs) {
        assert_eq!(residue(x, 20), residue(y, 20));
    }
    assert!(a.identity_residual_valuation() >= 20);
}

#[test]
fn symbolic_suite() {
    let proof = identity_check().unwrap();
    assert_eq!(proof.b_monomials, vec![(1, 0), (2, 0), (2, 1), (4, 2)]);
}

/// `E(j) = (1 - p^{2j}/n) n^2 / (p^{4j} P_p(p^{-j}))` with `n = n1 n2`, evaluated in F.
fn exact_euler(t: &EigenvalueTable, p1: PrimeIdeal, j: i32) -> QuadElem {
    let a = AsaiData::from_table(t, p1, 30).unwrap();
    let q = |n: i64| BigRational::from_integer(BigInt::from(n));
    let r = |x: BigRational| QuadElem::from_rational(13, x);
    let n1 = r(BigRational::from_integer(a.norms[0].clone()));
    let n2 = r(BigRational::from_integer(a.norms[1].clone()));
    let coeffs: Vec<QuadElem> = asai_from_traces().iter().map(|c| c.eval(&[a.traces[0].clone(), n1.clone(), a.traces[1].clone(), n2.clone()])).collect();
    let x = q(3).pow(-j);
    let pp = coeffs.iter().rev().fold(r(q(0)), |acc, c| acc.scale(&x).add(c));
    let n = n1.mul(&n2);
    let p2j = r(q(3).pow(2 * j));
    let num = r(q(1)).sub(&p2j.div(&n).unwrap()).mul(&n).mul(&n);
    num.div(&pp.scale(&q(3).pow(4 * j))).unwrap()
}

#[test]
fn euler_factor_against_exact_route() {
    let (t, p1) = setup();
    let a = AsaiData::from_table(&t, p1, 30).unwrap();
    for j in 0..=0 {
        let e = a.euler_factor(j).unwrap();
        let want = t.field.embed(&exact_euler(&t, p1, j as i32), &p1, 40).unwrap();
        let v = e.valuation().unwrap();
        assert_eq!(want.valuation(), Some(v));
        let diff = e.sub(&want);
        assert!(diff.is_zero() || diff.valuation().unwrap() >= v + 15, "j = {j}");
    }
    let pre = a.prefactor(0, Route::TheoremB).unwrap();
    assert_eq!(pre.combinatorial, BigRational::from_integer(1.into()));
    assert!(!pre.value.is_zero());
    assert!(a.prefactor(1, Route::TheoremB).is_err());
}

#[test]
fn prefactor_symmetric_in_roots() {
    let (t, p1) = setup();
    let a = AsaiData::from_table(&t, p1, 30).unwrap();
    let mut b = a.clone();
    std::mem::swap(&mut b.alpha1, &mut b.beta1);
    let (x, y) = (a.euler_factor(0).unwrap(), b.euler_factor(0).unwrap());
    let d = x.sub(&y);
    assert!(d.is_zero() || d.valuation().unwrap() >= x.valuation().unwrap() + 15);
}

#[test]
fn depletion_identities_on_fixture() {
    let (t, p1) = setup();
    let r = depletion_factor_check(&t, p1, 42, 4).unwrap();
    assert!(r.decomposition_holds);
    assert!(r.u_cubed_kills);
    // The one-term display fails off the diagonal; the b, b' terms account for it.
    assert!(!r.lemma_display_holds);
    assert!(r.display_failures.iter().all(|(x, y)| x != y));
    assert!(r.ideals_checked > 25 * 10);
    assert!(matches!(depletion_factor_check(&t, p1, 200, 4), Err(Error::MissingPrime { .. })));
}

