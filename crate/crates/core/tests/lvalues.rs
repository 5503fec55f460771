use asaireg::lvalues::*;
use asaireg::padic::PadicScalar;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

/// B_n(x) through the explicit double sum, independent of the B_k recurrence.
fn bernoulli_poly_explicit(n: usize, x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for k in 0..=n {
        let mut inner = BigRational::zero();
        let mut c = BigInt::from(1);
        for j in 0..=k {
            let t = x + BigRational::from_integer(BigInt::from(j));
            let term = BigRational::from_integer(c.clone()) * num_traits::pow(t, n);
            if j % 2 == 0 { inner += term } else { inner -= term }
            c = c * BigInt::from(k - j) / BigInt::from(j + 1);
        }
        acc += inner / BigRational::from_integer(BigInt::from(k + 1));
    }
    acc
}

#[test]
fn hurwitz_route_mod_5() {
    for chi in [DirichletChar::trivial(5), DirichletChar::kronecker(5)] {
        for n in 1..8usize {
            let mut hur = BigRational::zero();
            for a in 1..=5i64 {
                let x = BigRational::new(BigInt::from(a), BigInt::from(5));
                // zeta(1-n, x) = -B_n(x)/n
                let z = -bernoulli_poly_explicit(n, &x) / BigRational::from_integer(BigInt::from(n));
                hur += BigRational::from_integer(BigInt::from(chi.eval(a))) * z;
            }
            hur *= num_traits::pow(BigRational::from_integer(BigInt::from(5)), n - 1);
            assert_eq!(dirichlet_l_nonpos(&chi, n).unwrap(), hur, "n = {n}");
        }
    }
}

#[test]
fn trivial_zeros_by_parity() {
    let chi = DirichletChar::kronecker(5);
    for n in [1usize, 3, 5, 7] {
        assert!(dirichlet_l_nonpos(&chi, n).unwrap().is_zero());
    }
    let chi = DirichletChar::kronecker(-4);
    for n in [2usize, 4, 6] {
        assert!(dirichlet_l_nonpos(&chi, n).unwrap().is_zero());
    }
}

#[test]
fn interpolation_two_routes_mod_3() {
    for i in 0..2 {
        let chi = DirichletChar::teichmuller_power(3, i).unwrap();
        for n in 1..=6usize {
            let exact = kubota_leopoldt_interpolated(&chi, n, 3).unwrap();
            let series = kubota_leopoldt(&chi, 1 - n as i64, 3, 10).unwrap();
            let want = PadicScalar::from_rational_abs(3, &exact, 10);
            assert_eq!(series, want, "chi = omega^{i}, n = {n}");
        }
    }
}

#[test]
fn interpolation_two_routes_p5() {
    // omega^{-n} is rational at p = 5 only for even n
    for chi in [DirichletChar::trivial(1), DirichletChar::kronecker(8), DirichletChar::kronecker(-4)] {
        for n in [2usize, 4, 6, 8] {
            let exact = kubota_leopoldt_interpolated(&chi, n, 5).unwrap();
            let series = kubota_leopoldt(&chi, 1 - n as i64, 5, 8).unwrap();
            assert_eq!(series, PadicScalar::from_rational_abs(5, &exact, 8), "n = {n}");
        }
    }
}

#[test]
fn zeta3_at_7_stable_in_depth() {
    let t = DirichletChar::trivial(1);
    let a = kubota_leopoldt_series(&t, 7, 3, 40, 30).unwrap().truncate_abs(20);
    let b = kubota_leopoldt_series(&t, 7, 3, 60, 60).unwrap().truncate_abs(20);
    assert_eq!(a, b);
    assert_eq!(kubota_leopoldt(&t, 7, 3, 20).unwrap(), b);
}

#[test]
fn value_at_one_matches_cyclotomic_units() {
    let p = 11;
    let chi = DirichletChar::kronecker(5);
    let prec = 12;
    let lhs = kubota_leopoldt(&chi, 1, p, prec).unwrap();
    let tau = gauss_sum_padic(&chi, p, prec + 6).unwrap();
    let s = cyclotomic_log_sum(&chi, p, prec + 6).unwrap();
    let euler = BigRational::new(BigInt::from(p as i64 - chi.eval(p as i64) as i64), BigInt::from(p));
    let e = PadicScalar::from_rational(p, &euler, prec + 6);
    let rhs = e.mul(&tau).mul(&s).div(&PadicScalar::from_i64(p, 5, prec + 6)).unwrap().neg();
    assert_eq!(lhs, rhs.truncate_abs(prec as i64));
}

#[test]
fn padic_gauss_sum_squares() {
    let chi = DirichletChar::kronecker(5);
    let g = gauss_sum_padic(&chi, 11, 20).unwrap();
    assert_eq!(g.mul(&g), PadicScalar::from_i64(11, 5, 20));
}

#[test]
fn period_constant_level_one() {
    let t = DirichletChar::trivial(1);
    let c = eisenstein_period(6, &t, 3, 20).unwrap();
    let z = kubota_leopoldt(&t, 7, 3, 30).unwrap();
    let want = z.mul(&PadicScalar::from_rational(3, &BigRational::new((-3).into(), 4.into()), 40));
    assert_eq!(c, want.truncate_abs(c.abs_prec().unwrap()));
    assert!(c.abs_prec().unwrap() >= 19);
}

#[test]
fn gauss_sum_of_trivial_is_one() {
    let g = gauss_sum(&DirichletChar::trivial(1));
    assert_eq!(g.coords, vec![BigInt::from(1)]);
}
