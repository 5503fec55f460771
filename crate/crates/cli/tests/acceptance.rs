//! Acceptance run: one line per criterion.
//!
//! Criteria that cannot pass with the shipped data, or whose literal
//! statement is unattainable, are still evaluated as written; they are listed
//! in `EXPECTED` and do not fail the run. Everything else must pass.

use asaireg::eisproj::{bracket_identity_holds, critical_functional, route_consistency, TailPolicy};
use asaireg::euler::identity_check;
use asaireg::hilbert::{EigenvalueTable, FWForm, Weight, FIXTURE_CSV};
use asaireg::lvalues::DirichletChar;
use asaireg::ocspace::{assemble_u_matrix, certificate_r, BanachBasis, UMatrix, PUBLISHED_BLOCK_MOD_3_10};
use asaireg::padic::PadicScalar;
use asaireg::plinalg::condition_number;
use asaireg::qfield::{PrimeIdeal, QuadElem, QuadField};
use asaireg::qseries::{eisenstein_crit, eisenstein_ord, eta_product, QExpansion};
use asaireg::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Verdict {
    Pass,
    Fail,
    Conditional,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn pass_if(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { verdict: if ok { Verdict::Pass } else { Verdict::Fail }, detail: detail.into() }
}

/// Criteria allowed not to pass, with the reason.
const EXPECTED: [(usize, &str); 4] = [
    (3, "published kernel vector agrees only mod 3^10"),
    (4, "the eta(z)^6 eta(3z)^6 oracle has weight 6"),
    (9, "needs an external eigenvalue dataset"),
    (10, "needs an external eigenvalue dataset"),
];

fn three(n: u32) -> BigInt {
    BigInt::from(3).pow(n)
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn window(n: u32, trunc: Option<usize>) -> (BanachBasis, UMatrix) {
    let r = trunc.unwrap_or_else(|| certificate_r(n));
    let b = BanachBasis::kolberg(r, 3 * r + 3, n + r as u32 + 6).unwrap();
    let a = assemble_u_matrix(&b, r, n).unwrap();
    (b, a)
}

fn criterion_1() -> Outcome {
    let (_, a) = window(10, Some(12));
    let got: Vec<((usize, usize), BigInt)> = a.nonzero_entries();
    let want: Vec<((usize, usize), BigInt)> = PUBLISHED_BLOCK_MOD_3_10.iter().map(|&(ij, x)| (ij, BigInt::from(x))).collect();
    pass_if(got == want, format!("{} nonzero entries mod 3^10 on a 12x12 window, published block has {}", got.len(), want.len()))
}

fn criterion_2() -> Outcome {
    let (_, a) = window(20, None);
    let o = UMatrix::from_genfun(a.r, 20);
    let bad = (1..=20).flat_map(|i| (1..=20).map(move |j| (i, j))).filter(|&(i, j)| a.entry(i, j) != o.entry(i, j)).count();
    pass_if(bad == 0, format!("{bad} of 400 entries differ mod 3^20"))
}

fn criterion_3() -> Outcome {
    let (_, a) = window(20, None);
    let lambda = BigInt::from(2187);
    let rep = condition_number(&a.matrix.minus_scalar(&lambda), &BigInt::zero()).unwrap();
    let k = a.eigenvector(&lambda, 20 - rep.condition).unwrap();
    let paper = [42041i64, 1, 54513, 21870, 0];
    // proportional: k = c * paper on the printed entries, with c = k_2 since paper_2 = 1
    let prop_mod = |n: u32| {
        let m = three(n);
        let c = &k.entries[1];
        paper.iter().enumerate().all(|(i, &x)| ((&k.entries[i] - c * BigInt::from(x)) % &m).is_zero())
    };
    let (at11, at10) = (prop_mod(11), prop_mod(10));
    let norm = k.normalized_at(1).unwrap();
    let head: Vec<String> = norm.entries[..5].iter().map(|x| (x % three(11)).to_string()).collect();
    pass_if(
        rep.zero_divisors == 1 && rep.condition == 9 && at11,
        format!(
            "27x27, {} zero divisor, condition {}; kernel mod 3^11 = ({}, ...); proportional mod 3^11: {at11}, mod 3^10: {at10}",
            rep.zero_divisors,
            rep.condition,
            head.join(", ")
        ),
    )
}

fn signed(x: &BigInt, m: &BigInt) -> BigInt {
    let r = x.mod_floor_big(m);
    if &r > &(m / 2) {
        r - m
    } else {
        r
    }
}

trait ModFloor {
    fn mod_floor_big(&self, m: &BigInt) -> BigInt;
}

impl ModFloor for BigInt {
    fn mod_floor_big(&self, m: &BigInt) -> BigInt {
        ((self % m) + m) % m
    }
}

fn criterion_4() -> Outcome {
    let (b, a) = window(40, None);
    let s = a.slope_leq(7);
    let k = a.eigenvector(&BigInt::from(-27), 30).unwrap();
    let f = b.qexp_from_coords(&k.to_padic());
    let lead = f.coeff(1).unwrap().clone();
    let norm: Vec<PadicScalar> = (1..=20).map(|n| f.coeff(n).unwrap().div(&lead).unwrap()).collect();
    // digits certified for every one of the 20 normalised coefficients
    let prec = norm.iter().map(|c| c.abs_prec().unwrap_or(i64::MAX)).min().unwrap().min(10);
    let m = three(prec as u32);
    let residues: Vec<BigInt> = norm.iter().map(|c| signed(&c.residue(prec as u32).unwrap(), &m)).collect();
    let displayed = residues[..3] == [BigInt::from(1), BigInt::from(6), BigInt::from(-27)];

    let t = 20;
    let literal = eta_product(&[(1, 6), (3, 6)], t).unwrap();
    let e2 = QExpansion::from_fn(t, |n| {
        if n == 0 {
            rat(1)
        } else {
            rat(-24 * (1..=n as i64).filter(|d| n as i64 % d == 0).sum::<i64>())
        }
    });
    let weight8 = literal.mul(&e2.v_op(3).truncate(t).scale(&rat(3)).sub(&e2)).scale(&BigRational::new(1.into(), 2.into()));
    let agree = |g: &QExpansion<BigRational>| {
        (1..=20).filter(|&n| {
            let c = g.coeff(n).unwrap().to_integer();
            signed(&c, &m) == residues[n - 1]
        }).count()
    };
    let (lit, corrected) = (agree(&literal), agree(&weight8));
    pass_if(
        s.dimension == 2 && s.certified && displayed && prec >= 10 && lit == 20,
        format!(
            "slope<=7 dimension {} (certified {}); eigenform starts {}, {}, {} mod 3^{prec}; literal eta(z)^6 eta(3z)^6 agrees at {lit}/20 coefficients, the weight-8 product eta(z)^6 eta(3z)^6 (3E2(3z) - E2(z))/2 at {corrected}/20",
            s.dimension, s.certified, residues[0], residues[1], residues[2]
        ),
    )
}

fn criterion_5() -> Outcome {
    let chi = DirichletChar::trivial(1);
    let e = eisenstein_crit(6, &chi, 3, 162).unwrap();
    let first: Vec<BigRational> = (1..=4).map(|n| e.coeff(n).unwrap().clone()).collect();
    let ok_first = first == [rat(1), rat(129), rat(2187), rat(16513)];
    let ord = eisenstein_ord(8, 3, 2).unwrap();
    let lin = ord.coeff(1).unwrap().clone();
    let ok_ord = lin == BigRational::new((-240).into(), 1093.into());
    let u = e.u_op(3);
    let eigen = u.trusted() >= 54 && (0..=54).all(|n| u.coeff(n).unwrap() == &(e.coeff(n).unwrap() * rat(2187)));
    pass_if(
        ok_first && ok_ord && eigen,
        format!(
            "E_crit = {}q + {}q^2 + {}q^3 + {}q^4 + ...; E8^ord linear coefficient {lin}; U(3)E_crit = 3^7 E_crit to q^{}: {eigen}",
            first[0], first[1], first[2], first[3], u.trusted()
        ),
    )
}

fn criterion_6() -> Outcome {
    match identity_check() {
        Ok(p) => {
            let brackets = (-6..=10).all(|r1| (-4..=10).all(|r2| (0..=6).all(|n| bracket_identity_holds(r1, r2, n))));
            let ok = p.cup_product && p.fornea_variant && p.star_product && p.b_all_x_gt_y && p.b_prime_all_y_gt_x && brackets;
            pass_if(
                ok,
                format!(
                    "star product, cup product and its variant hold; b monomials {:?}; bracket identity on r1 in -6..10, r2 in -4..10, n <= 6: {brackets}",
                    p.b_monomials
                ),
            )
        }
        Err(e) => pass_if(false, e.to_string()),
    }
}

/// Brute-force pullback coefficients for the fixture: scan the lattice,
/// factor each `lambda d` by hand and multiply table entries.
mod oracle {
    use super::*;

    const D: i64 = 13;
    /// Exponent in the Hecke recurrence.
    const W1: u32 = 7;

    pub struct Prime {
        pub ell: i64,
        /// root of X^2 = 13 mod ell picking the prime, for split ell
        pub root: Option<i64>,
        pub norm: i64,
    }

    pub struct Row {
        pub gx: i64,
        pub gy: i64,
        pub norm: i64,
        pub mu: QuadElem,
    }

    pub fn rows() -> Vec<Row> {
        FIXTURE_CSV
            .lines()
            .skip(1)
            .map(|l| {
                let v: Vec<i64> = l.split(',').map(|x| x.trim().parse().unwrap()).collect();
                Row { gx: v[0], gy: v[1], norm: v[2], mu: QuadElem::new(D, rat(v[3]), rat(v[4])) }
            })
            .collect()
    }

    fn vp(ell: i64, x: &BigInt) -> u32 {
        if x.is_zero() {
            return u32::MAX;
        }
        let mut x = x.clone();
        let mut v = 0;
        while (&x % ell).is_zero() {
            x /= ell;
            v += 1;
        }
        v
    }

    /// `sqrt(13)` in `Z_ell` modulo `ell^n`, congruent to `r` mod `ell`.
    fn lift_root(ell: i64, r: i64, n: u32) -> BigInt {
        let m = BigInt::from(ell).pow(n);
        let mut x = BigInt::from(r);
        // plain digit-by-digit search keeps this path free of Newton steps
        for k in 1..n {
            let mk = BigInt::from(ell).pow(k + 1);
            let step = BigInt::from(ell).pow(k);
            let mut found = false;
            for t in 0..ell {
                let y = &x + &step * t;
                if ((&y * &y - D) % &mk).is_zero() {
                    x = y;
                    found = true;
                    break;
                }
            }
            assert!(found);
        }
        x % m
    }

    /// Factorisation of `(x + n sqrt13)/2` as `(prime, exponent)` pairs.
    pub fn factor(x: i64, n: i64) -> Vec<(Prime, u32)> {
        let norm = (D * n * n - x * x) / 4;
        let mut out = vec![];
        let mut rest = norm;
        let mut ell = 2;
        while rest > 1 {
            if rest % ell != 0 {
                ell += 1;
                continue;
            }
            let mut e = 0;
            while rest % ell == 0 {
                rest /= ell;
                e += 1;
            }
            // 2 is inert since 13 = 5 mod 8
            let split = if ell == 2 { vec![] } else { (0..ell).filter(|r| (r * r - D).rem_euclid(ell) == 0).collect::<Vec<_>>() };
            if ell == D {
                out.push((Prime { ell, root: None, norm: ell }, e));
            } else if split.is_empty() {
                out.push((Prime { ell, root: None, norm: ell * ell }, e / 2));
            } else {
                for r in split {
                    let s = lift_root(ell, r, e + 2);
                    let v = vp(ell, &(BigInt::from(x) + BigInt::from(n) * s));
                    if v > 0 {
                        out.push((Prime { ell, root: Some(r), norm: ell }, v.min(e)));
                    }
                }
            }
        }
        out
    }

    fn row_for<'a>(rows: &'a [Row], p: &Prime) -> &'a Row {
        rows.iter()
            .find(|r| {
                r.norm == p.norm
                    && match p.root {
                        None => true,
                        Some(root) => (r.gx + r.gy * root).rem_euclid(p.ell) == 0,
                    }
            })
            .unwrap_or_else(|| panic!("fixture lacks the prime above {}", p.ell))
    }

    fn mu_power(mu: &QuadElem, norm: i64, e: u32) -> QuadElem {
        let c = QuadElem::from_rational(D, BigRational::from_integer(BigInt::from(norm).pow(W1)));
        let (mut prev, mut cur) = (QuadElem::from_int(D, 1), mu.clone());
        if e == 0 {
            return prev;
        }
        for _ in 1..e {
            let next = mu.mul(&cur).sub(&c.mul(&prev));
            prev = cur;
            cur = next;
        }
        cur
    }

    /// `a + b s` modulo `3^m`, with `s` the 3-adic `sqrt 13` that is 1 mod 3.
    fn sigma1(z: &QuadElem, s: &BigInt, m: &BigInt) -> BigInt {
        let inv = |q: &BigRational| -> BigInt {
            let d = q.denom().mod_floor_big(m);
            let phi = m / 3 * 2;
            q.numer() * d.modpow(&(phi - 1), m)
        };
        (inv(&z.a) + inv(&z.b) * s).mod_floor_big(m)
    }

    /// `a_n` of the pullback of `Theta_1^{-1}` of the `p1`-depleted form, mod `3^prec`.
    pub fn coefficient(n: i64, prec: u32) -> BigInt {
        let rows = rows();
        let m = three(prec);
        let s = lift_root(3, 1, prec + 2) % &m;
        let mut acc = BigInt::zero();
        let bound = ((n * n * D) as f64).sqrt() as i64 + 1;
        let mut x = -bound;
        while x <= bound {
            if x * x < n * n * D && (x - n).rem_euclid(2) == 0 {
                let fac = factor(x, n);
                // p1 is the prime above 3 with root 1
                let hits_p1 = fac.iter().any(|(p, _)| p.ell == 3 && p.root == Some(1));
                if !hits_p1 {
                    let mu = fac.iter().fold(QuadElem::from_int(D, 1), |acc, (p, e)| acc.mul(&mu_power(&row_for(&rows, p).mu, p.norm, *e)));
                    let lambda = QuadElem::new(D, BigRational::new(n.into(), 2.into()), BigRational::new(x.into(), (2 * D).into()));
                    let l = sigma1(&lambda, &s, &m);
                    let phi = &m / 3 * 2;
                    // sigma_1(lambda)^{-4}
                    let w = l.modpow(&(&phi * 4 - 4), &m);
                    acc += sigma1(&mu, &s, &m) * w;
                }
            }
            x += 1;
        }
        acc.mod_floor_big(&m)
    }
}

fn p1_of(field: &QuadField) -> PrimeIdeal {
    *field.factor(&QuadElem::from_half(13, 5, 1)).unwrap().factors.keys().next().unwrap()
}

fn synthetic(field: &QuadField, p1: PrimeIdeal, x: i64, y: i64, seed: i64) -> FWForm {
    let p2 = field.conjugate_prime(&p1);
    let f2 = field.clone();
    let c = Arc::new(move |l: &QuadElem| {
        let m = l.mul(&f2.different());
        let hit = f2.valuation(&m, &p1).unwrap() >= x && f2.valuation(&m, &p2).unwrap() == y;
        let raw: BigInt = l.a.numer() * 7 + l.b.numer() * 19 + BigInt::from(seed);
        let h = raw.mod_floor_big(&BigInt::from(23)) + 1;
        Ok(QuadElem::from_rational(13, if hit { BigRational::from_integer(h) } else { BigRational::zero() }))
    });
    FWForm::synthetic(field.clone(), 3, p1, Weight::new(4, 4, 0, 0).unwrap(), c).unwrap()
}

fn criterion_7() -> Outcome {
    let table = Arc::new(EigenvalueTable::fixture());
    let p1 = p1_of(&table.field);
    let g = FWForm::from_table(table.clone(), 3, p1).unwrap().deplete(&[0]).theta1_inverse().unwrap();
    let adic = g.pullback_iota(3, 15).unwrap();
    let mut matches = vec![];
    for n in 1..=3 {
        let got = adic.coeff(n).unwrap().residue(15).unwrap();
        let want = oracle::coefficient(n as i64, 15);
        matches.push(got == want);
    }
    let field = table.field.clone();
    let mut killed = 0;
    let mut nonempty = 0;
    let pairs = [(1, 0), (2, 0), (3, 0), (2, 1), (3, 1)];
    for (x, y) in pairs {
        for seed in 0..10 {
            let f = synthetic(&field, p1, x, y, seed).pullback_exact(3usize.pow(1 + y as u32) * 4).unwrap();
            let step = 3usize.pow(1 + y as u32);
            if f.coeffs().iter().any(|c| !c.is_zero()) {
                nonempty += 1;
            }
            if (1..=4).all(|m| f.coeff(step * m).unwrap().is_zero()) {
                killed += 1;
            }
        }
    }
    let forms = pairs.len() * 10;
    pass_if(
        matches.iter().all(|&b| b) && killed == forms && nonempty == forms,
        format!("a_1..a_3 against lattice-scan oracle mod 3^15: {matches:?}; support lemma holds on {killed}/{forms} synthetic forms ({nonempty} with nonzero pullback)"),
    )
}

/// Runs the core property suite, built alongside this target by `cargo test`.
fn criterion_8() -> Outcome {
    let me = std::env::current_exe().unwrap();
    let deps = me.parent().unwrap();
    let newest = std::fs::read_dir(deps)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy().to_string();
            name.starts_with("properties-") && p.extension().is_none_or(|e| e == "exe")
        })
        .max_by_key(|p| p.metadata().and_then(|m| m.modified()).ok());
    let Some(bin) = newest else {
        return pass_if(false, "property suite binary not found; run cargo test --workspace");
    };
    let out = Command::new(&bin).arg("--test-threads=4").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    let summary = text.lines().find(|l| l.starts_with("test result")).unwrap_or("no summary").to_string();
    pass_if(out.status.success(), summary)
}

fn headline_digits() -> (i64, Vec<u64>) {
    // 3^-2 + 3^-1 + 2 + 3 + 2*3^2 + 0*3^3 + 0*3^4 + 3^5 + 2*3^6 + O(3^7)
    (-2, vec![1, 1, 2, 1, 2, 0, 0, 1, 2])
}

fn run_cli(args: &[&str]) -> (i32, serde_json::Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_asaireg")).args(args).output().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null);
    (out.status.code().unwrap_or(-1), v)
}

fn criterion_9() -> Outcome {
    if let Ok(path) = std::env::var("ASAIREG_DATASET") {
        let (code, v) = run_cli(&["regulator", "--table", &path, "--tail-bound", "10,55", "--coeffs", "55"]);
        let proj = &v["body"]["routes"]["RegAE1"]["projection"];
        let (val, want) = headline_digits();
        let digits: Vec<u64> = proj["digits"].as_array().map(|a| a.iter().map(|d| d.as_u64().unwrap()).collect()).unwrap_or_default();
        let ok = code == 0 && proj["valuation"].as_i64() == Some(val) && proj["abs_prec"].as_i64().unwrap_or(0) >= 7 && digits.iter().take(9).eq(want.iter());
        return pass_if(ok, format!("dataset {path}: ell(h) = {}", proj["text"]));
    }
    let (code, v) = run_cli(&["regulator", "--tail-bound", "10,55"]);
    let bounds: Vec<u64> = ["TheoremB", "RegAE1"].iter().filter_map(|r| v["body"]["routes"][r]["missing"]["norm_bound"].as_u64()).collect();
    let ok = code == 2 && bounds == [9831, 9831];
    Outcome {
        verdict: if ok { Verdict::Conditional } else { Verdict::Fail },
        detail: format!("no dataset (set ASAIREG_DATASET); CLI exits {code} and asks for all primes of norm <= {bounds:?} for 55 coefficients"),
    }
}

fn criterion_10() -> Outcome {
    let table = Arc::new(match std::env::var("ASAIREG_DATASET") {
        Ok(path) => EigenvalueTable::load(&PathBuf::from(path), 13, Weight::new(2, 8, 3, 0).unwrap()).unwrap(),
        Err(_) => EigenvalueTable::fixture(),
    });
    let p1 = p1_of(&table.field);
    let f = FWForm::from_table(table.clone(), 3, p1).unwrap();
    let ell = critical_functional(6, &DirichletChar::trivial(1), 3, 20).unwrap();
    match route_consistency(&f, &ell, 55, 80, &TailPolicy::Conjecture { bound: 10, start: 55 }) {
        Ok(r) => pass_if(r.agree, format!("{} vs {} agree mod 3^{}", r.single.text, r.double.text, r.shared_precision)),
        Err(Error::MissingPrime { bound, .. }) => {
            // what the fixture does support: the difference of the two pullbacks is killed by U(3)
            let d = asaireg::eisproj::depletion_difference(&f, 3, 15).unwrap();
            let ok = d.coeff(3).unwrap().is_zero();
            Outcome {
                verdict: if ok { Verdict::Conditional } else { Verdict::Fail },
                detail: format!("needs primes of norm <= {bound}; on the fixture the depletion difference has a_3 = 0: {ok}"),
            }
        }
        Err(e) => pass_if(false, e.to_string()),
    }
}

fn main() {
    let criteria: [(usize, Duration, fn() -> Outcome); 10] = [
        (1, Duration::from_secs(10), criterion_1),
        (2, Duration::from_secs(30), criterion_2),
        (3, Duration::from_secs(10), criterion_3),
        (4, Duration::from_secs(30), criterion_4),
        (5, Duration::from_secs(5), criterion_5),
        (6, Duration::from_secs(5), criterion_6),
        (7, Duration::from_secs(10), criterion_7),
        (8, Duration::from_secs(120), criterion_8),
        (9, Duration::from_secs(600), criterion_9),
        (10, Duration::from_secs(600), criterion_10),
    ];
    let mut unexpected = vec![];
    for (n, budget, run) in criteria {
        let t = Instant::now();
        let mut o = run();
        let spent = t.elapsed();
        if spent > budget && o.verdict == Verdict::Pass {
            o.verdict = Verdict::Fail;
            o.detail.push_str(&format!("; over the {}s budget", budget.as_secs()));
        }
        let label = match o.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Conditional => "CONDITIONAL",
        };
        let known = EXPECTED.iter().find(|(k, _)| *k == n);
        let note = match (o.verdict, known) {
            (Verdict::Pass, _) => String::new(),
            (_, Some((_, why))) => format!(" [expected: {why}]"),
            (_, None) => " [UNEXPECTED]".into(),
        };
        println!("criterion {n:>2}: {label} ({:.1}s) {}{note}", spent.as_secs_f64(), o.detail);
        if o.verdict != Verdict::Pass && known.is_none() {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
