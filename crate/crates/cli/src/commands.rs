use crate::cache::sha256_hex;
use crate::config::{ConfigError, PipelineConfig, TailConfig};
use anyhow::{Context, Result};
use asaireg::eisproj::{
    bracket_identity_holds, critical_functional, regulator, RegulatorOptions, TailPolicy,
};
use asaireg::euler::{depletion_factor_check, identity_check, AsaiData, Route};
use asaireg::hilbert::{EigenvalueTable, FWForm, FIXTURE_CSV};
use asaireg::lvalues::{bernoulli, dirichlet_l_nonpos, eisenstein_period, kubota_leopoldt, DirichletChar};
use asaireg::ocspace::{
    assemble_u_matrix, certificate_r, to_padic_series, BanachBasis, UMatrix, PUBLISHED_BLOCK_MOD_3_10,
};
use asaireg::padic::PadicScalar;
use asaireg::plinalg::{kernel_mod, smith_normal_form};
use asaireg::qfield::{PrimeIdeal, QuadElem};
use asaireg::qseries::eisenstein_crit;
use asaireg::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    IncompleteData,
    PrecisionExhausted,
    Failed,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::IncompleteData => 2,
            Status::PrecisionExhausted => 3,
            Status::Failed => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub name: String,
    pub sha256: String,
}

/// Result of one command before it is wrapped in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub status: Status,
    pub body: Value,
    pub text: Vec<String>,
}

impl Outcome {
    fn ok(body: Value, text: Vec<String>) -> Self {
        Outcome { status: Status::Ok, body, text }
    }
}

fn kolberg_radius() -> BigRational {
    BigRational::new(1.into(), 6.into())
}

fn window(cfg: &PipelineConfig, k: u32) -> Result<(BanachBasis, UMatrix)> {
    let n = cfg.n_matrix;
    let r = cfg.trunc.unwrap_or_else(|| certificate_r(n));
    let basis = BanachBasis::new(k + 2, kolberg_radius(), r, 3 * r + 3, n + r as u32 + 6)?;
    let a = assemble_u_matrix(&basis, r, n)?;
    Ok((basis, a))
}

pub fn cmd_umatrix(cfg: &PipelineConfig) -> Result<Outcome> {
    let k = cfg.functional_k();
    let (_, a) = window(cfg, k)?;
    let entries = a.nonzero_entries();
    let mut text = vec![format!("U({}) on weight {} at r = 1/6, modulo {}^{}, window {}", cfg.p, k + 2, cfg.p, a.n, a.r)];
    let mut row = 0;
    for ((i, j), x) in &entries {
        if *i != row {
            row = *i;
            text.push(format!("row {i}:"));
        }
        text.push(format!("  a[{i}][{j}] = {x}"));
    }
    let golden = (k == 6 && a.n == 10 && a.r >= 12).then(|| {
        let got: Vec<((usize, usize), BigInt)> = entries.clone();
        let want: Vec<((usize, usize), BigInt)> = PUBLISHED_BLOCK_MOD_3_10.iter().map(|&(ij, x)| (ij, BigInt::from(x))).collect();
        let missing: Vec<_> = want.iter().filter(|e| !got.contains(e)).map(|(ij, x)| json!([ij.0, ij.1, x.to_string()])).collect();
        let extra: Vec<_> = got.iter().filter(|e| !want.contains(e)).map(|(ij, x)| json!([ij.0, ij.1, x.to_string()])).collect();
        json!({ "matches": missing.is_empty() && extra.is_empty(), "missing": missing, "extra": extra })
    });
    if let Some(g) = &golden {
        text.push(format!("published block: {}", if g["matches"] == json!(true) { "match" } else { "MISMATCH" }));
    }
    let body = json!({
        "weight": k + 2,
        "modulus": a.n,
        "window": a.r,
        "entries": entries.iter().map(|((i, j), x)| json!([i, j, x.to_string()])).collect::<Vec<_>>(),
        "certificate": {
            "structural_zero_violations": a.structural_zero_violations().len(),
            "valuation_violations": a.valuation_violations(|i, _| 2 * i as i64).len(),
        },
        "published_block": golden,
    });
    Ok(Outcome::ok(body, text))
}

/// `3^7`, `2187` or `-27`.
pub fn parse_lambda(s: &str) -> Result<BigInt, ConfigError> {
    let err = || ConfigError(format!("cannot read eigenvalue {s:?}"));
    let s = s.trim();
    let (neg, t) = match s.strip_prefix('-') {
        Some(t) => (true, t),
        None => (false, s),
    };
    let v = match t.split_once('^') {
        Some((b, e)) => {
            let b: BigInt = b.trim().parse().map_err(|_| err())?;
            let e: u32 = e.trim().parse().map_err(|_| err())?;
            b.pow(e)
        }
        None => t.parse().map_err(|_| err())?,
    };
    Ok(if neg { -v } else { v })
}

pub fn cmd_snf(cfg: &PipelineConfig, lambda: Option<&str>) -> Result<Outcome> {
    let k = cfg.functional_k();
    let lambda = match lambda {
        Some(s) => parse_lambda(s)?,
        None => BigInt::from(cfg.p).pow(k + 1),
    };
    let (_, a) = window(cfg, k)?;
    let m = a.matrix.minus_scalar(&lambda);
    let divisors = smith_normal_form(&m).divisors;
    let zeros = divisors.iter().filter(|d| d.is_none()).count();
    let condition = divisors.iter().flatten().copied().max().unwrap_or(0);
    let mut text = vec![
        format!("A - {lambda} modulo {}^{} on the {}x{} window", cfg.p, a.n, a.r, a.r),
        format!("zero elementary divisors: {zeros}"),
        format!("condition number: {condition}"),
    ];
    let mut body = json!({
        "lambda": lambda.to_string(),
        "modulus": a.n,
        "window": a.r,
        "divisors": divisors,
        "zero_divisors": zeros,
        "condition": condition,
    });
    if zeros != 1 {
        text.push("eigenspace is not one-dimensional".into());
        return Ok(Outcome { status: Status::Failed, body, text });
    }
    let prec = a.n - condition;
    let kv = kernel_mod(&m, prec)?;
    // scale so that the second coordinate is 1 when it is a unit
    let kv = kv.normalized_at(1).unwrap_or(kv);
    let head: Vec<String> = kv.entries.iter().take(8).map(|x| x.to_string()).collect();
    text.push(format!("kernel modulo {}^{prec}: ({}, ...)", cfg.p, head.join(", ")));
    body["kernel_precision"] = json!(prec);
    body["kernel"] = json!(kv.entries.iter().map(|x| x.to_string()).collect::<Vec<_>>());
    Ok(Outcome::ok(body, text))
}

pub fn cmd_eisfunctional(cfg: &PipelineConfig) -> Result<Outcome> {
    let k = cfg.functional_k();
    let chi = DirichletChar::trivial(1);
    let ell = critical_functional(k, &chi, cfg.p, cfg.n_matrix)?;
    let b = ell.basis();
    let e = to_padic_series(&eisenstein_crit(k, &chi, cfg.p, b.trunc)?, b.prec);
    let on_ecrit = ell.project(&e, &TailPolicy::UEigen { valuation: k as i64 + 1 })?;
    let diag = if k == 6 { Some(ell.theta_image_diagnostic()?) } else { None };
    let mut text = vec![
        format!("critical eigenvalue {} in weight {}", ell.eigenvalue, k + 2),
        format!("condition {} of modulus {}, functional known modulo {}^{}", ell.condition, ell.modulus, cfg.p, ell.functional_precision()),
        format!("normalisation valuation {}", ell.normalization.valuation().unwrap_or(0)),
        format!("ell(E_crit) = {}", on_ecrit.value.render()),
    ];
    for (i, x) in ell.ell.iter().enumerate().take(6) {
        text.push(format!("  ell_{} = {}", i + 1, x.render()));
    }
    if let Some(d) = &diag {
        text.push(format!("diagnostic on theta^7(Delta/E6^3): {}", d.value.text));
    }
    let body = json!({
        "functional": ell.summary(),
        "eigen_residual_valuation": ell.eigen_residual_valuation(),
        "on_ecrit": on_ecrit.value.to_json(),
        "on_ecrit_audit": on_ecrit.audit,
        "theta_image_diagnostic": diag,
    });
    Ok(Outcome::ok(body, text))
}

pub struct Dataset {
    pub table: Arc<EigenvalueTable>,
    pub input: InputRecord,
}

pub fn input_record(cfg: &PipelineConfig) -> Result<InputRecord> {
    Ok(match &cfg.table {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| Error::Table(format!("{}: {e}", path.display())))?;
            InputRecord { name: path.display().to_string(), sha256: sha256_hex(&bytes) }
        }
        None => InputRecord { name: "fixture:d13_weight_2_8_3_0.csv".into(), sha256: sha256_hex(FIXTURE_CSV.as_bytes()) },
    })
}

pub fn load_dataset(cfg: &PipelineConfig) -> Result<Dataset> {
    let w = cfg.weight_tuple()?;
    let input = input_record(cfg)?;
    let table = match &cfg.table {
        Some(path) => EigenvalueTable::load(path, cfg.d, w)?,
        None => {
            if cfg.d != 13 || cfg.weight != [2, 8, 3, 0] {
                return Err(ConfigError("no --table given; the shipped table is for D = 13, weight 2,8,3,0".into()).into());
            }
            EigenvalueTable::fixture()
        }
    };
    Ok(Dataset { table: Arc::new(table), input })
}

/// The configured prime, or else a prime above `p` whose conjugate is
/// non-ordinary, taking the one with the smallest residue of `sqrt D`.
pub fn choose_p1(cfg: &PipelineConfig, table: &Arc<EigenvalueTable>) -> Result<PrimeIdeal> {
    let field = &table.field;
    if let Some([x, y]) = cfg.p1 {
        let f = field.factor(&QuadElem::from_half(cfg.d, x, y))?;
        let mut above = f.factors.keys().filter(|q| q.ell == cfg.p);
        return match (above.next(), above.next()) {
            (Some(q), None) => Ok(*q),
            _ => Err(ConfigError(format!("({x} + {y} sqrt {})/2 is not divisible by exactly one prime above {}", cfg.d, cfg.p)).into()),
        };
    }
    let primes = field.primes_above(cfg.p);
    if primes.len() != 2 {
        return Err(ConfigError(format!("{} does not split in Q(sqrt {})", cfg.p, cfg.d)).into());
    }
    // both primes can pass the ordinarity test; break ties on the branch of sqrt D
    let root = QuadElem::from_half(cfg.d, 0, 2);
    let mut ranked = vec![];
    for q in &primes {
        let non_ord = FWForm::from_table(table.clone(), cfg.p, *q)?.non_ordinary_p2 == Some(true);
        let branch = field.embed(&root, q, 1)?.residue(1)?;
        ranked.push((!non_ord, branch, *q));
    }
    ranked.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    Ok(ranked[0].2)
}

fn missing_json(e: &Error, n: usize) -> Option<Value> {
    match e {
        Error::MissingPrime { prime, bound } => Some(json!({
            "prime": prime,
            "norm_bound": bound,
            "coefficients": n,
            "message": format!("need primes to norm {bound} for {n} coefficients"),
        })),
        _ => None,
    }
}

pub fn cmd_pullback(cfg: &PipelineConfig, coeffs: usize, prec: u32) -> Result<(Outcome, InputRecord)> {
    let ds = load_dataset(cfg)?;
    let p1 = choose_p1(cfg, &ds.table)?;
    let f = FWForm::from_table(ds.table.clone(), cfg.p, p1)?;
    let mut body = json!({ "p1": p1.to_string(), "coefficients": coeffs, "precision": prec, "coverage": ds.table.coverage_bound() });
    let mut text = vec![format!("p1 = {p1}, table covers norms <= {}", ds.table.coverage_bound())];
    for (name, which) in [("single", vec![0usize]), ("double", vec![0, 1])] {
        let g = f.deplete(&which).theta1_inverse()?;
        let need = g.norm_bound(coeffs as i64);
        let h = g.pullback_iota(coeffs, prec).with_context(|| format!("need primes to norm {need} for {coeffs} coefficients"))?;
        text.push(format!("{name} depletion, licence {:?}:", g.licence.unwrap()));
        for n in 1..=coeffs {
            text.push(format!("  a_{n} = {}", h.coeff(n).unwrap().render()));
        }
        body[name] = json!({
            "licence": format!("{:?}", g.licence.unwrap()),
            "weight": g.weight.to_string(),
            "history": g.history,
            "q_expansion": (1..=coeffs).map(|n| h.coeff(n).unwrap().to_json()).collect::<Vec<_>>(),
        });
    }
    Ok((Outcome::ok(body, text), ds.input))
}

pub fn tail_policy(cfg: &PipelineConfig) -> TailPolicy {
    match cfg.tail {
        TailConfig::None => TailPolicy::None,
        TailConfig::Conjecture { bound, start } => TailPolicy::Conjecture { bound, start },
    }
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteArg {
    Both,
    TheoremB,
    RegAe1,
}

pub fn cmd_regulator(cfg: &PipelineConfig, routes: RouteArg) -> Result<(Outcome, InputRecord)> {
    let ds = load_dataset(cfg)?;
    let p1 = choose_p1(cfg, &ds.table)?;
    let f = FWForm::from_table(ds.table.clone(), cfg.p, p1)?;
    let asai = AsaiData::from_table(&ds.table, p1, 40)?;
    let chi = DirichletChar::trivial(1);
    let ell = critical_functional(cfg.functional_k(), &chi, cfg.p, cfg.n_matrix)?;
    let opts = RegulatorOptions::new(cfg.coeffs, tail_policy(cfg));
    let chosen: Vec<Route> = match routes {
        RouteArg::Both => vec![Route::TheoremB, Route::RegAE1],
        RouteArg::TheoremB => vec![Route::TheoremB],
        RouteArg::RegAe1 => vec![Route::RegAE1],
    };
    let mut status = Status::Ok;
    let mut text = vec![format!("p1 = {p1}, j = {}, k = ({}, {})", cfg.j, asai.k[0], asai.k[1])];
    let mut reports = serde_json::Map::new();
    let mut values = vec![];
    for route in chosen {
        let name = format!("{route:?}");
        let pre = asai.prefactor(cfg.j, route)?;
        match regulator(&f, &asai, &ell, cfg.j, route, &opts) {
            Ok(r) => {
                if let Some(want) = cfg.n_output {
                    if r.audit.certified < want as i64 {
                        status = status_max(status, Status::PrecisionExhausted);
                    }
                }
                text.push(format!("{name}: ell = {}", r.projection.text));
                text.push(format!("{name}: regulator = {}", r.raw_product.text));
                text.push(format!("{name}: certified to O({}^{}), tail assumed: {}", cfg.p, r.audit.certified, r.tail.assumes_tail_bound));
                values.push(r.raw_product.clone());
                reports.insert(name, serde_json::to_value(r)?);
            }
            Err(e) => {
                let partial = json!({
                    "euler": pre.euler.to_json(),
                    "combinatorial": pre.combinatorial.to_string(),
                    "prefactor": pre.value.to_json(),
                    "error": e.to_string(),
                    "missing": missing_json(&e, cfg.coeffs),
                });
                let s = match &e {
                    Error::MissingPrime { .. } | Error::InsufficientTruncation { .. } => Status::IncompleteData,
                    Error::TailUnbounded(_) | Error::InsufficientPrecision { .. } | Error::PrecisionExhausted(_) => Status::PrecisionExhausted,
                    Error::LicenceMissing(_) => Status::Ok,
                    _ => Status::Failed,
                };
                status = status_max(status, s);
                text.push(format!("{name}: prefactor = {}", pre.value.render()));
                text.push(format!("{name}: {e}"));
                if let Error::MissingPrime { bound, .. } = &e {
                    text.push(format!("{name}: need primes to norm {bound} for {} coefficients", cfg.coeffs));
                }
                reports.insert(name, partial);
            }
        }
    }
    let agree = (values.len() == 2).then(|| values[0] == values[1]);
    let body = json!({
        "p1": p1.to_string(),
        "coverage": ds.table.coverage_bound(),
        "functional": { "modulus": ell.modulus, "condition": ell.condition, "precision": ell.functional_precision() },
        "routes": reports,
        "routes_agree": agree,
    });
    Ok((Outcome { status, body, text }, ds.input))
}

fn status_max(a: Status, b: Status) -> Status {
    let rank = |s: Status| match s {
        Status::Ok => 0,
        Status::PrecisionExhausted => 1,
        Status::IncompleteData => 2,
        Status::Failed => 3,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

pub fn cmd_lvalues(cfg: &PipelineConfig, k: Option<u32>, prec: u32) -> Result<Outcome> {
    let k = k.unwrap_or_else(|| cfg.functional_k());
    let chi = DirichletChar::trivial(1);
    let b = bernoulli(k as usize + 2);
    let l = dirichlet_l_nonpos(&chi, k as usize + 2)?;
    let lp = kubota_leopoldt(&chi, k as i64 + 1, cfg.p, prec)?;
    let period = eisenstein_period(k, &chi, cfg.p, prec)?;
    let text = vec![
        format!("B_{} = {b}", k + 2),
        format!("zeta({}) = {l}", -(k as i64) - 1),
        format!("Kubota-Leopoldt L_{}({}) = {}", cfg.p, k + 1, lp.render()),
        format!("Eisenstein period = {}", period.render()),
    ];
    let body = json!({
        "k": k,
        "bernoulli": b.to_string(),
        "l_value": l.to_string(),
        "p_adic_l_value": lp.to_json(),
        "eisenstein_period": period.to_json(),
    });
    Ok(Outcome::ok(body, text))
}

type Check = (&'static str, Box<dyn Fn() -> Result<(bool, String)>>);

fn selftest_checks() -> Vec<Check> {
    vec![
        ("published U(3) block mod 3^10", Box::new(|| {
            let cfg = PipelineConfig { n_matrix: 10, trunc: Some(12), ..Default::default() };
            let (_, a) = window(&cfg, 6)?;
            let got: Vec<((usize, usize), BigInt)> = a.nonzero_entries();
            let want: Vec<((usize, usize), BigInt)> = PUBLISHED_BLOCK_MOD_3_10.iter().map(|&(ij, x)| (ij, BigInt::from(x))).collect();
            Ok((got == want, format!("{} nonzero entries", got.len())))
        })),
        ("generating function agrees mod 3^20", Box::new(|| {
            let (_, a) = window(&PipelineConfig::default(), 6)?;
            let o = UMatrix::from_genfun(a.r, 20);
            let bad = (1..=20).flat_map(|i| (1..=20).map(move |j| (i, j))).filter(|&(i, j)| a.entry(i, j) != o.entry(i, j)).count();
            Ok((bad == 0, format!("{bad} mismatches")))
        })),
        ("condition number 9, kernel mod 3^10", Box::new(|| {
            let out = cmd_snf(&PipelineConfig::default(), None)?;
            let cond = out.body["condition"] == json!(9);
            let ker: Vec<BigInt> = out.body["kernel"].as_array().unwrap().iter().map(|x| x.as_str().unwrap().parse().unwrap()).collect();
            let m = BigInt::from(3).pow(10);
            let head: Vec<BigInt> = ker.iter().take(5).map(|x| x % &m).collect();
            let want: Vec<BigInt> = [42041, 1, 54513, 21870, 0].iter().map(|&x| BigInt::from(x)).collect();
            Ok((cond && head == want, format!("condition {}, kernel head {:?}", out.body["condition"], head)))
        })),
        ("critical Eisenstein coefficients", Box::new(|| {
            let e = eisenstein_crit(6, &DirichletChar::trivial(1), 3, 4)?;
            let got: Vec<String> = (1..=4).map(|n| e.coeff(n).unwrap().to_string()).collect();
            Ok((got == ["1", "129", "2187", "16513"], got.join(", ")))
        })),
        ("slope <= 7 is two-dimensional", Box::new(|| {
            let cfg = PipelineConfig { n_matrix: 40, ..Default::default() };
            let (_, a) = window(&cfg, 6)?;
            let s = a.slope_leq(7);
            Ok((s.dimension == 2 && s.certified, format!("dimension {}, certified {}", s.dimension, s.certified)))
        })),
        ("functional normalised on E_crit", Box::new(|| {
            let out = cmd_eisfunctional(&PipelineConfig::default())?;
            let v = &out.body["on_ecrit"]["text"];
            Ok((v.as_str().is_some_and(|s| s.starts_with("1 + O(")), v.to_string()))
        })),
        ("symbolic identities", Box::new(|| {
            let proof = identity_check()?;
            let brackets = (-6..=8).all(|r1| (-2..=8).all(|r2| (0..=5).all(|n| bracket_identity_holds(r1, r2, n))));
            Ok((proof.b_all_x_gt_y && proof.b_prime_all_y_gt_x && brackets, format!("b monomials {:?}", proof.b_monomials)))
        })),
        ("fixture pullback matches exact route", Box::new(|| {
            let cfg = PipelineConfig::default();
            let ds = load_dataset(&cfg)?;
            let p1 = choose_p1(&cfg, &ds.table)?;
            let g = FWForm::from_table(ds.table.clone(), 3, p1)?.deplete(&[0]).theta1_inverse()?;
            let adic = g.pullback_iota(3, 15)?;
            let exact = g.pullback_exact(3)?;
            let mut ok = true;
            for n in 1..=3 {
                let e: PadicScalar = ds.table.field.embed(exact.coeff(n).unwrap(), &p1, 20)?;
                ok &= adic.coeff(n).unwrap().residue(15)? == e.residue(15)?;
            }
            Ok((ok, format!("p1 = {p1}")))
        })),
        ("depletion decomposition on fixture", Box::new(|| {
            let cfg = PipelineConfig::default();
            let ds = load_dataset(&cfg)?;
            let p1 = choose_p1(&cfg, &ds.table)?;
            let r = depletion_factor_check(&ds.table, p1, ds.table.coverage_bound(), 4)?;
            Ok((r.decomposition_holds && r.u_cubed_kills, format!("{} ideals", r.ideals_checked)))
        })),
        ("Eisenstein period constant", Box::new(|| {
            let chi = DirichletChar::trivial(1);
            let period = eisenstein_period(6, &chi, 3, 15)?;
            let z = kubota_leopoldt(&chi, 7, 3, 15)?;
            let want = z.mul(&PadicScalar::from_rational(3, &BigRational::new((-3).into(), 4.into()), 30));
            let d = period.sub(&want);
            Ok((d.truncate_abs(12).is_zero(), period.render()))
        })),
    ]
}

pub fn cmd_selftest() -> Result<Outcome> {
    let mut status = Status::Ok;
    let mut text = vec![];
    let mut rows = vec![];
    for (name, check) in selftest_checks() {
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e:#}")),
        };
        if !pass {
            status = Status::Failed;
        }
        text.push(format!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" }));
        rows.push(json!({ "name": name, "pass": pass, "detail": detail }));
    }
    Ok(Outcome { status, body: json!({ "checks": rows }), text })
}
