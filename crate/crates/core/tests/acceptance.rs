//! Acceptance suite: one pass/fail line per criterion, with timings.

#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use acw_core::adjust::{check_covariant, classify, nabla_zeta_crosscheck, pullback_adjustment, Tier};
use acw_core::algebroid::{basic_curvature, build_ce, AdjustmentData, AlgebroidSpec, WeilAlgebra, WeilPresentation};
use acw_core::catalog::*;
use acw_core::cocycle::{chern_number, glue_check, verify_cocycle, QuadratureOptions, Region, SampleOptions};
use acw_core::coeff::{Chart, Expr};
use acw_core::gauge::*;
use acw_core::gca::GradedElem;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn params(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn algebroid(name: &str, p: &[(&str, String)]) -> AlgebroidFixture {
    instantiate(name, &params(p)).unwrap().algebroid().unwrap().clone()
}

fn all_exact(xs: &[GradedElem]) -> bool {
    xs.iter().all(|x| x.zero_verdict().is_exact())
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn validated_fixtures() -> Vec<(String, AlgebroidFixture)> {
    let mut out = vec![
        ("so3".to_string(), algebroid("so3", &[])),
        ("su2".to_string(), algebroid("su2", &[])),
    ];
    for r in 1..=4 {
        out.push((format!("abelian(r={r})"), algebroid("abelian", &[("r", r.to_string())])));
    }
    for n in 1..=3 {
        out.push((format!("tangent(n={n})"), algebroid("tangent", &[("n", n.to_string())])));
    }
    out.push(("action_so3_R3".to_string(), algebroid("action_so3_R3", &[])));
    out.push(("lab_su2_R3".to_string(), algebroid("lab_su2_R3", &[])));
    out
}

fn nilpotency() -> Outcome {
    let mut slowest = Duration::ZERO;
    for (name, fx) in validated_fixtures() {
        let t = Instant::now();
        let res: Vec<GradedElem> = build_ce(&fx.spec).square_residuals().into_iter().map(|(_, r)| r).collect();
        let dt = t.elapsed();
        slowest = slowest.max(dt);
        if !all_exact(&res) {
            return Err(format!("{name}: CE square not exactly zero"));
        }
        if dt > Duration::from_secs(10) {
            return Err(format!("{name}: took {}", secs(dt)));
        }
    }
    let broken = algebroid("broken_jacobi", &[]);
    let bad = build_ce(&broken.spec).square_check();
    if !bad.iter().any(|(_, r)| matches!(r.zero_verdict(), acw_core::coeff::ZeroVerdict::NonZero { .. })) {
        return Err("broken_jacobi: no NonZero residual".into());
    }
    Ok(format!("11 fixtures exact, broken_jacobi NonZero on {}; slowest {}", bad[0].0, secs(slowest)))
}

fn weil_property() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0002);
    for i in 0..100 {
        let spec = random_algebroid(&mut rng, 3, 3);
        let adj = random_adjustment(&mut rng, &spec, 2);
        let w = WeilAlgebra::build_unchecked(&spec, &adj, WeilPresentation::Shifted);
        let res: Vec<GradedElem> = w.differential().square_residuals().into_iter().map(|(_, r)| r).collect();
        if !all_exact(&res) {
            return Err(format!("instance {i}: Weil square not exactly zero"));
        }
    }
    let dt = t.elapsed();
    if dt > Duration::from_secs(300) {
        return Err(format!("100 instances took {}", secs(dt)));
    }
    Ok(format!("100 instances exact in {}", secs(dt)))
}

fn oracle_pair() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0003);
    for i in 0..50 {
        let spec = random_algebroid(&mut rng, 3, 3);
        let adj = random_adjustment(&mut rng, &spec, 2);
        let coord = basic_curvature(&spec, &adj);
        let inv = Invariant { spec: &spec, adj: &adj }.rbas_tensor();
        if coord != inv {
            return Err(format!("instance {i}: coordinate and invariant basic curvature differ"));
        }
    }
    Ok(format!("50 instances equal in {}", secs(t.elapsed())))
}

fn ordinary_gauge_theory() -> Outcome {
    let t = Instant::now();
    let fx = algebroid("su2", &[]);
    let (spec, adj) = (&fx.spec, &fx.adj);
    if !adj.omega_tensor().is_exact_zero() || !adj.zeta_tensor().is_exact_zero() {
        return Err("su2 fixture carries a connection".into());
    }
    let patch = Patch::new(4);
    let conn = Connection::generic(spec, &patch);
    let c = generic_parameter(spec, &patch, "c");
    let curv = curvature_components(spec, adj, &patch, &conn);
    let gv = gauge_variation(spec, adj, &patch, &conn, &c);
    let bracket = |x: &[GradedElem], y: &[Expr], al: usize| {
        let mut acc = patch.zero();
        for be in 0..3 {
            for ga in 0..3 {
                let k = spec.f(al, be, ga);
                if !k.is_zero() {
                    acc = acc.add(&x[be].scale(&k.mul(&y[ga])));
                }
            }
        }
        acc
    };
    let mut res = Vec::new();
    for al in 0..3 {
        let mut aa = patch.zero();
        for be in 0..3 {
            for ga in 0..3 {
                let k = spec.f(al, be, ga);
                if !k.is_zero() {
                    aa = aa.add(&conn.a[be].mul(&conn.a[ga]).scale(k));
                }
            }
        }
        let f_expected = patch.d(&conn.a[al]).add(&aa.scale(&Expr::frac(1, 2)));
        res.push(curv.f[al].sub(&f_expected));
        let da = patch.d(&patch.scalar(c[al].clone())).add(&bracket(&conn.a, &c, al));
        res.push(gv.a[al].sub(&da));
        res.push(gv.f_linear[al].sub(&bracket(&curv.f, &c, al)));
    }
    if !all_exact(&res) {
        return Err("an identity has a nonzero residual".into());
    }
    Ok(format!("F, δA, δF exact on a 4-dimensional patch in {}", secs(t.elapsed())))
}

fn closure() -> Outcome {
    let t = Instant::now();
    let patch = Patch::new(2);
    let mut names = Vec::new();
    let mut plain: Vec<(String, AlgebroidFixture)> = validated_fixtures();
    for n in ["tm_torsion_R2", "nonstrict_tm_R3"] {
        plain.push((n.to_string(), algebroid(n, &[])));
    }
    for (name, fx) in &plain {
        if !classify(&fx.spec, &fx.adj).is_plain() {
            return Err(format!("{name} is not plain"));
        }
        let conn = Connection::generic(&fx.spec, &patch);
        let c1 = generic_parameter(&fx.spec, &patch, "ca");
        let c2 = generic_parameter(&fx.spec, &patch, "cb");
        let res = closure_residual(&fx.spec, &fx.adj, &patch, &conn, &c1, &c2);
        if !res.residual_phi.iter().all(Expr::is_zero) || !all_exact(&res.residual_a) {
            return Err(format!("{name}: closure residual nonzero"));
        }
        names.push(name.clone());
    }
    let fx = algebroid("nonplain_tm_R2", &[]);
    let conn = Connection::generic(&fx.spec, &patch);
    let c1 = generic_parameter(&fx.spec, &patch, "ca");
    let c2 = generic_parameter(&fx.spec, &patch, "cb");
    let (res, diff) = closure_check(&fx.spec, &fx.adj, &patch, &conn, &c1, &c2);
    if all_exact(&res.residual_a) {
        return Err("nonplain_tm_R2: closure residual unexpectedly zero".into());
    }
    if !all_exact(&diff) {
        return Err("nonplain_tm_R2: residual differs from the assembled Rbas term".into());
    }
    Ok(format!(
        "{} plain fixtures exact; nonplain_tm_R2 residual = {}·Rbas term exactly; {}",
        names.len(),
        CLOSURE_FACTOR,
        secs(t.elapsed())
    ))
}

fn bianchi_covariance() -> Outcome {
    let mut parts = Vec::new();
    for name in ["action_so3_R3", "lab_su2_R3"] {
        let t = Instant::now();
        let fx = algebroid(name, &[]);
        let patch = Patch::new(4);
        let conn = Connection::generic(&fx.spec, &patch);
        let [b1, b2] = bianchi_residuals(&fx.spec, &fx.adj, &patch, &conn);
        let c = generic_parameter(&fx.spec, &patch, "c");
        let cov = covariance_check(&fx.spec, &fx.adj, &patch, &conn, &c);
        let dt = t.elapsed();
        if !all_exact(&b1) || !all_exact(&b2) {
            return Err(format!("{name}: Bianchi residual nonzero"));
        }
        if !all_exact(&cov) {
            return Err(format!("{name}: covariance residual nonzero"));
        }
        if dt > Duration::from_secs(60) {
            return Err(format!("{name}: took {}", secs(dt)));
        }
        parts.push(format!("{name} {}", secs(dt)));
    }
    Ok(format!("exact on patch dim 4 ({})", parts.join(", ")))
}

fn tiers() -> Outcome {
    let t = Instant::now();
    for name in ["lab_su2_R3", "tm_torsion_R2"] {
        let fx = algebroid(name, &[]);
        if classify(&fx.spec, &fx.adj).tier != Tier::Strict {
            return Err(format!("{name} is not strict"));
        }
    }
    let fx = algebroid("nonstrict_tm_R3", &[]);
    let v = classify(&fx.spec, &fx.adj);
    if v.tier != Tier::Covariant {
        return Err(format!("nonstrict_tm_R3 has tier {:?}", v.tier));
    }
    for name in ["lab_su2_R3", "tm_torsion_R2", "nonstrict_tm_R3"] {
        let fx = algebroid(name, &[]);
        let cc = nabla_zeta_crosscheck(&fx.spec, &fx.adj);
        if !cc.proportional {
            return Err(format!("{name}: crosscheck not proportional"));
        }
    }
    if nabla_zeta_crosscheck(&fx.spec, &fx.adj).strict_residual.is_exact_zero() {
        return Err("nonstrict_tm_R3: strict residual vanishes".into());
    }
    Ok(format!(
        "lab_su2_R3, tm_torsion_R2 strict; nonstrict_tm_R3 covariant only; crosscheck factor {}; {}",
        acw_core::adjust::NABLA_ZETA_FACTOR,
        secs(t.elapsed())
    ))
}

fn cech() -> Outcome {
    let opts = SampleOptions {
        samples: 1000,
        seed: 0xacce_0008,
        tolerance: 1e-9,
    };
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for n in -2..=2 {
        let t = Instant::now();
        let fx = monopole_s2(n, Tamper::None, true).map_err(|e| e.to_string())?;
        let c = verify_cocycle(&fx.cover, &fx.data, &opts).map_err(|e| e.to_string())?;
        let g = glue_check(&fx.cover, &fx.data, &opts).map_err(|e| e.to_string())?;
        let ch = chern_number(&fx.cover, &fx.data, &QuadratureOptions::default()).map_err(|e| e.to_string())?;
        let dt = t.elapsed();
        slowest = slowest.max(dt);
        worst = worst.max(c.max_residual()).max(g.max_residual());
        if !c.passed() || !g.passed() {
            return Err(format!("n={n}: max residual {:e}", c.max_residual().max(g.max_residual())));
        }
        if (ch - n as f64).abs() >= 1e-6 {
            return Err(format!("n={n}: chern number {ch}"));
        }
        if dt > Duration::from_secs(5) {
            return Err(format!("n={n}: took {}", secs(dt)));
        }
    }
    Ok(format!("n = −2..2, max residual {worst:.1e}, slowest {}", secs(slowest)))
}

fn derivative_audit() -> Outcome {
    let t = Instant::now();
    let opts = SpotOptions::default();
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut fixtures: Vec<Fixture> = Vec::new();
    for name in [
        "so3",
        "su2",
        "action_so3_R3",
        "lab_su2_R3",
        "action_lab_su2_R6",
        "tm_torsion_R2",
        "nonplain_tm_R2",
        "nonstrict_tm_R3",
        "broken_jacobi",
    ] {
        fixtures.push(instantiate(name, &BTreeMap::new()).unwrap());
    }
    for r in 1..=4 {
        fixtures.push(instantiate("abelian", &params(&[("r", r.to_string())])).unwrap());
    }
    for n in 1..=3 {
        fixtures.push(instantiate("tangent", &params(&[("n", n.to_string())])).unwrap());
    }
    for n in -2..=2 {
        fixtures.push(instantiate("monopole_S2", &params(&[("n", n.to_string()), ("higgs", "true".into())])).unwrap());
    }
    for fx in &fixtures {
        let rep = spot_check(fx, 9, &opts).map_err(|e| e.to_string())?;
        if !rep.derivatives.passed() {
            return Err(format!("{}: {:?}", fx.name, rep.derivatives.failures[0]));
        }
        checked += rep.derivatives.checked;
        worst = worst.max(rep.derivatives.max_error);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0003);
    for _ in 0..50 {
        let spec = random_algebroid(&mut rng, 3, 3);
        let adj = random_adjustment(&mut rng, &spec, 2);
        let chart = spec.base();
        let region = Region::new(vec![-2.0; chart.dim()], vec![2.0; chart.dim()]);
        let mut prng = ChaCha8Rng::seed_from_u64(rng.gen());
        let xs: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..region.dim()).map(|k| prng.gen_range(region.lo[k]..region.hi[k])).collect())
            .collect();
        let rep = derivative_integrity(&structure_functions(&spec, &adj), chart, &xs, &opts);
        if !rep.passed() {
            return Err(format!("random instance: {:?}", rep.failures[0]));
        }
        checked += rep.checked;
        worst = worst.max(rep.max_error);
    }
    Ok(format!("{checked} partials at 50 points, max rel. error {worst:.1e}, {}", secs(t.elapsed())))
}

fn pullback() -> Outcome {
    let t = Instant::now();
    let mut count = 0;
    let mut sources: Vec<(String, AlgebroidFixture, AlgebroidSpec, AdjustmentData)> = Vec::new();
    for name in ["action_so3_R3", "action_lab_su2_R6"] {
        let fx = algebroid(name, &[]);
        let src = fx.pullback.clone().unwrap();
        sources.push((name.to_string(), fx, src.spec, src.adj));
    }
    let action = algebroid("action_lab_su2_R6", &[]);
    let base = Chart::numbered("R3", "m", 3);
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0010);
    for k in 0..5 {
        let a: Vec<Vec<Expr>> = (0..3)
            .map(|_| (0..3).map(|_| random_poly(&mut rng, &base, 2, 0.3)).collect())
            .collect();
        let (g, g_adj) = lab_su2_r3(&a).map_err(|e| e.to_string())?;
        sources.push((format!("random background {k}"), action.clone(), g, g_adj));
    }
    for (name, fx, src_spec, src_adj) in &sources {
        let psi = fx.pullback.as_ref().unwrap().psi.clone();
        let source_ok = check_covariant(src_spec, src_adj);
        let pulled = pullback_adjustment(src_spec, src_adj, &fx.spec, &psi).map_err(|e| e.to_string())?;
        let v = check_covariant(&fx.spec, &pulled);
        if source_ok.is_covariant() && !(v.is_covariant() && v.condition(acw_core::adjust::Condition::Covariant).unwrap().verdict.is_exact()) {
            return Err(format!("{name}: pulled-back adjustment is not exactly covariant"));
        }
        if source_ok.is_covariant() {
            count += 1;
        }
    }
    Ok(format!("{count} covariant sources pull back to exactly covariant adjustments; {}", secs(t.elapsed())))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("nilpotency suite", nilpotency),
        ("Weil nilpotency property", weil_property),
        ("basic curvature oracle pair", oracle_pair),
        ("ordinary gauge theory reduction", ordinary_gauge_theory),
        ("closure", closure),
        ("Bianchi and covariance", bianchi_covariance),
        ("adjustment tiers", tiers),
        ("Čech quantitative", cech),
        ("derivative integrity", derivative_audit),
        ("pullback adjustment", pullback),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(msg) => println!("criterion {:>2} {name}: PASS ({msg})", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({msg})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
