use acw_core::catalog::{monopole_s2, CocycleFixture, Tamper};
use acw_core::cocycle::*;
use acw_core::coeff::Expr;

fn opts(samples: usize) -> SampleOptions {
    SampleOptions {
        samples,
        ..SampleOptions::default()
    }
}

fn rotation(angle: &Expr) -> ExprMatrix {
    let (c, s) = (angle.cos(), angle.sin());
    ExprMatrix::new(2, vec![c.clone(), s.neg(), s, c]).unwrap()
}

fn chern(fx: &CocycleFixture) -> f64 {
    chern_number(&fx.cover, &fx.data, &QuadratureOptions::default()).unwrap()
}

#[test]
fn trivial_bundle_passes_with_zero_charge() {
    let fx = monopole_s2(0, Tamper::None, false).unwrap();
    for (k, g) in &fx.data.g {
        for (r, e) in g.entries().iter().enumerate() {
            let expected = if r % 3 == 0 { Expr::one() } else { Expr::zero() };
            assert_eq!(e, &expected, "g{k:?} is the identity");
        }
    }
    assert!(verify_cocycle(&fx.cover, &fx.data, &opts(200)).unwrap().passed());
    assert!(glue_check(&fx.cover, &fx.data, &opts(200)).unwrap().passed());
    assert!(chern(&fx).abs() < 1e-6);
}

#[test]
fn monopoles_pass_and_have_integer_charge() {
    for n in -2..=2 {
        let fx = monopole_s2(n, Tamper::None, true).unwrap();
        let c = verify_cocycle(&fx.cover, &fx.data, &opts(1000)).unwrap();
        assert!(c.passed(), "n={n}: cocycle {:?}", c.worst());
        let g = glue_check(&fx.cover, &fx.data, &opts(1000)).unwrap();
        assert!(g.passed(), "n={n}: glue {:?}", g.worst());
        let ch = chern(&fx);
        assert!((ch - n as f64).abs() < 1e-6, "n={n}: chern {ch}");
    }
}

#[test]
fn tampered_transition_fails_with_witness() {
    let fx = monopole_s2(1, Tamper::Transition, false).unwrap();
    let rep = verify_cocycle(&fx.cover, &fx.data, &opts(300)).unwrap();
    assert!(!rep.passed());
    let worst = rep.worst().unwrap();
    assert!(worst.max_residual > 1e-3);
    assert_eq!(worst.witness.len(), 2);
}

#[test]
fn tampered_potential_fails_gluing_and_gives_fractional_charge() {
    let fx = monopole_s2(1, Tamper::Potential, false).unwrap();
    assert!(verify_cocycle(&fx.cover, &fx.data, &opts(300)).unwrap().passed());
    let glue = glue_check(&fx.cover, &fx.data, &opts(300)).unwrap();
    assert!(!glue.passed());
    assert!(glue.max_residual() > 1e-3);
    let ch = chern(&fx);
    assert!((ch - ch.round()).abs() > 0.1, "chern {ch} should be flagged as non-integer");
}

#[test]
fn patchwise_isomorphism_preserves_verdicts_and_charge() {
    for n in [-1, 2] {
        let fx = monopole_s2(n, Tamper::None, true).unwrap();
        let phi = Expr::coord("phi");
        let theta = Expr::coord("theta");
        let h = vec![rotation(&phi), ExprMatrix::identity(2), rotation(&theta.scale_int(3))];
        let h_inv = vec![rotation(&phi.neg()), ExprMatrix::identity(2), rotation(&theta.scale_int(-3))];
        let moved = gauge_transform(&fx.cover, &fx.data, &h, &h_inv).unwrap();
        assert!(verify_cocycle(&fx.cover, &moved, &opts(300)).unwrap().passed());
        assert!(glue_check(&fx.cover, &moved, &opts(300)).unwrap().passed());
        let (a, b) = (chern(&fx), chern(&CocycleFixture { data: moved, ..fx.clone() }));
        assert!((a - b).abs() < 1e-6, "chern {a} vs {b}");
    }
}

#[test]
fn forgetting_the_higgs_field_keeps_the_group_residuals() {
    let with = monopole_s2(2, Tamper::Transition, true).unwrap();
    let without = with.data.forget_higgs();
    let o = opts(200);
    let pairs = [
        (verify_cocycle(&with.cover, &with.data, &o).unwrap(), verify_cocycle(&with.cover, &without, &o).unwrap()),
        (glue_check(&with.cover, &with.data, &o).unwrap(), glue_check(&with.cover, &without, &o).unwrap()),
    ];
    for (full, bare) in &pairs {
        assert!(bare.checks.len() < full.checks.len());
        for check in &bare.checks {
            let same = full.checks.iter().find(|c| c.name == check.name).expect("group check kept");
            assert_eq!(same, check);
        }
    }
}

#[test]
fn higgs_mismatch_is_detected() {
    let mut fx = monopole_s2(1, Tamper::None, true).unwrap();
    let h = fx.data.connections[0].higgs.as_mut().unwrap();
    h[1] = h[1].neg();
    let rep = verify_cocycle(&fx.cover, &fx.data, &opts(200)).unwrap();
    assert!(!rep.passed());
}
