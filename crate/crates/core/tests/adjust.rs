use std::collections::BTreeMap;

use acw_core::adjust::*;
use acw_core::algebroid::{validate, AdjustmentData, AlgebroidSpec};
use acw_core::catalog::*;
use acw_core::coeff::{Chart, Expr};
use acw_core::tensor::Tensor;
use proptest::prelude::*;

fn algebroid_fixture(name: &str) -> AlgebroidFixture {
    instantiate(name, &BTreeMap::new())
        .unwrap()
        .algebroid()
        .expect("algebroid fixture")
        .clone()
}

fn nonzero(t: &Tensor) -> bool {
    !t.is_exact_zero()
}

#[test]
fn nonstrict_fixture_is_the_first_search_hit() {
    let found = search_nonstrict_zeta(NONSTRICT_SEARCH_SEED, 1000).expect("search finds a candidate");
    assert_eq!(found, NONSTRICT_ZETA.to_vec());
}

#[test]
fn nonstrict_fixture_is_covariant_but_not_strict() {
    let fx = algebroid_fixture("nonstrict_tm_R3");
    let v = classify(&fx.spec, &fx.adj);
    assert_eq!(v.tier, Tier::Covariant);
    let strict = v.condition(Condition::Strict).unwrap();
    assert!(!strict.holds());
    assert!(matches!(strict.verdict, acw_core::coeff::ZeroVerdict::NonZero { .. }));
    assert!(strict.witness_index.is_some());
}

#[test]
fn crosscheck_is_proportional_by_the_fixed_factor() {
    for name in ["nonstrict_tm_R3", "lab_su2_R3", "tm_torsion_R2", "nonplain_tm_R2", "action_so3_R3"] {
        let fx = algebroid_fixture(name);
        let cc = nabla_zeta_crosscheck(&fx.spec, &fx.adj);
        assert!(cc.proportional, "{name}");
        assert_eq!(cc.strict_residual.scale(&Expr::int(NABLA_ZETA_FACTOR)), cc.nabla_zeta_residual, "{name}");
    }
    let fx = algebroid_fixture("nonstrict_tm_R3");
    let cc = nabla_zeta_crosscheck(&fx.spec, &fx.adj);
    assert!(nonzero(&cc.nabla_zeta_residual));
}

#[test]
fn definition_form_of_strictness_is_six_times_the_reported_residual() {
    let fx = algebroid_fixture("nonstrict_tm_R3");
    let reported = strict_residual(&fx.spec, &fx.adj);
    let definition = strict_residual_definition(&fx.spec, &fx.adj);
    assert_eq!(reported.scale(&Expr::int(6)), definition);
}

#[test]
fn fixture_tiers() {
    for (name, tier) in [
        ("lab_su2_R3", Tier::Strict),
        ("tm_torsion_R2", Tier::Strict),
        ("action_so3_R3", Tier::Strict),
        ("action_lab_su2_R6", Tier::Strict),
        ("nonplain_tm_R2", Tier::None),
    ] {
        let fx = algebroid_fixture(name);
        let v = classify(&fx.spec, &fx.adj);
        assert_eq!(v.tier, tier, "{name}");
        assert_eq!(v.confidence, Confidence::Exact, "{name}");
    }
}

#[test]
fn torsion_primitive_of_either_sign_is_strict_on_the_plane() {
    let (spec, adj) = tm_torsion_r2().unwrap();
    assert!(classify(&spec, &adj).is_strict());
    let flipped = adj.scale_zeta(&Expr::int(-1));
    assert!(classify(&spec, &flipped).is_strict());
}

#[test]
fn scaled_lab_primitive_is_not_covariant() {
    let fx = algebroid_fixture("lab_su2_R3");
    assert!(check_covariant(&fx.spec, &fx.adj).is_covariant());
    let doubled = fx.adj.scale_zeta(&Expr::int(2));
    let v = check_covariant(&fx.spec, &doubled);
    assert!(v.is_plain());
    assert!(!v.is_covariant());
    let dropped = fx.adj.with_zeta(Tensor::zeros(&[3, 3, 3]));
    assert!(!check_covariant(&fx.spec, &dropped).is_covariant());
}

#[test]
fn lab_connection_is_curved() {
    let fx = algebroid_fixture("lab_su2_R3");
    assert!(nonzero(&acw_core::algebroid::r_nabla(&fx.spec, &fx.adj)));
}

#[test]
fn pullbacks_of_covariant_adjustments_are_covariant() {
    for name in ["action_so3_R3", "action_lab_su2_R6"] {
        let fx = algebroid_fixture(name);
        let src = fx.pullback.as_ref().expect("pullback fixture");
        assert!(check_covariant(&src.spec, &src.adj).is_covariant(), "{name} source");
        let pulled = pullback_adjustment(&src.spec, &src.adj, &fx.spec, &src.psi).unwrap();
        assert_eq!(pulled.omega_tensor(), fx.adj.omega_tensor());
        assert_eq!(pulled.zeta_tensor(), fx.adj.zeta_tensor());
        let v = check_covariant(&fx.spec, &pulled);
        assert!(v.is_covariant(), "{name}");
        assert_eq!(v.confidence, Confidence::Exact);
    }
}

#[test]
fn pullback_of_a_non_covariant_adjustment_fails() {
    let fx = algebroid_fixture("action_lab_su2_R6");
    let src = fx.pullback.unwrap();
    let bad = src.adj.scale_zeta(&Expr::int(2));
    assert!(!check_covariant(&src.spec, &bad).is_covariant());
    let pulled = pullback_adjustment(&src.spec, &bad, &fx.spec, &src.psi).unwrap();
    assert!(!check_covariant(&fx.spec, &pulled).is_covariant());
}

#[test]
fn pullback_rejects_wrong_map_arity() {
    let fx = algebroid_fixture("action_lab_su2_R6");
    let src = fx.pullback.unwrap();
    let x = fx.spec.base().coord(0);
    assert!(pullback_adjustment(&src.spec, &src.adj, &fx.spec, &[x]).is_err());
}

#[test]
fn point_lie_algebra_is_vacuously_strict() {
    let spec = AlgebroidSpec::lie_algebra(3, epsilon(1)).unwrap();
    assert!(validate(&spec).passed());
    assert!(classify(&spec, &AdjustmentData::zero(&spec)).is_strict());
}

fn background() -> impl Strategy<Value = Vec<Vec<Expr>>> {
    let base = Chart::numbered("R3", "m", 3);
    let term = (-2i64..=2, 0u32..=2, 0usize..3, 0usize..3);
    let entry = prop::collection::vec(term, 0..3).prop_map(move |terms| {
        let mut acc = Expr::zero();
        for (c, deg, i, j) in terms {
            let mut m = Expr::int(c);
            for k in 0..deg {
                m = m.mul(&base.coord(if k == 0 { i } else { j }));
            }
            acc = acc.add(&m);
        }
        acc
    });
    prop::collection::vec(prop::collection::vec(entry, 3), 3)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn lab_with_random_background_is_strict_and_pulls_back(a in background()) {
        let (g, g_adj) = lab_su2_r3(&a).unwrap();
        let v = classify(&g, &g_adj);
        prop_assert_eq!(v.tier, Tier::Strict);
        let action = algebroid_fixture("action_lab_su2_R6");
        let psi = action.pullback.unwrap().psi;
        let pulled = pullback_adjustment(&g, &g_adj, &action.spec, &psi).unwrap();
        prop_assert!(check_covariant(&action.spec, &pulled).is_covariant());
    }
}
