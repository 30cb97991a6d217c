mod common;

use acw_core::algebroid::{AdjustmentData, AlgebroidSpec};
use acw_core::coeff::{Chart, Expr};
use acw_core::gauge::*;
use acw_core::gca::GradedElem;
use acw_core::tensor::Tensor;
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tangent(n: usize) -> AlgebroidSpec {
    let base = Chart::numbered("Rn", "m", n);
    let anchor = Tensor::from_fn(&[n, n], |i| Expr::int((i[0] == i[1]) as i64));
    AlgebroidSpec::new(base, n, anchor, Tensor::zeros(&[n, n, n])).unwrap()
}

fn nonplain_tm_r2() -> (AlgebroidSpec, AdjustmentData) {
    let spec = tangent(2);
    let mut omega = Tensor::zeros(&[2, 2, 2]);
    omega.set(&[0, 1, 0], spec.base().coord(1));
    let adj = AdjustmentData::new(&spec, omega, Tensor::zeros(&[2, 2, 2])).unwrap();
    (spec, adj)
}

fn assert_all_zero(xs: &[GradedElem], what: &str) {
    for (i, x) in xs.iter().enumerate() {
        assert!(x.is_zero(), "{what}[{i}] = {x}");
    }
}

fn assert_all_eq(xs: &[GradedElem], ys: &[GradedElem], what: &str) {
    for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
        let d = x.sub(y);
        assert!(d.is_zero(), "{what}[{i}] differs by {d}");
    }
}

fn random_instances(seed: u64, count: usize) -> Vec<(AlgebroidSpec, AdjustmentData)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let spec = random_algebroid(&mut rng, 2, 2);
            let adj = random_adjustment(&mut rng, &spec, 1);
            (spec, adj)
        })
        .collect()
}

#[test]
fn mechanical_variations_match_displays() {
    for (spec, adj) in random_instances(31, 6) {
        let patch = Patch::new(2);
        let cfg = PatchFieldConfig::generic(&spec, &patch);
        let ghosts = GhostConfig::generic(&spec, &patch);
        let mech = full_variation(&spec, &adj, &patch, &cfg, &ghosts);
        let disp = full_variation_display(&spec, &adj, &patch, &cfg, &ghosts);
        for (i, (a, b)) in mech.phi.iter().zip(&disp.phi).enumerate() {
            assert_eq!(a, b, "δφ[{i}]");
        }
        assert_all_eq(&mech.a_g, &disp.a_g, "δA_g");
        assert_all_eq(&mech.a_m, &disp.a_m, "δA_M");
        assert_all_eq(&mech.lambda, &disp.lambda, "δλ");
        assert_eq!(mech.c_g, disp.c_g, "δc_g");
        assert_eq!(mech.c_m, disp.c_m, "δc_M");
        assert_all_eq(&mech.b, &disp.b, "δB");
    }
}

#[test]
fn truncated_full_variation_is_gauge_variation() {
    for (spec, adj) in random_instances(32, 4) {
        let patch = Patch::new(2);
        let conn = Connection::generic(&spec, &patch);
        let curv = curvature_components(&spec, &adj, &patch, &conn);
        let cfg = PatchFieldConfig::from_curvatures(&conn, &curv);
        let ghosts = GhostConfig::generic(&spec, &patch).truncated(&patch);
        let full = full_variation(&spec, &adj, &patch, &cfg, &ghosts);
        let gv = gauge_variation(&spec, &adj, &patch, &conn, &ghosts.c_g);
        assert_all_eq(&full.a_g, &gv.a, "δA");
        assert_eq!(full.phi, gv.phi);
    }
}

#[test]
fn substituted_flat_residuals() {
    for (spec, adj) in random_instances(33, 4) {
        let patch = Patch::new(3);
        let conn = Connection::generic(&spec, &patch);
        let curv = curvature_components(&spec, &adj, &patch, &conn);
        let cfg = PatchFieldConfig::from_curvatures(&conn, &curv);
        let [r1, r2, r3, r4] = flat_residuals(&spec, &adj, &patch, &cfg);
        assert_all_zero(&r1, "flat φ");
        assert_all_zero(&r3, "flat A_g");
        assert_all_zero(&r2, "flat A_M");
        assert_all_zero(&r4, "flat B");
    }
}

#[test]
fn displayed_delta_e_matches_linearization() {
    for (spec, adj) in random_instances(34, 5) {
        let patch = Patch::new(2);
        let conn = Connection::generic(&spec, &patch);
        let c = generic_parameter(&spec, &patch, "c");
        let gv = gauge_variation(&spec, &adj, &patch, &conn, &c);
        assert_all_eq(&gv.e_display, &gv.e_linear, "δE");
    }
}

#[test]
fn closure_on_nonplain_tangent_plane() {
    let (spec, adj) = nonplain_tm_r2();
    let patch = Patch::new(2);
    let conn = Connection::generic(&spec, &patch);
    let c1 = generic_parameter(&spec, &patch, "ca");
    let c2 = generic_parameter(&spec, &patch, "cb");
    let (res, diff) = closure_check(&spec, &adj, &patch, &conn, &c1, &c2);
    for p in &res.residual_phi {
        assert!(p.is_zero());
    }
    assert!(res.residual_a.iter().any(|x| !x.is_zero()), "closure should fail off plain adjustments");
    assert_all_zero(&diff, "closure − κ·Rbas");
}

#[test]
fn closure_residual_is_rbas_term_on_random_instances() {
    for (spec, adj) in random_instances(35, 3) {
        let patch = Patch::new(2);
        let conn = Connection::generic(&spec, &patch);
        let c1 = generic_parameter(&spec, &patch, "ca");
        let c2 = generic_parameter(&spec, &patch, "cb");
        let (res, diff) = closure_check(&spec, &adj, &patch, &conn, &c1, &c2);
        for p in &res.residual_phi {
            assert!(p.is_zero());
        }
        assert_all_zero(&diff, "closure − κ·Rbas");
    }
}
