mod common;

use acw_core::coeff::{eval, AtomValuation, Atom, Chart, Expr};
use acw_core::gauge::Patch;
use acw_core::gca::GradedElem;
use common::random_poly;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chart() -> Chart {
    Chart::numbered("R3", "m", 3)
}

fn poly(seed: u64) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_poly(&mut rng, &chart(), 2, 0.4)
}

fn at(x: [f64; 3]) -> AtomValuation {
    let mut v = AtomValuation::default();
    for (i, xi) in x.iter().enumerate() {
        v.values.insert(Atom::coord(&format!("m{}", i + 1)), *xi);
    }
    v
}

/// A random homogeneous `k`-form on a 3-dimensional patch.
fn form(patch: &Patch, seed: u64, k: usize) -> GradedElem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = patch.zero();
    let c = patch.chart().clone();
    let subsets: Vec<Vec<usize>> = (0u32..8)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..3).filter(|i| m >> i & 1 == 1).collect())
        .collect();
    for s in subsets {
        let mut term = patch.scalar(random_poly(&mut rng, &c, 2, 0.3));
        for mu in s {
            term = term.mul(&patch.dx(mu));
        }
        if rng.gen_bool(0.8) {
            out = out.add(&term);
        }
    }
    out
}

fn sign(p: usize, q: usize) -> Expr {
    Expr::int(if p * q % 2 == 1 { -1 } else { 1 })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn canonical_form_respects_ring_laws(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (a, b, c) = (poly(a), poly(b), poly(c));
        prop_assert_eq!(a.add(&b).sub(&b), a.clone());
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
    }

    #[test]
    fn division_cancels(a in any::<u64>(), b in any::<u64>()) {
        let (a, b) = (poly(a), poly(b));
        prop_assume!(!b.is_zero());
        let q = a.checked_div(&b).unwrap();
        prop_assert_eq!(q.mul(&b), a);
    }

    #[test]
    fn derivative_obeys_leibniz_and_quotient_rules(a in any::<u64>(), b in any::<u64>(), k in 0usize..3) {
        let (a, b) = (poly(a), poly(b));
        let x = format!("m{}", k + 1);
        prop_assert_eq!(a.mul(&b).diff(&x), a.diff(&x).mul(&b).add(&a.mul(&b.diff(&x))));
        prop_assume!(!b.is_zero());
        let q = a.checked_div(&b).unwrap();
        let expected = a.diff(&x).mul(&b).sub(&a.mul(&b.diff(&x))).checked_div(&b.mul(&b)).unwrap();
        prop_assert_eq!(q.diff(&x), expected);
    }

    #[test]
    fn printing_round_trips_through_the_parser(a in any::<u64>(), b in any::<u64>()) {
        let c = chart();
        let e = poly(a).add(&poly(b).sin()).add(&poly(a ^ b).exp());
        prop_assert_eq!(c.parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn evaluation_is_a_ring_morphism(a in any::<u64>(), b in any::<u64>(), x in prop::array::uniform3(-2.0f64..2.0)) {
        let (a, b) = (poly(a), poly(b));
        let v = at(x);
        let (ea, eb) = (eval(&a, &v).unwrap(), eval(&b, &v).unwrap());
        let scale = 1.0 + ea.abs() * eb.abs() + ea.abs() + eb.abs();
        prop_assert!((eval(&a.mul(&b), &v).unwrap() - ea * eb).abs() < 1e-9 * scale);
        prop_assert!((eval(&a.add(&b), &v).unwrap() - ea - eb).abs() < 1e-9 * scale);
    }

    #[test]
    fn forms_are_graded_commutative_and_associative(s in any::<u64>(), p in 0usize..=3, q in 0usize..=3) {
        let patch = Patch::new(3);
        let (x, y, z) = (form(&patch, s, p), form(&patch, s ^ 1, q), form(&patch, s ^ 2, 1));
        prop_assert_eq!(x.mul(&y), y.mul(&x).scale(&sign(p, q)));
        prop_assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
        if p % 2 == 1 {
            prop_assert!(x.mul(&x).is_zero());
        }
    }

    #[test]
    fn de_rham_squares_to_zero_and_is_a_graded_derivation(s in any::<u64>(), p in 0usize..=2, q in 0usize..=2) {
        let patch = Patch::new(3);
        let (x, y) = (form(&patch, s, p), form(&patch, s ^ 7, q));
        prop_assert!(patch.d(&patch.d(&x)).is_zero());
        let lhs = patch.d(&x.mul(&y));
        let rhs = patch.d(&x).mul(&y).add(&x.mul(&patch.d(&y)).scale(&sign(p, 1)));
        prop_assert_eq!(lhs, rhs);
    }
}
