//! Ring and calculus laws of the truncated jets, exercised on random
//! coefficient data. These are exact identities of the truncated ring, so
//! the tolerances only absorb floating-point roundoff.

use num_complex::Complex;
use proptest::prelude::*;

use cvforge::jets::{keys_up_to, Jet, JetContext, VarKind};

const M: usize = 2;
const D: usize = 3;

fn ctx() -> JetContext {
    JetContext::new(M, D).unwrap()
}

fn jet_from(coeffs: &[(f64, f64)]) -> Jet<f64> {
    let ctx = ctx();
    let mut j = Jet::zero(ctx);
    for (key, &(re, im)) in keys_up_to(ctx, D).into_iter().zip(coeffs) {
        j.set_key(key, Complex::new(re, im));
    }
    j
}

fn arb_jet() -> impl Strategy<Value = Jet<f64>> {
    let nkeys = keys_up_to(ctx(), D).len();
    proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), nkeys).prop_map(|v| jet_from(&v))
}

fn close(a: &Jet<f64>, b: &Jet<f64>, tol: f64) -> bool {
    let scale = 1.0 + a.norm() + b.norm();
    a.sub(b).norm() <= tol * scale * scale * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws(f in arb_jet(), g in arb_jet(), h in arb_jet()) {
        prop_assert!(close(&f.mul(&g), &g.mul(&f), 1e-12));
        prop_assert!(close(&f.mul(&g).mul(&h), &f.mul(&g.mul(&h)), 1e-12));
        prop_assert!(close(&f.add(&g).mul(&h), &f.mul(&h).add(&g.mul(&h)), 1e-12));
        prop_assert!(close(&f.mul(&Jet::one(ctx())), &f, 0.0));
    }

    #[test]
    fn conjugation_laws(f in arb_jet(), g in arb_jet()) {
        prop_assert!(close(&f.conj().conj(), &f, 0.0));
        prop_assert!(close(&f.mul(&g).conj(), &f.conj().mul(&g.conj()), 1e-12));
        prop_assert!(close(&f.add(&g).conj(), &f.conj().add(&g.conj()), 0.0));
    }

    #[test]
    fn leibniz_rule(f in arb_jet(), g in arb_jet()) {
        for (i, kind) in [(0, VarKind::Holo), (1, VarKind::Holo), (0, VarKind::Anti)] {
            let lhs = f.mul(&g).differentiate(i, kind);
            let rhs = f.differentiate(i, kind).mul(&g).add(&f.mul(&g.differentiate(i, kind)));
            // a derivative of a degree-D jet is exact only to degree D-1
            let scale = 1.0 + f.norm() + g.norm();
            prop_assert!(lhs.sub(&rhs).norm_up_to(D - 1) <= 1e-11 * scale * scale);
        }
    }

    #[test]
    fn inversion_of_units(f in arb_jet()) {
        // push the constant term away from zero so the jet is a unit
        let mut f = f;
        f.set_key(vec![0; 2 * M], Complex::new(3.0, 1.0));
        let inv = f.invert_unit().unwrap();
        let scale = 1.0 + f.norm();
        prop_assert!(f.mul(&inv).sub(&Jet::one(ctx())).norm() <= 1e-10 * scale * scale);
    }

    #[test]
    fn conjugate_differentiation_swap(f in arb_jet()) {
        // d/dtbar of conj(f) = conj(d/dt of f)
        let lhs = f.conj().differentiate(0, VarKind::Anti);
        let rhs = f.differentiate(0, VarKind::Holo).conj();
        prop_assert!(close(&lhs, &rhs, 1e-13));
    }
}
