//! From chart data to the associated z-family connection and pairing, and
//! back: the construction direction of the two equivalence theorems.
//!
//! Sign note: the z-linear term of the z-direction coefficient is
//! -z kappa(U)kappa, not +z kappa(U)kappa; with the plus sign the mixed
//! (tbar, z)-flatness component picks up an irreducible 2z kappa(C)kappa
//! residual already on the rank-one chart. The minus sign makes every
//! fixture flat to truncation order.

use num_complex::Complex;

use crate::axioms::{check_cv, check_saito, check_tep, StructureReport, ZFamilyConnection};
use crate::bundle::{chern_connection, ChartBundle};
use crate::error::{CvError, Result};
use crate::matrix::{LaurentJet, MatrixJet};
use crate::scalar::Scalar;

pub(crate) fn fail(rep: &StructureReport) -> CvError {
    let names: Vec<&str> = rep
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    CvError::AxiomFailure(format!(
        "{} (worst residual {:.3e}): {}",
        rep.label,
        rep.worst(),
        names.join(", ")
    ))
}

/// A_i = Gamma_i + C_i / z, A_z = U/z - V + (w/2) Id, P = z^w g. No axiom
/// gate; used directly by perturbation tests.
pub fn build_saito_connection_unchecked<S: Scalar>(
    b: &ChartBundle<S>,
) -> Result<(ZFamilyConnection<S>, LaurentJet<S>)> {
    let ctx = b.ctx;
    let n = b.n;
    let gamma = b.gamma10_or_zero();
    let u = b.u_ref()?;
    let v = b.v_ref()?;
    let g = b.g_ref()?;
    let a_t = (0..b.m())
        .map(|i| LaurentJet::from_terms(vec![(-1, b.c[i].clone()), (0, gamma[i].clone())]))
        .collect();
    let half_w = MatrixJet::identity(ctx, n).scale(Complex::new(S::of(b.w as f64 / 2.0), S::zero()));
    let a_z = LaurentJet::from_terms(vec![(-1, u.clone()), (0, v.neg().add(&half_w))]);
    let p = LaurentJet::from_terms(vec![(b.w, g.clone())]);
    Ok((ZFamilyConnection { a_t, a_z, a_bar: None }, p))
}

pub fn build_saito_connection<S: Scalar>(
    b: &ChartBundle<S>,
    tol: f64,
) -> Result<(ZFamilyConnection<S>, LaurentJet<S>)> {
    let rep = check_saito(b, tol)?;
    if !rep.passed() {
        return Err(fail(&rep));
    }
    build_saito_connection_unchecked(b)
}

/// Mixed-type family from hermitian chart data: A_i = Gamma_i + C_i / z,
/// Abar_j = z kappa(C_j)kappa, A_z = U/z - Q + (w/2) Id - z kappa(U)kappa,
/// P = z^w g; Gamma from the Chern connection of h.
pub fn build_cv_connection_unchecked<S: Scalar>(
    b: &ChartBundle<S>,
) -> Result<(ZFamilyConnection<S>, LaurentJet<S>)> {
    let ctx = b.ctx;
    let n = b.n;
    let gamma = chern_connection(b.h_ref()?)?;
    let u = b.u_ref()?;
    let q = b.q_ref()?;
    let g = b.g_ref()?;
    let a_t: Vec<_> = (0..b.m())
        .map(|i| LaurentJet::from_terms(vec![(-1, b.c[i].clone()), (0, gamma[i].clone())]))
        .collect();
    let a_bar: Vec<_> = (0..b.m())
        .map(|j| Ok(LaurentJet::from_terms(vec![(1, b.kappa_conj(&b.c[j])?)])))
        .collect::<Result<_>>()?;
    let half_w = MatrixJet::identity(ctx, n).scale(Complex::new(S::of(b.w as f64 / 2.0), S::zero()));
    let a_z = LaurentJet::from_terms(vec![
        (-1, u.clone()),
        (0, q.neg().add(&half_w)),
        (1, b.kappa_conj(u)?.neg()),
    ]);
    let p = LaurentJet::from_terms(vec![(b.w, g.clone())]);
    Ok((ZFamilyConnection { a_t, a_z, a_bar: Some(a_bar) }, p))
}

pub fn build_cv_connection<S: Scalar>(
    b: &ChartBundle<S>,
    tol: f64,
) -> Result<(ZFamilyConnection<S>, LaurentJet<S>)> {
    let rep = check_cv(b, tol)?;
    if !rep.passed() {
        return Err(fail(&rep));
    }
    let (conn, p) = build_cv_connection_unchecked(b)?;
    let flat = check_tep(&conn, &p, b.w, tol)?;
    if !flat.passed() {
        return Err(fail(&flat));
    }
    Ok((conn, p))
}

/// Back out the chart-level data: C_i and U as the z^-1 residues, g as the
/// z^w coefficient of P. Gated on the full z-family check.
pub fn extract_k_data<S: Scalar>(
    conn: &ZFamilyConnection<S>,
    p: &LaurentJet<S>,
    w: i32,
    tol: f64,
) -> Result<(Vec<MatrixJet<S>>, MatrixJet<S>, MatrixJet<S>)> {
    let rep = check_tep(conn, p, w, tol)?;
    if !rep.passed() {
        return Err(fail(&rep));
    }
    let c = conn.a_t.iter().map(|a| a.coeff_or_zero(-1)).collect();
    let u = conn.a_z.coeff_or_zero(-1);
    let g = p.coeff_or_zero(w);
    Ok((c, u, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::DEFAULT_TOL;
    use crate::fixtures::{example_frobenius2, example_rank1, example_semisimple, sinh_gordon_jet};

    #[test]
    fn rank1_connection_closed_form() {
        for w in 0..3 {
            let b = example_rank1::<f64>(3, w);
            let (conn, p) = build_saito_connection(&b, DEFAULT_TOL).unwrap();
            // A_u = -1/z
            let au = &conn.a_t[0];
            assert!((au.coeff_or_zero(-1).at(0, 0).constant_term().re + 1.0).abs() < 1e-14);
            assert!(au.coeff_or_zero(0).norm() < 1e-14);
            // A_z = u/z + w/2
            let res = conn.a_z.coeff_or_zero(-1);
            assert_eq!(res.at(0, 0).get(&[1], &[0]).re, 1.0);
            let c0 = conn.a_z.coeff_or_zero(0).at(0, 0).constant_term();
            assert!((c0.re - w as f64 / 2.0).abs() < 1e-14);
            // P = i^w z^w
            let iw = num_complex::Complex::new(0.0, 1.0).powi(w);
            assert!((p.coeff_or_zero(w).at(0, 0).constant_term() - iw).norm() < 1e-14);
            let rep = check_tep(&conn, &p, w, DEFAULT_TOL).unwrap();
            assert!(rep.passed(), "{}", rep.render());
        }
    }

    #[test]
    fn saito_roundtrip_exact() {
        let f2 = example_frobenius2::<f64>(4);
        let e2 = example_semisimple::<f64>(3, 2, &[0.0, 1.0]).unwrap();
        for b in [&f2, &e2] {
            let (conn, p) = build_saito_connection(b, DEFAULT_TOL).unwrap();
            let rep = check_tep(&conn, &p, b.w, DEFAULT_TOL).unwrap();
            assert!(rep.passed(), "{}", rep.render());
            let (c, u, g) = extract_k_data(&conn, &p, b.w, DEFAULT_TOL).unwrap();
            for i in 0..b.m() {
                assert!(c[i].sub(&b.c[i]).norm() < 1e-14);
            }
            assert!(u.sub(b.u_ref().unwrap()).norm() < 1e-14);
            assert!(g.sub(b.g_ref().unwrap()).norm() < 1e-14);
        }
    }

    #[test]
    fn cv_connection_flat_on_fixtures() {
        let e1 = example_rank1::<f64>(3, 1);
        let e2 = example_semisimple::<f64>(3, 2, &[0.0, 1.0]).unwrap();
        let sg = sinh_gordon_jet::<f64>(4).unwrap();
        for b in [&e1, &e2, &sg] {
            let (conn, p) = build_cv_connection(b, DEFAULT_TOL).unwrap();
            let rep = check_tep(&conn, &p, b.w, DEFAULT_TOL).unwrap();
            assert!(rep.passed(), "{}", rep.render());
        }
    }

    #[test]
    fn rank1_cv_closed_form() {
        let b = example_rank1::<f64>(3, 2);
        let (conn, _) = build_cv_connection(&b, DEFAULT_TOL).unwrap();
        // Abar = -z  (kappa C kappa = -1 for the rank-one chart)
        let abar = &conn.a_bar.as_ref().unwrap()[0];
        assert!((abar.coeff_or_zero(1).at(0, 0).constant_term().re + 1.0).abs() < 1e-14);
        // z-linear term of A_z = -z conj(u)
        let z1 = conn.a_z.coeff_or_zero(1);
        assert!((z1.at(0, 0).get(&[0], &[1]).re + 1.0).abs() < 1e-14);
    }

    #[test]
    fn perturbed_chart_rejected_and_nonflat() {
        use crate::jets::{Jet, VarKind};
        let mut b = example_semisimple::<f64>(3, 2, &[0.0, 1.0]).unwrap();
        // off-diagonal eps t1 in U breaks commutation with C_1
        let eps = Jet::var(b.ctx, 0, VarKind::Holo).scale(num_complex::Complex::new(1e-2, 0.0));
        let mut u = b.u_ref().unwrap().clone();
        *u.at_mut(0, 1) = eps;
        b.u = Some(u);
        assert!(matches!(build_saito_connection(&b, DEFAULT_TOL), Err(CvError::AxiomFailure(_))));
        let (conn, p) = build_saito_connection_unchecked(&b).unwrap();
        let rep = check_tep(&conn, &p, 0, DEFAULT_TOL).unwrap();
        assert!(!rep.passed());
        assert!(rep.worst() >= 1e-3);
    }
}
