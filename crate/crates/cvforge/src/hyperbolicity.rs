//! Negativity bounds for the sectional curvature of the induced metric on
//! the multiplication subbundle. The key quantity is the matrix functional
//! rho(A) = -|[A, A*]|^2 / |A|^4 (norms and adjoint taken against a fixed
//! hermitian pairing), which is strictly negative on nonzero symmetric
//! nilpotents. Sampling that cone and evaluating the sectional curvature on
//! the matching tangent directions yields a statistical estimate of the
//! curvature bound k0, and k1 = k0 * lambda0^2 follows by scaling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bundle::ChartBundle;
use crate::canonical::{f_subbundle, sectional_curvature};
use crate::error::{CvError, Result};
use crate::linalg::{ConstMat, QrPivot};
use crate::scalar::{C, Scalar};
use crate::unfolding::{classify_point, find_primitive, induce_f_structure, PointClass};

/// Hermitian pairing tr(A^T H conj(B) H^{-1}) on constant endomorphisms.
fn h_end_const<S: Scalar>(
    a: &ConstMat<S>,
    b: &ConstMat<S>,
    h: &ConstMat<S>,
    hinv: &ConstMat<S>,
) -> C<S> {
    a.transpose().mul(h).mul(&b.conj()).mul(hinv).trace()
}

/// Adjoint with respect to the pairing h: conj(H^{-1} A^T H).
fn h_adjoint_const<S: Scalar>(a: &ConstMat<S>, h: &ConstMat<S>, hinv: &ConstMat<S>) -> ConstMat<S> {
    hinv.mul(&a.transpose()).mul(h).conj()
}

/// rho(A) = -|[A, A*]|^2 / |A|^4 for a nonzero matrix, with adjoint and
/// norms taken against the hermitian Gram `h`. Scale-invariant, always <= 0,
/// and zero exactly when A commutes with its adjoint.
pub fn rho<S: Scalar>(a: &ConstMat<S>, h: &ConstMat<S>) -> Result<S> {
    if a.norm_max() <= S::zero() {
        return Err(CvError::Other("rho of the zero matrix".into()));
    }
    let hinv = h.lu_inverse(S::of(1e-300))?;
    let adj = h_adjoint_const(a, h, &hinv);
    let br = a.mul(&adj).sub(&adj.mul(a));
    let num = h_end_const(&br, &br, h, &hinv).re;
    let den = h_end_const(a, a, h, &hinv).re;
    Ok(-num / (den * den))
}

#[derive(Debug, Clone)]
pub struct NilpotentSample<S: Scalar> {
    /// symmetric, nilpotent, unit Frobenius norm
    pub matrix: ConstMat<S>,
    /// max_k |tr(A^k)|, k = 1..n
    pub nilpotency_residual: S,
    pub rho: S,
}

fn trace_powers<S: Scalar>(a: &ConstMat<S>, n: usize) -> (Vec<C<S>>, Vec<ConstMat<S>>) {
    // returns tr(A^k) for k = 1..n together with the powers A^0..A^{n-1}
    let mut powers = vec![ConstMat::identity(n)];
    let mut traces = Vec::with_capacity(n);
    let mut acc = ConstMat::identity(n);
    for _ in 0..n {
        traces.push(acc.mul(a).trace());
        acc = acc.mul(a);
        powers.push(acc.clone());
    }
    powers.pop();
    (traces, powers)
}

/// Newton-project a symmetric matrix onto the cone {tr(A^k) = 0, k = 1..n}.
/// Returns None when the iteration stalls or collapses toward zero.
fn project_nilpotent<S: Scalar>(mut a: ConstMat<S>, n: usize) -> Option<ConstMat<S>> {
    let npar = n * (n + 1) / 2;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    for _ in 0..60 {
        let (traces, powers) = trace_powers(&a, n);
        let scale = S::one() + a.norm_max();
        let worst = traces.iter().fold(S::zero(), |w, t| w.max(t.norm()));
        if worst < S::of(1e-13) * scale {
            if a.norm_fro() < S::of(1e-4) {
                return None;
            }
            return Some(a);
        }
        // d tr(A^k) = k tr(A^{k-1} dA); symmetric parameter at (i,j) moves
        // both entries, doubling the off-diagonal sensitivity
        let jac = ConstMat::from_fn(n, npar, |k, p| {
            let (i, j) = pairs[p];
            let kk = C::new(S::of((k + 1) as f64), S::zero());
            let entry = powers[k].at(j, i);
            if i == j {
                kk * entry
            } else {
                kk * (entry + entry)
            }
        });
        let rhs: Vec<C<S>> = traces.iter().map(|t| -*t).collect();
        let qr = QrPivot::new(&jac, S::of(1e-12));
        let sol = qr.solve_min_norm(&rhs);
        let mut step_norm = S::zero();
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let d = sol.solution[p];
            step_norm = step_norm.max(d.norm());
            *a.at_mut(i, j) = a.at(i, j) + d;
            if i != j {
                *a.at_mut(j, i) = a.at(j, i) + d;
            }
        }
        if !step_norm.is_finite() || step_norm > S::of(1e3) {
            return None;
        }
    }
    None
}

fn random_symmetric<S: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> ConstMat<S> {
    let mut a = ConstMat::zero(n, n);
    for i in 0..n {
        for j in i..n {
            let v = C::new(
                S::of(rng.gen_range(-1.0..1.0)),
                S::of(rng.gen_range(-1.0..1.0)),
            );
            *a.at_mut(i, j) = v;
            *a.at_mut(j, i) = v;
        }
    }
    a
}

/// Draw `count` unit-norm symmetric nilpotent matrices by Newton projection
/// of random symmetric seeds, deterministically under `seed`.
pub fn sample_nilpotent_cone<S: Scalar>(
    n: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<NilpotentSample<S>>> {
    if n < 2 {
        return Err(CvError::Other(
            "nilpotent cone sampling needs dimension >= 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ident = ConstMat::identity(n);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut attempts = 0usize;
        let projected = loop {
            attempts += 1;
            if attempts > 25 {
                return Err(CvError::ProjectionFailed(attempts - 1));
            }
            if let Some(a) = project_nilpotent(random_symmetric(n, &mut rng), n) {
                break a;
            }
        };
        let norm = projected.norm_fro();
        let unit = projected.scale(C::new(S::one() / norm, S::zero()));
        let (traces, _) = trace_powers(&unit, n);
        let resid = traces.iter().fold(S::zero(), |w, t| w.max(t.norm()));
        let r = rho(&unit, &ident)?;
        out.push(NilpotentSample {
            matrix: unit,
            nilpotency_residual: resid,
            rho: r,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct K0Estimate<S: Scalar> {
    /// -max of the sampled sectional curvatures; positive when the metric is
    /// strictly negatively curved on the sampled cone
    pub k0: f64,
    /// direction attaining the max
    pub argmax: Vec<C<S>>,
    /// all sampled sectional values, in sample order
    pub rsect: Vec<f64>,
}

fn nilpotent_direction<S: Scalar>(
    traces: &[C<S>],
    dot: C<S>,
    rng: &mut ChaCha8Rng,
) -> Vec<C<S>> {
    // random direction projected onto the hyperplane sum_a x_a tr_a = 0,
    // which at an irreducible point is exactly the nilpotent Higgs cone
    let m = traces.len();
    let mut x: Vec<C<S>> = (0..m)
        .map(|_| {
            C::new(
                S::of(rng.gen_range(-1.0..1.0)),
                S::of(rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    if dot.norm() > S::of(1e-30) {
        let mut s = C::new(S::zero(), S::zero());
        for (xi, t) in x.iter().zip(traces) {
            s = s + *xi * *t;
        }
        for (xi, t) in x.iter_mut().zip(traces) {
            *xi = *xi - s * t.conj() / dot;
        }
    }
    x
}

/// Estimate the curvature bound k0 of the induced metric at the base point
/// of an irreducible chart: the sectional curvature is evaluated on `count`
/// random directions in the nilpotent cone of the multiplication algebra and
/// the estimate is -max of those values. With `refine` a short local-descent
/// pass tightens the argmax. A statistical estimate, not a certificate.
pub fn bound_k0<S: Scalar>(
    b: &ChartBundle<S>,
    count: usize,
    seed: u64,
    refine: bool,
) -> Result<K0Estimate<S>> {
    let (zeta, _) = find_primitive(b)?;
    let f = induce_f_structure(b, &zeta)?;
    match classify_point(&f) {
        PointClass::Irreducible => {}
        PointClass::Semisimple => return Err(CvError::NotIrreducible(vec![1; f.n])),
        PointClass::Mixed(sizes) => return Err(CvError::NotIrreducible(sizes)),
    }
    let sub = f_subbundle(b)?;
    let gram0 = sub.gram.constant_term();
    let eigs = gram0.hermitian_eigenvalues();
    let min_eig = eigs.iter().fold(S::infinity(), |w, &e| w.min(e));
    if min_eig <= S::zero() {
        return Err(CvError::NotPositiveDefinite(min_eig.to_f64_lossy()));
    }
    let m = b.m();
    let n = b.n;
    let nf = S::of(n as f64);
    let traces: Vec<C<S>> = b
        .c
        .iter()
        .map(|ci| ci.constant_term().trace() / C::new(nf, S::zero()))
        .collect();
    let mut dot = C::new(S::zero(), S::zero());
    for t in &traces {
        dot = dot + *t * t.conj();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<C<S>>> = (0..count)
        .map(|_| nilpotent_direction(&traces, dot, &mut rng))
        .collect();
    let rsect: Vec<f64> = dirs
        .par_iter()
        .map(|x| sectional_curvature(b, x).map(|(v, _)| v))
        .collect::<Result<_>>()?;
    let (best_idx, best) = rsect
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let mut argmax = dirs.get(best_idx).cloned().unwrap_or_default();
    let mut best = best;
    if refine && !argmax.is_empty() {
        let mut step = 0.3_f64;
        for _ in 0..40 {
            let mut cand = argmax.clone();
            for c in cand.iter_mut() {
                *c = *c
                    + C::new(
                        S::of(step * rng.gen_range(-1.0..1.0)),
                        S::of(step * rng.gen_range(-1.0..1.0)),
                    );
            }
            // re-project onto the nilpotent hyperplane
            if dot.norm() > S::of(1e-30) {
                let mut s = C::new(S::zero(), S::zero());
                for (xi, t) in cand.iter().zip(&traces) {
                    s = s + *xi * *t;
                }
                for (xi, t) in cand.iter_mut().zip(&traces) {
                    *xi = *xi - s * t.conj() / dot;
                }
            }
            let mut nrm = S::zero();
            for c in &cand {
                nrm = nrm.max(c.norm());
            }
            if nrm <= S::of(1e-12) {
                step *= 0.7;
                continue;
            }
            if let Ok((v, _)) = sectional_curvature(b, &cand) {
                if v > best {
                    best = v;
                    argmax = cand;
                    continue;
                }
            }
            step *= 0.85;
        }
        let _ = m;
    }
    Ok(K0Estimate {
        k0: -best,
        argmax,
        rsect,
    })
}

/// k1 = k0 * lambda0^2, the bound after rescaling directions by lambda0.
pub fn bound_k1(k0: f64, lambda0: f64) -> Result<f64> {
    if k0 <= 0.0 || lambda0 <= 0.0 {
        return Err(CvError::BadWeight(
            "curvature bound inputs must be positive".into(),
        ));
    }
    Ok(k0 * lambda0 * lambda0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{example_semisimple, sg_unfolded};

    fn cm(rows: &[&[(f64, f64)]]) -> ConstMat<f64> {
        ConstMat::from_rows(
            &rows
                .iter()
                .map(|r| r.iter().map(|&(re, im)| C::new(re, im)).collect())
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn rho_closed_forms() {
        let id = ConstMat::<f64>::identity(2);
        let a = cm(&[&[(1.0, 0.0), (0.0, 1.0)], &[(0.0, 1.0), (-1.0, 0.0)]]);
        assert!((rho(&a, &id).unwrap() + 2.0).abs() < 1e-12);
        assert!(rho(&id, &id).unwrap().abs() < 1e-14);
        let d = cm(&[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (-1.0, 0.0)]]);
        assert!(rho(&d, &id).unwrap().abs() < 1e-14);
        assert!(rho(&ConstMat::<f64>::zero(2, 2), &id).is_err());
    }

    #[test]
    fn rho_scale_invariant_and_nonpositive() {
        let id = ConstMat::<f64>::identity(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_symmetric::<f64>(3, &mut rng);
            let r = rho(&a, &id).unwrap();
            assert!(r <= 1e-12);
            let lam = rng.gen_range(1e-3..1e3);
            let rs = rho(&a.scale(C::new(lam, 0.0)), &id).unwrap();
            assert!((r - rs).abs() < 1e-10 * (1.0 + r.abs()));
        }
        // a random hermitian matrix is normal, so rho vanishes
        for _ in 0..10 {
            let a = random_symmetric::<f64>(3, &mut rng);
            let herm = a.add(&a.conj_transpose()).scale(C::new(0.5, 0.0));
            assert!(rho(&herm, &id).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn two_dim_cone_is_a_single_orbit() {
        let samples = sample_nilpotent_cone::<f64>(2, 40, 11).unwrap();
        assert_eq!(samples.len(), 40);
        for s in &samples {
            assert!(s.nilpotency_residual < 1e-8);
            assert!((s.matrix.norm_fro() - 1.0).abs() < 1e-12);
            assert!((s.rho + 2.0).abs() < 1e-8, "rho = {}", s.rho);
        }
        assert!(sample_nilpotent_cone::<f64>(2, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn three_dim_cone_rho_strictly_negative() {
        let samples = sample_nilpotent_cone::<f64>(3, 200, 3).unwrap();
        for s in &samples {
            assert!(s.nilpotency_residual < 1e-8);
            assert!(s.rho < -1e-6, "rho = {}", s.rho);
        }
    }

    #[test]
    fn k0_on_unfolded_chart() {
        let b = sg_unfolded::<f64>(4).unwrap();
        let est = bound_k0(&b, 60, 42, false).unwrap();
        assert!(est.k0 > 0.0, "k0 = {}", est.k0);
        // the nilpotent cone here is one complex line, so every sample sees
        // the same curvature and a larger sweep cannot move the estimate
        let est2 = bound_k0(&b, 300, 43, true).unwrap();
        let rel = (est.k0 - est2.k0).abs() / est.k0;
        assert!(rel < 0.2, "unstable estimate: {} vs {}", est.k0, est2.k0);
        for v in &est.rsect {
            assert!(*v < 0.0);
        }
    }

    #[test]
    fn semisimple_point_is_rejected() {
        let b = example_semisimple::<f64>(3, 2, &[1.0, 2.0]).unwrap();
        match bound_k0(&b, 10, 1, false) {
            Err(CvError::NotIrreducible(_)) => {}
            other => panic!("expected NotIrreducible, got {:?}", other.map(|e| e.k0)),
        }
    }

    #[test]
    fn k1_arithmetic() {
        assert!((bound_k1(2.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((bound_k1(0.5, 2.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(bound_k1(1.0, 1e-6).unwrap() < 1e-11);
        assert!(bound_k1(-1.0, 1.0).is_err());
        assert!(bound_k1(1.0, 0.0).is_err());
    }
}
