//! Deterministic reference charts used across the test suites, plus a
//! degree-by-degree least-squares completion utility that manufactures
//! valid hermitian-structure data from partial input.

use num_complex::Complex;

use crate::axioms::{check_cv, check_saito, cv_residual_entries, ResKind};
use crate::bundle::{ChartBundle, DEFAULT_TOL};
use crate::error::{CvError, Result};
use crate::jets::{Jet, JetContext, VarKind};
use crate::linalg::{ConstMat, QrPivot};
use crate::matrix::MatrixJet;
use crate::scalar::{C, Scalar};

fn cc<S: Scalar>(re: f64, im: f64) -> C<S> {
    Complex::new(S::of(re), S::of(im))
}

/// Rank-one chart over one coordinate u: C_du = -1, U = u, V = Q = 0,
/// g = i^w, h = 1, kappa = i^{-w} conj. The i^w twist in g makes the
/// associated z-family pairing come out as i^w z^w.
pub fn example_rank1<S: Scalar>(d: usize, w: i32) -> ChartBundle<S> {
    let ctx = JetContext::new(1, d).unwrap();
    let iw = Complex::new(S::zero(), S::one()).powi(w);
    let scalar = |v: C<S>| MatrixJet::from_fn(ctx, 1, 1, |_, _| Jet::constant(ctx, v));
    let c = vec![scalar(cc(-1.0, 0.0))];
    let mut b = ChartBundle::new(ctx, 1, w, c);
    let mut u = MatrixJet::zero(ctx, 1, 1);
    *u.at_mut(0, 0) = Jet::var(ctx, 0, VarKind::Holo);
    b.u = Some(u);
    b.v = Some(MatrixJet::zero(ctx, 1, 1));
    b.q = Some(MatrixJet::zero(ctx, 1, 1));
    b.g = Some(scalar(iw));
    b.h = Some(scalar(cc(1.0, 0.0)));
    b.kappa = Some(scalar(iw.conj()));
    debug_assert!(check_saito(&b, DEFAULT_TOL).unwrap().passed());
    debug_assert!(check_cv(&b, DEFAULT_TOL).unwrap().passed());
    b
}

/// Diagonal join of n rank-one charts: C_a = -E_aa, U = diag(u_a + offset_a),
/// g = h = kappa = Id, weight 0. Offsets must be pairwise distinct so the
/// joined chart is semisimple with distinct eigenvalues at the origin.
pub fn example_semisimple<S: Scalar>(d: usize, n: usize, offsets: &[f64]) -> Result<ChartBundle<S>> {
    if offsets.len() != n {
        return Err(CvError::DimMismatch(n, 1, offsets.len(), 1));
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if (offsets[a] - offsets[b]).abs() < 1e-12 {
                return Err(CvError::DuplicateEigenvalues);
            }
        }
    }
    let ctx = JetContext::new(n, d).unwrap();
    let mut c = Vec::with_capacity(n);
    for a in 0..n {
        let mut m = MatrixJet::zero(ctx, n, n);
        *m.at_mut(a, a) = Jet::constant(ctx, cc(-1.0, 0.0));
        c.push(m);
    }
    let mut b = ChartBundle::new(ctx, n, 0, c);
    let mut u = MatrixJet::zero(ctx, n, n);
    for a in 0..n {
        *u.at_mut(a, a) = Jet::var(ctx, a, VarKind::Holo).add(&Jet::constant(ctx, cc(offsets[a], 0.0)));
    }
    b.u = Some(u);
    b.v = Some(MatrixJet::zero(ctx, n, n));
    b.q = Some(MatrixJet::zero(ctx, n, n));
    b.g = Some(MatrixJet::identity(ctx, n));
    b.h = Some(MatrixJet::identity(ctx, n));
    b.kappa = Some(MatrixJet::identity(ctx, n));
    debug_assert!(check_saito(&b, DEFAULT_TOL).unwrap().passed());
    debug_assert!(check_cv(&b, DEFAULT_TOL).unwrap().passed());
    Ok(b)
}

/// Two-dimensional Frobenius-type chart with a nilpotent origin:
/// multiplication from the potential t1^2 t2 / 2 + t2^4 / 24, metric
/// antidiag(1, 1), unit field d_1, Euler field t1 d_1 + (2/3) t2 d_2.
/// Stored as Higgs data: C_1 = -Id, C_2 = -[[0, t2], [1, 0]],
/// U = Euler multiplication, V = diag(1/6, -1/6).
pub fn example_frobenius2<S: Scalar>(d: usize) -> ChartBundle<S> {
    let ctx = JetContext::new(2, d).unwrap();
    let t2 = Jet::var(ctx, 1, VarKind::Holo);
    let c1 = MatrixJet::identity(ctx, 2).neg();
    let mut c2 = MatrixJet::zero(ctx, 2, 2);
    *c2.at_mut(0, 1) = t2.neg();
    *c2.at_mut(1, 0) = Jet::constant(ctx, cc(-1.0, 0.0));
    let mut b = ChartBundle::new(ctx, 2, 0, vec![c1, c2]);
    let mut u = MatrixJet::zero(ctx, 2, 2);
    let t1 = Jet::var(ctx, 0, VarKind::Holo);
    *u.at_mut(0, 0) = t1.clone();
    *u.at_mut(1, 1) = t1;
    *u.at_mut(0, 1) = t2.mul(&t2).scale(cc(2.0 / 3.0, 0.0));
    *u.at_mut(1, 0) = t2.scale(cc(2.0 / 3.0, 0.0));
    b.u = Some(u);
    let mut v = MatrixJet::zero(ctx, 2, 2);
    *v.at_mut(0, 0) = Jet::constant(ctx, cc(1.0 / 6.0, 0.0));
    *v.at_mut(1, 1) = Jet::constant(ctx, cc(-1.0 / 6.0, 0.0));
    b.v = Some(v);
    let mut g = MatrixJet::zero(ctx, 2, 2);
    *g.at_mut(0, 1) = Jet::one(ctx);
    *g.at_mut(1, 0) = Jet::one(ctx);
    b.g = Some(g);
    debug_assert!(check_saito(&b, DEFAULT_TOL).unwrap().passed());
    b
}

/// Real jet phi(t, tbar) with phi(0) = 0, no pure-t or pure-tbar terms,
/// solving d dbar phi = e^{2 phi} order by order (the radially symmetric
/// Liouville-type recursion). `var` picks which coordinate carries phi.
fn liouville_phi<S: Scalar>(ctx: JetContext, var: usize) -> Jet<S> {
    let mut phi = Jet::zero(ctx);
    let m = ctx.m;
    for deg in 0..=ctx.d.saturating_sub(2) {
        let e2 = phi.scale(cc(2.0, 0.0)).exp();
        for a in 0..=deg {
            let bb = deg - a;
            let mut alpha = vec![0u8; m];
            let mut beta = vec![0u8; m];
            alpha[var] = a as u8;
            beta[var] = bb as u8;
            let src = e2.get(&alpha, &beta);
            alpha[var] = (a + 1) as u8;
            beta[var] = (bb + 1) as u8;
            let denom = S::of(((a + 1) * (bb + 1)) as f64);
            phi.set(&alpha, &beta, src / Complex::new(denom, S::zero()));
        }
    }
    phi
}

fn sinh_gordon_tensors<S: Scalar>(
    ctx: JetContext,
    var: usize,
) -> (MatrixJet<S>, MatrixJet<S>, MatrixJet<S>, MatrixJet<S>) {
    let phi = liouville_phi(ctx, var);
    let ep = phi.exp();
    let em = phi.neg().exp();
    let mut h = MatrixJet::zero(ctx, 2, 2);
    *h.at_mut(0, 0) = ep.clone();
    *h.at_mut(1, 1) = em.clone();
    let mut k = MatrixJet::zero(ctx, 2, 2);
    *k.at_mut(0, 1) = em;
    *k.at_mut(1, 0) = ep;
    let mut g = MatrixJet::zero(ctx, 2, 2);
    *g.at_mut(0, 1) = Jet::one(ctx);
    *g.at_mut(1, 0) = Jet::one(ctx);
    let mut q = MatrixJet::zero(ctx, 2, 2);
    *q.at_mut(0, 0) = Jet::constant(ctx, cc(-0.5, 0.0));
    *q.at_mut(1, 1) = Jet::constant(ctx, cc(0.5, 0.0));
    (g, h, k, q)
}

/// Rank-two hermitian chart over one coordinate with nilpotent Higgs field
/// E_12, h = diag(e^phi, e^-phi) built from the Liouville recursion, U = 0,
/// Q = diag(-1/2, 1/2).
pub fn sinh_gordon_jet<S: Scalar>(order: usize) -> Result<ChartBundle<S>> {
    let ctx = JetContext::new(1, order)?;
    let mut c = MatrixJet::zero(ctx, 2, 2);
    *c.at_mut(0, 1) = Jet::one(ctx);
    let mut b = ChartBundle::new(ctx, 2, 0, vec![c]);
    let (g, h, k, q) = sinh_gordon_tensors(ctx, 0);
    b.u = Some(MatrixJet::zero(ctx, 2, 2));
    b.g = Some(g);
    b.h = Some(h);
    b.kappa = Some(k);
    b.q = Some(q);
    let rep = check_cv(&b, DEFAULT_TOL)?;
    if !rep.passed() {
        return Err(CvError::Inconsistent { degree: order, residual: rep.worst() });
    }
    Ok(b)
}

/// Two-coordinate extension of the sinh-Gordon chart making the tangent
/// unfolding available: C_1 = -Id, C_2 = E_12, U = t1 Id, metric data as in
/// the one-coordinate chart but with phi living in (t2, conj t2).
pub fn sg_unfolded<S: Scalar>(order: usize) -> Result<ChartBundle<S>> {
    let ctx = JetContext::new(2, order)?;
    let c1 = MatrixJet::identity(ctx, 2).neg();
    let mut c2 = MatrixJet::zero(ctx, 2, 2);
    *c2.at_mut(0, 1) = Jet::one(ctx);
    let mut b = ChartBundle::new(ctx, 2, 0, vec![c1, c2]);
    let (g, h, k, q) = sinh_gordon_tensors(ctx, 1);
    let t1 = Jet::var(ctx, 0, VarKind::Holo);
    let mut u = MatrixJet::zero(ctx, 2, 2);
    *u.at_mut(0, 0) = t1.clone();
    *u.at_mut(1, 1) = t1;
    b.u = Some(u);
    b.g = Some(g);
    b.h = Some(h);
    b.kappa = Some(k);
    b.q = Some(q);
    let rep = check_cv(&b, DEFAULT_TOL)?;
    if !rep.passed() {
        return Err(CvError::Inconsistent { degree: order, residual: rep.worst() });
    }
    Ok(b)
}

/// Which tensors the completion solver is allowed to modify above degree 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompleteSelector {
    pub h: bool,
    pub q: bool,
}

use crate::jets::keys_of_degree;

/// Residual coefficients at the homogeneous degrees a step-k solve targets.
fn residual_vector<S: Scalar>(b: &ChartBundle<S>, k: usize) -> Result<Vec<C<S>>> {
    let mut out = Vec::new();
    for e in cv_residual_entries(b)? {
        let r = match e.kind {
            ResKind::Algebraic => k as i64,
            ResKind::FirstOrder => k as i64 - 1,
            ResKind::Curvature => k as i64 - 2,
        };
        if r < 0 {
            continue;
        }
        let keys = keys_of_degree(b.ctx, r as usize);
        for i in 0..e.res.rows {
            for j in 0..e.res.cols {
                let jet = e.res.at(i, j);
                for key in &keys {
                    out.push(jet.get(&key[..b.ctx.m], &key[b.ctx.m..]));
                }
            }
        }
    }
    Ok(out)
}

fn with_unknowns<S: Scalar>(
    base: &ChartBundle<S>,
    sel: CompleteSelector,
    keys: &[Vec<u8>],
    x: &[S],
) -> Result<ChartBundle<S>> {
    let n = base.n;
    let m = base.ctx.m;
    let mut b = base.clone();
    let mut idx = 0usize;
    if sel.h {
        let mut h = b.h_ref()?.clone();
        for key in keys {
            for i in 0..n {
                for j in 0..n {
                    let old = h.at(i, j).get(&key[..m], &key[m..]);
                    h.at_mut(i, j).set(
                        &key[..m],
                        &key[m..],
                        old + Complex::new(x[idx], x[idx + 1]),
                    );
                    idx += 2;
                }
            }
        }
        // kappa rides along: k = g^{-1} h
        let kap = b.g_ref()?.invert()?.mul(&h);
        b.h = Some(h);
        b.kappa = Some(kap);
    }
    if sel.q {
        let mut q = b.q_ref()?.clone();
        for key in keys {
            for i in 0..n {
                for j in 0..n {
                    let old = q.at(i, j).get(&key[..m], &key[m..]);
                    q.at_mut(i, j).set(
                        &key[..m],
                        &key[m..],
                        old + Complex::new(x[idx], x[idx + 1]),
                    );
                    idx += 2;
                }
            }
        }
        b.q = Some(q);
    }
    Ok(b)
}

/// Solve the higher jet coefficients of the selected tensors degree by
/// degree so the hermitian-structure axioms hold to truncation order. Each
/// degree is an affine least-squares problem (quadratic terms in the new
/// unknowns exceed the degree cutoff); the minimum-norm solution fixes the
/// gauge freedom deterministically.
pub fn complete_cv_jet<S: Scalar>(
    partial: &ChartBundle<S>,
    sel: CompleteSelector,
    tol: f64,
) -> Result<ChartBundle<S>> {
    let mut cur = partial.clone();
    if sel.h && cur.kappa.is_none() {
        cur.kappa = Some(cur.g_ref()?.invert()?.mul(cur.h_ref()?));
    }
    let scale = {
        let mut s = S::one();
        for e in cv_residual_entries(&cur)? {
            s = s.max(e.scale);
        }
        s
    };
    let thresh = S::of(tol) * (S::one() + scale);

    // degree-0 consistency of the fixed constant terms
    let r0 = residual_vector(&cur, 0)?;
    let worst0 = r0.iter().map(|v| v.norm()).fold(S::zero(), S::max);
    if worst0 > thresh {
        return Err(CvError::Inconsistent { degree: 0, residual: worst0.to_f64_lossy() });
    }

    for k in 1..=cur.ctx.d {
        let keys = keys_of_degree(cur.ctx, k);
        let per_tensor = 2 * cur.n * cur.n * keys.len();
        let nx = per_tensor * (sel.h as usize + sel.q as usize);
        if nx == 0 {
            break;
        }
        let base = residual_vector(&cur, k)?;
        let rows = 2 * base.len();
        let mut a = ConstMat::<S>::zero(rows, nx);
        let mut rhs = vec![Complex::new(S::zero(), S::zero()); rows];
        for (r, v) in base.iter().enumerate() {
            rhs[2 * r] = Complex::new(-v.re, S::zero());
            rhs[2 * r + 1] = Complex::new(-v.im, S::zero());
        }
        let mut x = vec![S::zero(); nx];
        for col in 0..nx {
            x[col] = S::one();
            let probe = with_unknowns(&cur, sel, &keys, &x)?;
            x[col] = S::zero();
            let rv = residual_vector(&probe, k)?;
            for (r, (pv, bv)) in rv.iter().zip(base.iter()).enumerate() {
                let dv = *pv - *bv;
                *a.at_mut(2 * r, col) = Complex::new(dv.re, S::zero());
                *a.at_mut(2 * r + 1, col) = Complex::new(dv.im, S::zero());
            }
        }
        let qr = QrPivot::new(&a, S::of(1e-10));
        let sol = qr.solve_min_norm(&rhs);
        let xs: Vec<S> = sol.solution.iter().map(|v| v.re).collect();
        cur = with_unknowns(&cur, sel, &keys, &xs)?;
        let check = residual_vector(&cur, k)?;
        let worst = check.iter().map(|v| v.norm()).fold(S::zero(), S::max);
        if worst > thresh {
            return Err(CvError::Inconsistent { degree: k, residual: worst.to_f64_lossy() });
        }
    }
    Ok(cur)
}
