//! Chart-level data: a trivialized rank-n bundle over an m-dimensional
//! coordinate chart carrying some subset of the structure tensors, plus the
//! differential-geometric primitives built from them (Chern connection,
//! curvature, Lie brackets and derivatives, dual frames).
//!
//! Conventions, fixed once and used everywhere:
//! - the hermitian form is linear in its FIRST slot and antilinear in the
//!   second; its Gram matrix is H_jk = h(e_j, e_k), so h(s, s') = s^T H conj(s');
//! - the frame is holomorphic, so the (0,1)-part of the Chern connection
//!   vanishes and the (1,0)-coefficients solve d_i H_jk = sum_l G^l_ij H_lk,
//!   i.e. Gamma_i = H^{-T} (d_i H)^T;
//! - mixed curvature R(d_i, dbar_j) = -dbar_j Gamma^{1,0}_i + d_i Gamma^{0,1}_j
//!   + [Gamma^{0,1}_j, Gamma^{1,0}_i];
//! - the antilinear involution kappa is stored through its matrix k with
//!   kappa(s) = k conj(s); the linear composite kappa A kappa has matrix
//!   k conj(A) conj(k).

use crate::error::{CvError, Result};
use crate::jets::{Jet, JetContext, VarKind};
use crate::matrix::MatrixJet;
use crate::scalar::{C, Scalar};

#[derive(Debug, Clone)]
pub struct VectorFieldJet<S: Scalar> {
    pub comps: Vec<Jet<S>>,
}

impl<S: Scalar> VectorFieldJet<S> {
    pub fn zero(ctx: JetContext, n: usize) -> Self {
        VectorFieldJet {
            comps: vec![Jet::zero(ctx); n],
        }
    }

    pub fn frame(ctx: JetContext, n: usize, i: usize) -> Self {
        let mut v = Self::zero(ctx, n);
        v.comps[i] = Jet::one(ctx);
        v
    }

    pub fn from_const(ctx: JetContext, c: &[C<S>]) -> Self {
        VectorFieldJet {
            comps: c.iter().map(|&v| Jet::constant(ctx, v)).collect(),
        }
    }

    pub fn ctx(&self) -> JetContext {
        self.comps[0].ctx
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    /// Apply the field as a derivation through holomorphic partials.
    pub fn apply(&self, f: &Jet<S>) -> Jet<S> {
        let mut acc = Jet::zero(f.ctx);
        for (i, xi) in self.comps.iter().enumerate() {
            acc = acc.add(&xi.mul(&f.differentiate(i, VarKind::Holo)));
        }
        acc
    }

    /// Apply the conjugate field (antiholomorphic partials, conjugated
    /// coefficients).
    pub fn apply_bar(&self, f: &Jet<S>) -> Jet<S> {
        let mut acc = Jet::zero(f.ctx);
        for (i, xi) in self.comps.iter().enumerate() {
            acc = acc.add(&xi.conj().mul(&f.differentiate(i, VarKind::Anti)));
        }
        acc
    }

    pub fn apply_matrix(&self, a: &MatrixJet<S>) -> MatrixJet<S> {
        let mut acc = MatrixJet::zero(a.ctx, a.rows, a.cols);
        for (i, xi) in self.comps.iter().enumerate() {
            acc = acc.add(&a.differentiate(i, VarKind::Holo).scale_jet(xi));
        }
        acc
    }

    pub fn apply_bar_matrix(&self, a: &MatrixJet<S>) -> MatrixJet<S> {
        let mut acc = MatrixJet::zero(a.ctx, a.rows, a.cols);
        for (i, xi) in self.comps.iter().enumerate() {
            acc = acc.add(&a.differentiate(i, VarKind::Anti).scale_jet(&xi.conj()));
        }
        acc
    }

    /// Jacobian matrix J^k_a = d_a X^k.
    pub fn jacobian(&self) -> MatrixJet<S> {
        let ctx = self.ctx();
        let n = self.dim();
        MatrixJet::from_fn(ctx, n, n, |k, a| self.comps[k].differentiate(a, VarKind::Holo))
    }

    pub fn add(&self, o: &Self) -> Self {
        VectorFieldJet {
            comps: self
                .comps
                .iter()
                .zip(&o.comps)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        VectorFieldJet {
            comps: self
                .comps
                .iter()
                .zip(&o.comps)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, s: C<S>) -> Self {
        VectorFieldJet {
            comps: self.comps.iter().map(|a| a.scale(s)).collect(),
        }
    }

    pub fn norm(&self) -> S {
        let mut n = S::zero();
        for c in &self.comps {
            n = n.max(c.norm());
        }
        n
    }
}

/// Lie bracket of two fields with jet components.
pub fn lie_bracket<S: Scalar>(x: &VectorFieldJet<S>, y: &VectorFieldJet<S>) -> VectorFieldJet<S> {
    let comps = (0..x.dim())
        .map(|k| x.apply(&y.comps[k]).sub(&y.apply(&x.comps[k])))
        .collect();
    VectorFieldJet { comps }
}

/// Default relative tolerance used across all structure checks.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ChartBundle<S: Scalar> {
    pub ctx: JetContext,
    /// bundle rank
    pub n: usize,
    /// pairing weight
    pub w: i32,
    /// Higgs field coefficient matrices, one per base coordinate
    pub c: Vec<MatrixJet<S>>,
    pub u: Option<MatrixJet<S>>,
    pub v: Option<MatrixJet<S>>,
    pub q: Option<MatrixJet<S>>,
    pub g: Option<MatrixJet<S>>,
    pub h: Option<MatrixJet<S>>,
    pub kappa: Option<MatrixJet<S>>,
    /// connection coefficients of a flat holomorphic connection (for the
    /// torsionless-pair route); empty means the trivial connection
    pub gamma10: Option<Vec<MatrixJet<S>>>,
    pub gamma01: Option<Vec<MatrixJet<S>>>,
}

impl<S: Scalar> ChartBundle<S> {
    pub fn new(ctx: JetContext, n: usize, w: i32, c: Vec<MatrixJet<S>>) -> Self {
        assert_eq!(c.len(), ctx.m, "need one Higgs matrix per coordinate");
        ChartBundle {
            ctx,
            n,
            w,
            c,
            u: None,
            v: None,
            q: None,
            g: None,
            h: None,
            kappa: None,
            gamma10: None,
            gamma01: None,
        }
    }

    pub fn m(&self) -> usize {
        self.ctx.m
    }

    pub fn u_ref(&self) -> Result<&MatrixJet<S>> {
        self.u.as_ref().ok_or(CvError::MissingTensor("U".into()))
    }
    pub fn v_ref(&self) -> Result<&MatrixJet<S>> {
        self.v.as_ref().ok_or(CvError::MissingTensor("V".into()))
    }
    pub fn q_ref(&self) -> Result<&MatrixJet<S>> {
        self.q.as_ref().ok_or(CvError::MissingTensor("Q".into()))
    }
    pub fn g_ref(&self) -> Result<&MatrixJet<S>> {
        self.g.as_ref().ok_or(CvError::MissingTensor("g".into()))
    }
    pub fn h_ref(&self) -> Result<&MatrixJet<S>> {
        self.h.as_ref().ok_or(CvError::MissingTensor("h".into()))
    }
    pub fn kappa_ref(&self) -> Result<&MatrixJet<S>> {
        self.kappa.as_ref().ok_or(CvError::MissingTensor("kappa".into()))
    }

    /// Connection coefficients of the stored holomorphic connection; trivial
    /// (zero) when absent.
    pub fn gamma10_or_zero(&self) -> Vec<MatrixJet<S>> {
        match &self.gamma10 {
            Some(g) => g.clone(),
            None => vec![MatrixJet::zero(self.ctx, self.n, self.n); self.m()],
        }
    }

    /// kappa A kappa as a linear matrix: k conj(A) conj(k).
    pub fn kappa_conj(&self, a: &MatrixJet<S>) -> Result<MatrixJet<S>> {
        let k = self.kappa_ref()?;
        Ok(k.mul(&a.conj()).mul(&k.conj()))
    }

    /// Structural invariants shared by every structure kind.
    pub fn validate(&self, tol: S) -> Result<()> {
        for (i, ci) in self.c.iter().enumerate() {
            if !ci.is_holomorphic(tol) {
                return Err(CvError::InvariantViolation(format!(
                    "Higgs matrix C_{} not holomorphic",
                    i + 1
                )));
            }
        }
        if let Some(u) = &self.u {
            if !u.is_holomorphic(tol) {
                return Err(CvError::InvariantViolation("U not holomorphic".into()));
            }
        }
        if let Some(v) = &self.v {
            if !v.is_holomorphic(tol) {
                return Err(CvError::InvariantViolation("V not holomorphic".into()));
            }
        }
        if let Some(g) = &self.g {
            if !g.is_holomorphic(tol) {
                return Err(CvError::InvariantViolation("g not holomorphic".into()));
            }
            let sym = g.sub(&g.transpose()).norm();
            if sym > tol * S::one().max(g.norm()) {
                return Err(CvError::InvariantViolation(format!(
                    "g not symmetric (residual {:.3e})",
                    sym.to_f64_lossy()
                )));
            }
        }
        if let Some(h) = &self.h {
            // hermitian as a jet: H = conj(H)^T with jet conjugation
            let res = h.sub(&h.conj().transpose()).norm();
            if res > tol * S::one().max(h.norm()) {
                return Err(CvError::InvariantViolation(format!(
                    "h not hermitian (residual {:.3e})",
                    res.to_f64_lossy()
                )));
            }
        }
        if let Some(k) = &self.kappa {
            let res = k.mul(&k.conj()).sub(&MatrixJet::identity(self.ctx, self.n)).norm();
            if res > tol * S::one().max(k.norm() * k.norm()) {
                return Err(CvError::InvariantViolation(format!(
                    "kappa not an involution (residual {:.3e})",
                    res.to_f64_lossy()
                )));
            }
        }
        if let (Some(g), Some(h), Some(k)) = (&self.g, &self.h, &self.kappa) {
            let res = g.mul(k).sub(h).norm();
            if res > tol * S::one().max(h.norm()) {
                return Err(CvError::InvariantViolation(format!(
                    "H != G*kappa (residual {:.3e})",
                    res.to_f64_lossy()
                )));
            }
        }
        Ok(())
    }
}

/// (1,0)-coefficients of the Chern connection of a hermitian Gram matrix in a
/// holomorphic frame. Exact to jet degree d-1.
pub fn chern_connection<S: Scalar>(h: &MatrixJet<S>) -> Result<Vec<MatrixJet<S>>> {
    let ctx = h.ctx;
    let hinv = h
        .invert()
        .map_err(|_| CvError::DegenerateMetric("hermitian Gram matrix singular at base point".into()))?;
    let hinv_t = hinv.transpose();
    let mut out = Vec::with_capacity(ctx.m);
    for i in 0..ctx.m {
        let dh = h.differentiate(i, VarKind::Holo);
        out.push(hinv_t.mul(&dh.transpose()));
    }
    Ok(out)
}

/// Mixed-type curvature R(d_i, dbar_j) from (1,0)- and (0,1)-connection
/// coefficients. Exact to jet degree d-2.
pub fn curvature<S: Scalar>(
    gamma10: &[MatrixJet<S>],
    gamma01: &[MatrixJet<S>],
    i: usize,
    j: usize,
) -> MatrixJet<S> {
    let a = gamma10[i].differentiate(j, VarKind::Anti).neg();
    let b = gamma01[j].differentiate(i, VarKind::Holo);
    let c = gamma01[j].commutator(&gamma10[i]);
    a.add(&b).add(&c)
}

/// Curvature with trivial (0,1)-part (holomorphic frame).
pub fn curvature_holo_frame<S: Scalar>(gamma10: &[MatrixJet<S>], i: usize, j: usize) -> MatrixJet<S> {
    gamma10[i].differentiate(j, VarKind::Anti).neg()
}

/// h-dual frame: matrix whose column j is the section e_j^* with
/// h(e_i, e_j^*) = delta_ij; equals conj(H)^{-1}.
pub fn dual_frame<S: Scalar>(h: &MatrixJet<S>) -> Result<MatrixJet<S>> {
    h.conj()
        .invert()
        .map_err(|_| CvError::DegenerateMetric("hermitian Gram matrix singular at base point".into()))
}

/// Lie derivative of a sesquilinear Gram matrix along a holomorphic field
/// (first-slot bracket only; the conjugate slot sees no variation because the
/// conjugated components are antiholomorphic).
pub fn lie_derivative_sesq<S: Scalar>(x: &VectorFieldJet<S>, gram: &MatrixJet<S>) -> MatrixJet<S> {
    let j = x.jacobian(); // J^k_a = d_a X^k
    x.apply_matrix(gram).add(&j.transpose().mul(gram))
}

/// Lie derivative of a sesquilinear Gram matrix along the conjugate of a
/// holomorphic field (second-slot bracket only).
pub fn lie_derivative_sesq_bar<S: Scalar>(x: &VectorFieldJet<S>, gram: &MatrixJet<S>) -> MatrixJet<S> {
    let j = x.jacobian();
    x.apply_bar_matrix(gram).add(&gram.mul(&j.conj()))
}

/// Lie derivative of a bilinear (holomorphic) Gram matrix along a
/// holomorphic field.
pub fn lie_derivative_bilinear<S: Scalar>(x: &VectorFieldJet<S>, gram: &MatrixJet<S>) -> MatrixJet<S> {
    let j = x.jacobian();
    x.apply_matrix(gram)
        .add(&j.transpose().mul(gram))
        .add(&gram.mul(&j))
}

/// Lie derivative of the antilinear involution kappa (through its matrix k)
/// along a holomorphic field X: apply_X(k) - J_X k + k conj(J_X).
pub fn lie_derivative_kappa<S: Scalar>(x: &VectorFieldJet<S>, k: &MatrixJet<S>) -> MatrixJet<S> {
    let j = x.jacobian();
    x.apply_matrix(k).sub(&j.mul(k)).add(&k.mul(&j.conj()))
}

/// Lie derivative of kappa along the conjugate field: apply_Xbar(k).
pub fn lie_derivative_kappa_bar<S: Scalar>(x: &VectorFieldJet<S>, k: &MatrixJet<S>) -> MatrixJet<S> {
    x.apply_bar_matrix(k)
}

/// Finite-difference cross-check of the mixed curvature at the chart origin:
/// compares -dbar_j Gamma_i (+ lower-order terms) against difference
/// quotients of the evaluated connection coefficients. Returns the max
/// relative deviation over all (i, j).
pub fn curvature_fd_check<S: Scalar>(h: &MatrixJet<S>, step: S) -> Result<S> {
    let ctx = h.ctx;
    let gamma = chern_connection(h)?;
    let mut worst = S::zero();
    let origin = vec![C::new(S::zero(), S::zero()); ctx.m];
    for i in 0..ctx.m {
        for j in 0..ctx.m {
            let r = curvature_holo_frame(&gamma, i, j);
            let r0 = r.eval(&origin);
            // vary conj(t_j) while holding t fixed: evaluate Gamma_i with
            // independent conjugate argument
            let mut sp = origin.clone();
            sp[j] = C::new(step, S::zero());
            let gp = gamma[i].eval2(&origin, &sp);
            let gm = gamma[i].eval2(&origin, &origin);
            let mut dev = S::zero();
            for a in 0..h.rows {
                for b in 0..h.cols {
                    let fd = (gp.at(a, b) - gm.at(a, b)) / C::new(step, S::zero());
                    let diff = (r0.at(a, b) + fd).norm(); // R = -dbar Gamma
                    dev = dev.max(diff);
                }
            }
            let scale = S::one().max(r0.norm_max());
            worst = worst.max(dev / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::VarKind;
    use num_complex::Complex;

    type J = Jet<f64>;

    /// rank-1 bundle, h = 1 + t conj(t): Gamma = conj(t)(1 - t conj(t) + ...),
    /// R(d_t, dbar_t)(0) = -1.
    #[test]
    fn rank1_chern_example() {
        let ctx = JetContext::new(1, 4).unwrap();
        let t = J::var(ctx, 0, VarKind::Holo);
        let h = MatrixJet::from_fn(ctx, 1, 1, |_, _| J::one(ctx).add(&t.mul(&t.conj())));
        let gamma = chern_connection(&h).unwrap();
        // expected: tbar - t tbar^2 (+ higher)
        let tb = t.conj();
        let expect = tb.sub(&t.mul(&tb).mul(&tb));
        assert!(gamma[0].at(0, 0).truncate(3).sub(&expect.truncate(3)).norm() < 1e-12);
        let r = curvature_holo_frame(&gamma, 0, 0);
        let r0 = r.at(0, 0).constant_term();
        assert!((r0 + Complex::new(1.0, 0.0)).norm() < 1e-12, "{r0}");
        // finite-difference agreement
        let dev = curvature_fd_check(&h, 1e-4).unwrap();
        assert!(dev < 1e-3, "fd deviation {dev}");
    }

    #[test]
    fn bracket_frame_fields_vanish() {
        let ctx = JetContext::new(2, 3).unwrap();
        let x = VectorFieldJet::<f64>::frame(ctx, 2, 0);
        let y = VectorFieldJet::<f64>::frame(ctx, 2, 1);
        assert!(lie_bracket(&x, &y).norm() < 1e-15);
    }

    #[test]
    fn bracket_euler_with_frame() {
        // [t d_t, d_t] = -d_t
        let ctx = JetContext::new(1, 3).unwrap();
        let t = J::var(ctx, 0, VarKind::Holo);
        let e = VectorFieldJet { comps: vec![t.clone()] };
        let f = VectorFieldJet::<f64>::frame(ctx, 1, 0);
        let b = lie_bracket(&e, &f);
        assert!(b.comps[0].add(&J::one(ctx)).norm() < 1e-15);
    }

    #[test]
    fn lie_derivative_constant_metric_scaling() {
        // L_{t d_t}(g) = 2 g for constant scalar g (bilinear tensor)
        let ctx = JetContext::new(1, 3).unwrap();
        let t = J::var(ctx, 0, VarKind::Holo);
        let e = VectorFieldJet { comps: vec![t.clone()] };
        let g = MatrixJet::<f64>::identity(ctx, 1);
        let l = lie_derivative_bilinear(&e, &g);
        assert!(l.sub(&g.scale(Complex::new(2.0, 0.0))).norm() < 1e-15);
        // sesquilinear version picks up only the first-slot term
        let ls = lie_derivative_sesq(&e, &g);
        assert!(ls.sub(&g).norm() < 1e-15);
    }

    #[test]
    fn dual_frame_identity() {
        let ctx = JetContext::new(1, 3).unwrap();
        let t = J::var(ctx, 0, VarKind::Holo);
        let h = MatrixJet::from_fn(ctx, 1, 1, |_, _| J::one(ctx).add(&t.mul(&t.conj())));
        let s = dual_frame(&h).unwrap();
        // h(e, e^*) = H * conj(s) = 1
        let res = h.mul(&s.conj()).sub(&MatrixJet::identity(ctx, 1)).norm();
        assert!(res < 1e-12);
    }
}
