//! Matrices with jet entries and matrix-valued Laurent polynomials in the
//! spectral variable z.

use crate::error::{CvError, Result};
use crate::jets::{Jet, JetContext, VarKind};
use crate::linalg::ConstMat;
use crate::scalar::{C, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixJet<S: Scalar> {
    pub rows: usize,
    pub cols: usize,
    pub ctx: JetContext,
    data: Vec<Jet<S>>, // row-major
}

impl<S: Scalar> MatrixJet<S> {
    pub fn zero(ctx: JetContext, rows: usize, cols: usize) -> Self {
        MatrixJet {
            rows,
            cols,
            ctx,
            data: vec![Jet::zero(ctx); rows * cols],
        }
    }

    pub fn identity(ctx: JetContext, n: usize) -> Self {
        let mut m = MatrixJet::zero(ctx, n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Jet::one(ctx);
        }
        m
    }

    pub fn from_fn(ctx: JetContext, rows: usize, cols: usize, f: impl Fn(usize, usize) -> Jet<S>) -> Self {
        let mut m = MatrixJet::zero(ctx, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                *m.at_mut(i, j) = f(i, j);
            }
        }
        m
    }

    pub fn from_const(ctx: JetContext, cm: &ConstMat<S>) -> Self {
        MatrixJet::from_fn(ctx, cm.rows, cm.cols, |i, j| Jet::constant(ctx, cm.at(i, j)))
    }

    pub fn at(&self, i: usize, j: usize) -> &Jet<S> {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Jet<S> {
        &mut self.data[i * self.cols + j]
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "matrix shape mismatch");
        MatrixJet::from_fn(self.ctx, self.rows, self.cols, |i, j| self.at(i, j).add(o.at(i, j)))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        MatrixJet::from_fn(self.ctx, self.rows, self.cols, |i, j| self.at(i, j).neg())
    }

    pub fn scale(&self, s: C<S>) -> Self {
        MatrixJet::from_fn(self.ctx, self.rows, self.cols, |i, j| self.at(i, j).scale(s))
    }

    pub fn scale_jet(&self, s: &Jet<S>) -> Self {
        MatrixJet::from_fn(self.ctx, self.rows, self.cols, |i, j| self.at(i, j).mul(s))
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "matrix product shape mismatch");
        MatrixJet::from_fn(self.ctx, self.rows, o.cols, |i, j| {
            let mut acc = Jet::zero(self.ctx);
            for k in 0..self.cols {
                acc = acc.add(&self.at(i, k).mul(o.at(k, j)));
            }
            acc
        })
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn transpose(&self) -> Self {
        MatrixJet::from_fn(self.ctx, self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn conj(&self) -> Self {
        MatrixJet::from_fn(self.ctx, self.rows, self.cols, |i, j| self.at(i, j).conj())
    }

    pub fn differentiate(&self, i: usize, kind: VarKind) -> Self {
        MatrixJet::from_fn(self.ctx, self.rows, self.cols, |r, c| {
            self.at(r, c).differentiate(i, kind)
        })
    }

    pub fn trace(&self) -> Jet<S> {
        assert_eq!(self.rows, self.cols);
        let mut acc = Jet::zero(self.ctx);
        for i in 0..self.rows {
            acc = acc.add(self.at(i, i));
        }
        acc
    }

    /// Matrix applied to a component vector of jets.
    pub fn apply(&self, v: &[Jet<S>]) -> Vec<Jet<S>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Jet::zero(self.ctx);
                for k in 0..self.cols {
                    acc = acc.add(&self.at(i, k).mul(&v[k]));
                }
                acc
            })
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<Jet<S>> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn from_columns(ctx: JetContext, cols: &[Vec<Jet<S>>]) -> Self {
        let rows = cols[0].len();
        MatrixJet::from_fn(ctx, rows, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn constant_term(&self) -> ConstMat<S> {
        ConstMat::from_fn(self.rows, self.cols, |i, j| self.at(i, j).constant_term())
    }

    pub fn eval(&self, t: &[C<S>]) -> ConstMat<S> {
        ConstMat::from_fn(self.rows, self.cols, |i, j| self.at(i, j).eval(t))
    }

    pub fn eval2(&self, t: &[C<S>], s: &[C<S>]) -> ConstMat<S> {
        ConstMat::from_fn(self.rows, self.cols, |i, j| self.at(i, j).eval2(t, s))
    }

    pub fn norm(&self) -> S {
        let mut n = S::zero();
        for e in &self.data {
            n = n.max(e.norm());
        }
        n
    }

    pub fn norm_up_to(&self, deg: usize) -> S {
        let mut n = S::zero();
        for e in &self.data {
            n = n.max(e.norm_up_to(deg));
        }
        n
    }

    pub fn truncate(&self, deg: usize) -> Self {
        MatrixJet::from_fn(self.ctx, self.rows, self.cols, |i, j| self.at(i, j).truncate(deg))
    }

    pub fn is_holomorphic(&self, tol: S) -> bool {
        self.data.iter().all(|e| e.is_holomorphic(tol))
    }

    pub fn holomorphic_part(&self) -> Self {
        MatrixJet::from_fn(self.ctx, self.rows, self.cols, |i, j| self.at(i, j).holomorphic_part())
    }

    pub fn nonholo_norm(&self) -> S {
        let mut n = S::zero();
        for e in &self.data {
            n = n.max(e.nonholo_norm());
        }
        n
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    /// Newton inversion; requires the constant-term matrix to be well
    /// conditioned (relative pivot threshold 1e-12).
    pub fn invert(&self) -> Result<Self> {
        assert_eq!(self.rows, self.cols);
        let c0 = self.constant_term();
        let scale = c0.norm_max().max(S::one());
        let inv0 = c0
            .lu_inverse(S::of(1e-12) * scale)
            .map_err(|_| CvError::NonUnit(c0.min_pivot_estimate().to_f64_lossy(), scale.to_f64_lossy()))?;
        let mut x = MatrixJet::from_const(self.ctx, &inv0);
        let two_id = MatrixJet::identity(self.ctx, self.rows).scale(C::new(S::of(2.0), S::zero()));
        let mut steps = 1usize;
        let mut acc = 1usize;
        while acc < self.ctx.d + 1 {
            acc *= 2;
            steps += 1;
        }
        for _ in 0..steps {
            x = x.mul(&two_id.sub(&self.mul(&x)));
        }
        Ok(x)
    }
}

/// Matrix-valued Laurent polynomial in z with jet coefficients. Powers run
/// over a finite window; arithmetic never truncates in z.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentJet<S: Scalar> {
    /// lowest power of z present
    pub low: i32,
    /// coefficient of z^(low + k) at index k
    pub coeffs: Vec<MatrixJet<S>>,
}

impl<S: Scalar> LaurentJet<S> {
    pub fn zero(ctx: JetContext, rows: usize, cols: usize) -> Self {
        LaurentJet {
            low: 0,
            coeffs: vec![MatrixJet::zero(ctx, rows, cols)],
        }
    }

    pub fn from_terms(terms: Vec<(i32, MatrixJet<S>)>) -> Self {
        assert!(!terms.is_empty());
        let low = terms.iter().map(|(p, _)| *p).min().unwrap();
        let high = terms.iter().map(|(p, _)| *p).max().unwrap();
        let proto = &terms[0].1;
        let (ctx, r, c) = (proto.ctx, proto.rows, proto.cols);
        let mut coeffs = vec![MatrixJet::zero(ctx, r, c); (high - low + 1) as usize];
        for (p, m) in terms {
            let idx = (p - low) as usize;
            coeffs[idx] = coeffs[idx].add(&m);
        }
        LaurentJet { low, coeffs }
    }

    pub fn high(&self) -> i32 {
        self.low + self.coeffs.len() as i32 - 1
    }

    pub fn ctx(&self) -> JetContext {
        self.coeffs[0].ctx
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn scale(&self, s: C<S>) -> Self {
        LaurentJet {
            low: self.low,
            coeffs: self.coeffs.iter().map(|m| m.scale(s)).collect(),
        }
    }

    pub fn coeff(&self, p: i32) -> Option<&MatrixJet<S>> {
        if p < self.low || p > self.high() {
            None
        } else {
            Some(&self.coeffs[(p - self.low) as usize])
        }
    }

    pub fn coeff_or_zero(&self, p: i32) -> MatrixJet<S> {
        match self.coeff(p) {
            Some(m) => m.clone(),
            None => MatrixJet::zero(self.coeffs[0].ctx, self.coeffs[0].rows, self.coeffs[0].cols),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let low = self.low.min(o.low);
        let high = self.high().max(o.high());
        let mut terms = Vec::new();
        for p in low..=high {
            let mut m = self.coeff_or_zero(p);
            if let Some(b) = o.coeff(p) {
                m = m.add(b);
            }
            terms.push((p, m));
        }
        LaurentJet::from_terms(terms)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        LaurentJet {
            low: self.low,
            coeffs: self.coeffs.iter().map(|m| m.neg()).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let ctx = self.coeffs[0].ctx;
        let (r, c) = (self.coeffs[0].rows, o.coeffs[0].cols);
        let low = self.low + o.low;
        let high = self.high() + o.high();
        let mut out = vec![MatrixJet::zero(ctx, r, c); (high - low + 1) as usize];
        for (ia, a) in self.coeffs.iter().enumerate() {
            for (ib, b) in o.coeffs.iter().enumerate() {
                let idx = ia + ib;
                out[idx] = out[idx].add(&a.mul(b));
            }
        }
        LaurentJet { low, coeffs: out }
    }

    /// Entrywise derivative in a base coordinate.
    pub fn differentiate(&self, i: usize, kind: VarKind) -> Self {
        LaurentJet {
            low: self.low,
            coeffs: self.coeffs.iter().map(|m| m.differentiate(i, kind)).collect(),
        }
    }

    /// z d/dz: multiplies the z^p coefficient by p.
    pub fn z_ddz(&self) -> Self {
        LaurentJet {
            low: self.low,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, m)| m.scale(C::new(S::of((self.low + k as i32) as f64), S::zero())))
                .collect(),
        }
    }

    /// Substitute z -> -z.
    pub fn negate_z(&self) -> Self {
        LaurentJet {
            low: self.low,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, m)| {
                    if (self.low + k as i32).rem_euclid(2) == 1 {
                        m.neg()
                    } else {
                        m.clone()
                    }
                })
                .collect(),
        }
    }

    /// Multiply by z^k.
    pub fn shift(&self, k: i32) -> Self {
        LaurentJet {
            low: self.low + k,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn transpose(&self) -> Self {
        LaurentJet {
            low: self.low,
            coeffs: self.coeffs.iter().map(|m| m.transpose()).collect(),
        }
    }

    pub fn norm(&self) -> S {
        let mut n = S::zero();
        for m in &self.coeffs {
            n = n.max(m.norm());
        }
        n
    }

    pub fn norm_up_to(&self, deg: usize) -> S {
        let mut n = S::zero();
        for m in &self.coeffs {
            n = n.max(m.norm_up_to(deg));
        }
        n
    }

    /// Lowest power whose coefficient is nonzero beyond tol (relative to the
    /// overall norm); None when everything vanishes.
    pub fn effective_low(&self, tol: S) -> Option<i32> {
        let scale = self.norm().max(S::one());
        for (k, m) in self.coeffs.iter().enumerate() {
            if m.norm() > tol * scale {
                return Some(self.low + k as i32);
            }
        }
        None
    }
}
