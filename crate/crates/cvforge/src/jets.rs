//! Truncated multivariate jets: polynomial representatives of real-analytic
//! germs in the holomorphic coordinates t_1..t_m and their conjugates, all
//! monomials of total degree > d dropped.
//!
//! Coefficients are complex. A jet is *holomorphic* when every monomial with a
//! conjugate factor vanishes. Conjugation swaps the two exponent blocks and
//! conjugates coefficients, so `conj` is an involution and `mul` commutes with
//! it.
//!
//! Degree bookkeeping: sums and products of degree-d jets are exact to degree
//! d; a partial derivative of a degree-d jet is exact only to degree d-1.
//! Callers that compare residuals after k derivatives should truncate to
//! degree d-k (see [`Jet::norm_up_to`]).

use std::collections::BTreeMap;

use crate::error::{CvError, Result};
use crate::scalar::{C, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JetContext {
    /// number of base coordinates
    pub m: usize,
    /// truncation degree (total degree in t and conj(t) jointly)
    pub d: usize,
}

impl JetContext {
    pub fn new(m: usize, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(CvError::Other(format!(
                "jet truncation degree must be >= 2, got {d}"
            )));
        }
        Ok(JetContext { m, d })
    }

    pub(crate) fn key_len(&self) -> usize {
        2 * self.m
    }
}

/// Which coordinate block a differentiation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    /// d/dt_i
    Holo,
    /// d/d(conj t_i)
    Anti,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<S: Scalar> {
    pub ctx: JetContext,
    /// exponent key: first m entries the t-exponents, last m the conjugate
    /// exponents; lexicographic BTreeMap order keeps all iteration
    /// deterministic.
    coeffs: BTreeMap<Vec<u8>, C<S>>,
}

fn key_degree(k: &[u8]) -> usize {
    k.iter().map(|&e| e as usize).sum()
}

/// All exponent keys of exact total degree `deg`, lexicographic order.
pub fn keys_of_degree(ctx: JetContext, deg: usize) -> Vec<Vec<u8>> {
    let slots = ctx.key_len();
    let mut out = Vec::new();
    let mut cur = vec![0u8; slots];
    fn rec(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, slot: usize, left: usize) {
        if slot + 1 == cur.len() {
            cur[slot] = left as u8;
            out.push(cur.clone());
            cur[slot] = 0;
            return;
        }
        for e in 0..=left {
            cur[slot] = e as u8;
            rec(out, cur, slot + 1, left - e);
        }
        cur[slot] = 0;
    }
    rec(&mut out, &mut cur, 0, deg);
    out.sort();
    out
}

/// All exponent keys of total degree <= cap, ascending by degree then
/// lexicographic within a degree.
pub fn keys_up_to(ctx: JetContext, cap: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for deg in 0..=cap {
        out.extend(keys_of_degree(ctx, deg));
    }
    out
}

impl<S: Scalar> Jet<S> {
    pub fn zero(ctx: JetContext) -> Self {
        Jet {
            ctx,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(ctx: JetContext, v: C<S>) -> Self {
        let mut j = Jet::zero(ctx);
        if v.norm_sqr() != S::zero() {
            j.coeffs.insert(vec![0u8; ctx.key_len()], v);
        }
        j
    }

    pub fn one(ctx: JetContext) -> Self {
        Jet::constant(ctx, C::new(S::one(), S::zero()))
    }

    /// The coordinate jet t_i (kind = Holo) or conj(t_i) (kind = Anti).
    pub fn var(ctx: JetContext, i: usize, kind: VarKind) -> Self {
        assert!(i < ctx.m, "variable index out of range");
        let mut key = vec![0u8; ctx.key_len()];
        match kind {
            VarKind::Holo => key[i] = 1,
            VarKind::Anti => key[ctx.m + i] = 1,
        }
        let mut j = Jet::zero(ctx);
        j.coeffs.insert(key, C::new(S::one(), S::zero()));
        j
    }

    pub fn same_ctx(&self, other: &Self) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(CvError::ContextMismatch(
                self.ctx.m, self.ctx.d, other.ctx.m, other.ctx.d,
            ));
        }
        Ok(())
    }

    /// Set a coefficient; alpha are t-exponents, beta conjugate exponents.
    pub fn set(&mut self, alpha: &[u8], beta: &[u8], v: C<S>) {
        assert_eq!(alpha.len(), self.ctx.m);
        assert_eq!(beta.len(), self.ctx.m);
        let mut key = Vec::with_capacity(self.ctx.key_len());
        key.extend_from_slice(alpha);
        key.extend_from_slice(beta);
        if key_degree(&key) > self.ctx.d {
            return;
        }
        if v.norm_sqr() == S::zero() {
            self.coeffs.remove(&key);
        } else {
            self.coeffs.insert(key, v);
        }
    }

    pub fn get(&self, alpha: &[u8], beta: &[u8]) -> C<S> {
        let mut key = Vec::with_capacity(self.ctx.key_len());
        key.extend_from_slice(alpha);
        key.extend_from_slice(beta);
        self.coeffs.get(&key).copied().unwrap_or(C::new(S::zero(), S::zero()))
    }

    pub fn constant_term(&self) -> C<S> {
        self.coeffs
            .get(&vec![0u8; self.ctx.key_len()])
            .copied()
            .unwrap_or(C::new(S::zero(), S::zero()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u8>, &C<S>)> {
        self.coeffs.iter()
    }

    pub fn set_key(&mut self, key: Vec<u8>, v: C<S>) {
        assert_eq!(key.len(), self.ctx.key_len());
        if key_degree(&key) > self.ctx.d {
            return;
        }
        if v.norm_sqr() == S::zero() {
            self.coeffs.remove(&key);
        } else {
            self.coeffs.insert(key, v);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.same_ctx(other).expect("jet context mismatch");
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            let e = out
                .coeffs
                .entry(k.clone())
                .or_insert(C::new(S::zero(), S::zero()));
            *e = *e + *v;
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v = -*v;
        }
        out
    }

    pub fn scale(&self, s: C<S>) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v = *v * s;
        }
        out.prune();
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.same_ctx(other).expect("jet context mismatch");
        let mut out = Jet::zero(self.ctx);
        let d = self.ctx.d;
        for (ka, va) in &self.coeffs {
            let da = key_degree(ka);
            for (kb, vb) in &other.coeffs {
                if da + key_degree(kb) > d {
                    continue;
                }
                let key: Vec<u8> = ka.iter().zip(kb.iter()).map(|(a, b)| a + b).collect();
                let e = out
                    .coeffs
                    .entry(key)
                    .or_insert(C::new(S::zero(), S::zero()));
                *e = *e + *va * *vb;
            }
        }
        out.prune();
        out
    }

    /// Complex conjugate as a function: swaps the exponent blocks and
    /// conjugates every coefficient.
    pub fn conj(&self) -> Self {
        let m = self.ctx.m;
        let mut out = Jet::zero(self.ctx);
        for (k, v) in &self.coeffs {
            let mut key = vec![0u8; 2 * m];
            key[..m].copy_from_slice(&k[m..]);
            key[m..].copy_from_slice(&k[..m]);
            out.coeffs.insert(key, v.conj());
        }
        out
    }

    /// Partial derivative. Exact only to degree d-1.
    pub fn differentiate(&self, i: usize, kind: VarKind) -> Self {
        assert!(i < self.ctx.m);
        let pos = match kind {
            VarKind::Holo => i,
            VarKind::Anti => self.ctx.m + i,
        };
        let mut out = Jet::zero(self.ctx);
        for (k, v) in &self.coeffs {
            if k[pos] == 0 {
                continue;
            }
            let mut key = k.clone();
            key[pos] -= 1;
            let factor = S::of(k[pos] as f64);
            out.coeffs.insert(key, *v * C::new(factor, S::zero()));
        }
        out
    }

    /// Multiplicative inverse of a unit jet (Newton iteration on the
    /// truncated ring). Errors when the constant term is below
    /// 1e-12 * max(1, |jet|).
    pub fn invert_unit(&self) -> Result<Self> {
        let c0 = self.constant_term();
        let scale = self.norm().max(S::one());
        if c0.norm() <= S::of(1e-12) * scale {
            return Err(CvError::NonUnit(
                c0.norm().to_f64_lossy(),
                scale.to_f64_lossy(),
            ));
        }
        let mut x = Jet::constant(self.ctx, c0.inv());
        let two = Jet::constant(self.ctx, C::new(S::of(2.0), S::zero()));
        // accuracy degree doubles per step
        let mut steps = 1usize;
        let mut acc = 1usize;
        while acc < self.ctx.d + 1 {
            acc *= 2;
            steps += 1;
        }
        for _ in 0..steps {
            x = x.mul(&two.sub(&self.mul(&x)));
        }
        Ok(x)
    }

    /// Exponential: exp(c0) * sum (x - c0)^k / k! with the nilpotent part
    /// summed exactly to the truncation degree.
    pub fn exp(&self) -> Self {
        let c0 = self.constant_term();
        let head = c0.exp();
        let nil = self.sub(&Jet::constant(self.ctx, c0));
        let mut acc = Jet::constant(self.ctx, head);
        let mut term = Jet::constant(self.ctx, head);
        for k in 1..=self.ctx.d {
            term = term.mul(&nil).scale(C::new(S::of(1.0 / k as f64), S::zero()));
            acc = acc.add(&term);
        }
        acc
    }

    /// Max coefficient magnitude.
    pub fn norm(&self) -> S {
        let mut n = S::zero();
        for v in self.coeffs.values() {
            n = n.max(v.norm());
        }
        n
    }

    /// Max coefficient magnitude over monomials of total degree <= deg.
    pub fn norm_up_to(&self, deg: usize) -> S {
        let mut n = S::zero();
        for (k, v) in &self.coeffs {
            if key_degree(k) <= deg {
                n = n.max(v.norm());
            }
        }
        n
    }

    pub fn truncate(&self, deg: usize) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|k, _| key_degree(k) <= deg);
        out
    }

    /// Drop every monomial carrying a conjugate exponent.
    pub fn holomorphic_part(&self) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|k, _| k[self.ctx.m..].iter().all(|&e| e == 0));
        out
    }

    /// Max magnitude over coefficients carrying a conjugate exponent.
    pub fn nonholo_norm(&self) -> S {
        let mut n = S::zero();
        for (k, v) in &self.coeffs {
            if k[self.ctx.m..].iter().any(|&e| e > 0) {
                n = n.max(v.norm());
            }
        }
        n
    }

    pub fn is_holomorphic(&self, tol: S) -> bool {
        let scale = S::one().max(self.norm());
        for (k, v) in &self.coeffs {
            if k[self.ctx.m..].iter().any(|&e| e > 0) && v.norm() > tol * scale {
                return false;
            }
        }
        true
    }

    /// Evaluate with t and conj(t) treated as independent arguments (needed
    /// for holomorphic finite differences). `s` plays the role of conj(t).
    pub fn eval2(&self, t: &[C<S>], s: &[C<S>]) -> C<S> {
        assert_eq!(t.len(), self.ctx.m);
        assert_eq!(s.len(), self.ctx.m);
        let mut acc = C::new(S::zero(), S::zero());
        for (k, v) in &self.coeffs {
            let mut term = *v;
            for i in 0..self.ctx.m {
                for _ in 0..k[i] {
                    term = term * t[i];
                }
                for _ in 0..k[self.ctx.m + i] {
                    term = term * s[i];
                }
            }
            acc = acc + term;
        }
        acc
    }

    /// Evaluate at an honest point: conjugate block gets conj(t).
    pub fn eval(&self, t: &[C<S>]) -> C<S> {
        let s: Vec<C<S>> = t.iter().map(|z| z.conj()).collect();
        self.eval2(t, &s)
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, v| v.norm_sqr() != S::zero());
    }
}
