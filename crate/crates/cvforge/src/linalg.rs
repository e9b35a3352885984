//! Small dense complex linear algebra: LU with partial pivoting, Householder
//! QR with column pivoting (rank-revealing least squares), symmetric Jacobi
//! eigenvalues via the real embedding, and characteristic-polynomial
//! eigenvalues for small general matrices. Everything here works on constant
//! matrices only; jet-valued systems are flattened into these.

use crate::error::{CvError, Result};
use crate::scalar::{C, Scalar};
use num_complex::Complex;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstMat<S: Scalar> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<C<S>>, // row-major
}

impl<S: Scalar> ConstMat<S> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        ConstMat {
            rows,
            cols,
            data: vec![Complex::new(S::zero(), S::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Complex::new(S::one(), S::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C<S>) -> Self {
        let mut m = Self::zero(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                *m.at_mut(i, j) = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C<S>>]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn at(&self, i: usize, j: usize) -> C<S> {
        self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut C<S> {
        &mut self.data[i * self.cols + j]
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j) + o.at(i, j))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j) - o.at(i, j))
    }

    pub fn scale(&self, s: C<S>) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j) * s)
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        let mut m = Self::zero(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.norm_sqr() == S::zero() {
                    continue;
                }
                for j in 0..o.cols {
                    *m.at_mut(i, j) = m.at(i, j) + a * o.at(k, j);
                }
            }
        }
        m
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i))
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j).conj())
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn trace(&self) -> C<S> {
        let mut t = Complex::new(S::zero(), S::zero());
        for i in 0..self.rows.min(self.cols) {
            t = t + self.at(i, i);
        }
        t
    }

    pub fn apply(&self, v: &[C<S>]) -> Vec<C<S>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Complex::new(S::zero(), S::zero());
                for k in 0..self.cols {
                    acc = acc + self.at(i, k) * v[k];
                }
                acc
            })
            .collect()
    }

    pub fn norm_max(&self) -> S {
        let mut n = S::zero();
        for v in &self.data {
            n = n.max(v.norm());
        }
        n
    }

    pub fn norm_fro(&self) -> S {
        let mut n = S::zero();
        for v in &self.data {
            n = n + v.norm_sqr();
        }
        n.sqrt()
    }

    /// LU with partial pivoting; returns permuted factors or the failing
    /// pivot magnitude. `tol` is an absolute pivot threshold.
    fn lu(&self, tol: S) -> std::result::Result<(Vec<usize>, ConstMat<S>), S> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = S::infinity();
        for k in 0..n {
            let mut best = k;
            let mut best_v = a.at(k, k).norm();
            for i in k + 1..n {
                let v = a.at(i, k).norm();
                if v > best_v {
                    best = i;
                    best_v = v;
                }
            }
            if best_v <= tol {
                return Err(best_v);
            }
            min_pivot = min_pivot.min(best_v);
            if best != k {
                for j in 0..n {
                    let t = a.at(k, j);
                    *a.at_mut(k, j) = a.at(best, j);
                    *a.at_mut(best, j) = t;
                }
                perm.swap(k, best);
            }
            let piv = a.at(k, k);
            for i in k + 1..n {
                let f = a.at(i, k) / piv;
                *a.at_mut(i, k) = f;
                for j in k + 1..n {
                    *a.at_mut(i, j) = a.at(i, j) - f * a.at(k, j);
                }
            }
        }
        let _ = min_pivot;
        Ok((perm, a))
    }

    pub fn min_pivot_estimate(&self) -> S {
        match self.lu(S::zero()) {
            Ok((_, f)) => {
                let mut m = S::infinity();
                for i in 0..self.rows {
                    m = m.min(f.at(i, i).norm());
                }
                m
            }
            Err(v) => v,
        }
    }

    pub fn lu_solve(&self, b: &[C<S>], tol: S) -> Result<Vec<C<S>>> {
        let n = self.rows;
        let (perm, f) = self
            .lu(tol)
            .map_err(|p| CvError::NonUnit(p.to_f64_lossy(), self.norm_max().to_f64_lossy()))?;
        let mut y: Vec<C<S>> = (0..n).map(|i| b[perm[i]]).collect();
        for i in 0..n {
            for j in 0..i {
                let yj = y[j];
                y[i] = y[i] - f.at(i, j) * yj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let yj = y[j];
                y[i] = y[i] - f.at(i, j) * yj;
            }
            y[i] = y[i] / f.at(i, i);
        }
        Ok(y)
    }

    pub fn lu_inverse(&self, tol: S) -> Result<ConstMat<S>> {
        let n = self.rows;
        let mut inv = ConstMat::zero(n, n);
        for j in 0..n {
            let mut e = vec![Complex::new(S::zero(), S::zero()); n];
            e[j] = Complex::new(S::one(), S::zero());
            let x = self.lu_solve(&e, tol)?;
            for i in 0..n {
                *inv.at_mut(i, j) = x[i];
            }
        }
        Ok(inv)
    }

    /// Eigenvalues of a hermitian matrix, ascending, via Jacobi sweeps on the
    /// real symmetric embedding [[Re, -Im], [Im, Re]] (each eigenvalue shows
    /// up twice; we keep every second one).
    pub fn hermitian_eigenvalues(&self) -> Vec<S> {
        let n = self.rows;
        let mut a = vec![vec![S::zero(); 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                let v = self.at(i, j);
                a[i][j] = v.re;
                a[i + n][j + n] = v.re;
                a[i][j + n] = -v.im;
                a[i + n][j] = v.im;
            }
        }
        let mut evs = jacobi_symmetric(&mut a);
        evs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        evs.into_iter().step_by(2).collect()
    }

    /// Smallest singular value (sqrt of min eigenvalue of A^H A).
    pub fn sigma_min(&self) -> S {
        let ata = self.conj_transpose().mul(self);
        let evs = ata.hermitian_eigenvalues();
        evs[0].max(S::zero()).sqrt()
    }

    /// Eigenvalues of a general (small) square matrix: characteristic
    /// polynomial by Faddeev-LeVerrier, roots by Durand-Kerner.
    pub fn eigenvalues(&self) -> Vec<C<S>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return vec![];
        }
        // scale for conditioning
        let s = self.norm_max();
        let scale = if s > S::zero() { s } else { S::one() };
        let a = self.scale(Complex::new(S::one() / scale, S::zero()));
        // char poly lambda^n + c[0] lambda^(n-1) + ... + c[n-1]
        let mut c = vec![Complex::new(S::zero(), S::zero()); n];
        let mut m = ConstMat::identity(n);
        for k in 1..=n {
            m = a.mul(&m);
            let ck = m.trace() * Complex::new(-S::one() / S::of(k as f64), S::zero());
            c[k - 1] = ck;
            for i in 0..n {
                *m.at_mut(i, i) = m.at(i, i) + ck;
            }
        }
        let roots = durand_kerner(&c);
        roots
            .into_iter()
            .map(|r| r * Complex::new(scale, S::zero()))
            .collect()
    }
}

fn jacobi_symmetric<S: Scalar>(a: &mut Vec<Vec<S>>) -> Vec<S> {
    let n = a.len();
    let eps = S::of(1e-14);
    for _sweep in 0..100 {
        let mut off = S::zero();
        for i in 0..n {
            for j in i + 1..n {
                off = off + a[i][j] * a[i][j];
            }
        }
        if off.sqrt() < eps * S::one().max(matrix_scale(a)) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < eps {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (S::of(2.0) * a[p][q]);
                let t = {
                    let s = if theta >= S::zero() { S::one() } else { -S::one() };
                    s / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let cth = S::one() / (t * t + S::one()).sqrt();
                let sth = t * cth;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = cth * akp - sth * akq;
                    a[k][q] = sth * akp + cth * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = cth * apk - sth * aqk;
                    a[q][k] = sth * apk + cth * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

fn matrix_scale<S: Scalar>(a: &[Vec<S>]) -> S {
    let mut m = S::zero();
    for row in a {
        for v in row {
            m = m.max(v.abs());
        }
    }
    m
}

/// Roots of the monic polynomial x^n + c[0] x^(n-1) + ... + c[n-1].
fn durand_kerner<S: Scalar>(c: &[C<S>]) -> Vec<C<S>> {
    let n = c.len();
    let eval = |x: C<S>| -> C<S> {
        let mut acc = Complex::new(S::one(), S::zero());
        for ck in c {
            acc = acc * x + *ck;
        }
        acc
    };
    let seed = Complex::new(S::of(0.4), S::of(0.9));
    let mut roots: Vec<C<S>> = (0..n)
        .map(|k| {
            let mut p = Complex::new(S::one(), S::zero());
            for _ in 0..=k {
                p = p * seed;
            }
            p
        })
        .collect();
    for _ in 0..500 {
        let mut delta = S::zero();
        for i in 0..n {
            let mut denom = Complex::new(S::one(), S::zero());
            for j in 0..n {
                if i != j {
                    denom = denom * (roots[i] - roots[j]);
                }
            }
            if denom.norm_sqr() == S::zero() {
                // collision: nudge
                roots[i] = roots[i] + Complex::new(S::of(1e-8), S::of(1e-8));
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] = roots[i] - step;
            delta = delta.max(step.norm());
        }
        if delta < S::of(1e-15) {
            break;
        }
    }
    roots
}

/// Rank-revealing least squares via Householder QR with column pivoting.
pub struct Lstsq<S: Scalar> {
    /// basic solution (free variables set to zero)
    pub solution: Vec<C<S>>,
    pub rank: usize,
    /// 2-norm of the residual A x - b
    pub residual: S,
    pub kernel_dim: usize,
}

pub struct QrPivot<S: Scalar> {
    m: usize,
    n: usize,
    /// factored matrix: R in the upper triangle, Householder vectors below
    f: ConstMat<S>,
    /// Householder scalars
    tau: Vec<C<S>>,
    piv: Vec<usize>,
    pub rank: usize,
}

impl<S: Scalar> QrPivot<S> {
    pub fn new(a: &ConstMat<S>, rel_tol: S) -> Self {
        let m = a.rows;
        let n = a.cols;
        let mut f = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut tau: Vec<C<S>> = Vec::new();
        let kmax = m.min(n);
        let mut col_norms: Vec<S> = (0..n)
            .map(|j| {
                let mut s = S::zero();
                for i in 0..m {
                    s = s + f.at(i, j).norm_sqr();
                }
                s
            })
            .collect();
        let mut r00 = S::zero();
        let mut rank = 0usize;
        for k in 0..kmax {
            // pivot: column with largest remaining norm
            let mut best = k;
            let mut best_v = S::neg_infinity();
            for j in k..n {
                let mut s = S::zero();
                for i in k..m {
                    s = s + f.at(i, j).norm_sqr();
                }
                col_norms[j] = s;
                if s > best_v {
                    best_v = s;
                    best = j;
                }
            }
            if best != k {
                for i in 0..m {
                    let t = f.at(i, k);
                    *f.at_mut(i, k) = f.at(i, best);
                    *f.at_mut(i, best) = t;
                }
                piv.swap(k, best);
                col_norms.swap(k, best);
            }
            let xnorm = best_v.max(S::zero()).sqrt();
            if k == 0 {
                r00 = xnorm;
            }
            if xnorm <= rel_tol * r00.max(S::of(1e-300)) || xnorm == S::zero() {
                // remaining columns negligible
                for _ in k..kmax {
                    tau.push(Complex::new(S::zero(), S::zero()));
                }
                break;
            }
            rank += 1;
            // Householder vector for column k, rows k..m
            let alpha = f.at(k, k);
            let sign = if alpha.norm_sqr() == S::zero() {
                Complex::new(S::one(), S::zero())
            } else {
                alpha / Complex::new(alpha.norm(), S::zero())
            };
            let beta = -sign * Complex::new(xnorm, S::zero());
            let v0 = alpha - beta;
            // normalize so v[k] = 1
            let mut vnorm2 = v0.norm_sqr();
            for i in k + 1..m {
                vnorm2 = vnorm2 + f.at(i, k).norm_sqr();
            }
            if vnorm2 == S::zero() {
                tau.push(Complex::new(S::zero(), S::zero()));
                continue;
            }
            let t = Complex::new(S::of(2.0) * v0.norm_sqr() / vnorm2, S::zero());
            tau.push(t);
            for i in k + 1..m {
                *f.at_mut(i, k) = f.at(i, k) / v0;
            }
            *f.at_mut(k, k) = beta;
            // apply H = I - tau v v^H to remaining columns
            for j in k + 1..n {
                let mut dot = f.at(k, j); // v[k] = 1
                for i in k + 1..m {
                    dot = dot + f.at(i, k).conj() * f.at(i, j);
                }
                let coef = t * dot;
                *f.at_mut(k, j) = f.at(k, j) - coef;
                for i in k + 1..m {
                    let vik = f.at(i, k);
                    *f.at_mut(i, j) = f.at(i, j) - coef * vik;
                }
            }
        }
        while tau.len() < kmax {
            tau.push(Complex::new(S::zero(), S::zero()));
        }
        QrPivot { m, n, f, tau, piv, rank }
    }

    /// Apply Q^H to a length-m vector in place.
    pub fn apply_qh(&self, b: &mut [C<S>]) {
        for k in 0..self.m.min(self.n) {
            let t = self.tau[k];
            if t.norm_sqr() == S::zero() {
                continue;
            }
            let mut dot = b[k];
            for i in k + 1..self.m {
                dot = dot + self.f.at(i, k).conj() * b[i];
            }
            let coef = t * dot;
            b[k] = b[k] - coef;
            for i in k + 1..self.m {
                let vik = self.f.at(i, k);
                b[i] = b[i] - coef * vik;
            }
        }
    }

    /// Apply Q to a length-m vector in place.
    pub fn apply_q(&self, b: &mut [C<S>]) {
        for k in (0..self.m.min(self.n)).rev() {
            let t = self.tau[k];
            if t.norm_sqr() == S::zero() {
                continue;
            }
            let mut dot = b[k];
            for i in k + 1..self.m {
                dot = dot + self.f.at(i, k).conj() * b[i];
            }
            let coef = t.conj() * dot;
            b[k] = b[k] - coef;
            for i in k + 1..self.m {
                let vik = self.f.at(i, k);
                b[i] = b[i] - coef * vik;
            }
        }
    }

    /// Project a length-m vector onto the orthogonal complement of the column
    /// space (the cokernel directions).
    pub fn project_coker(&self, b: &[C<S>]) -> Vec<C<S>> {
        let mut v = b.to_vec();
        self.apply_qh(&mut v);
        for item in v.iter_mut().take(self.rank) {
            *item = Complex::new(S::zero(), S::zero());
        }
        self.apply_q(&mut v);
        v
    }

    pub fn solve(&self, b: &[C<S>]) -> Lstsq<S> {
        assert_eq!(b.len(), self.m);
        let mut c = b.to_vec();
        self.apply_qh(&mut c);
        let r = self.rank;
        let mut y = vec![Complex::new(S::zero(), S::zero()); r];
        for i in (0..r).rev() {
            let mut acc = c[i];
            for j in i + 1..r {
                acc = acc - self.f.at(i, j) * y[j];
            }
            y[i] = acc / self.f.at(i, i);
        }
        let mut x = vec![Complex::new(S::zero(), S::zero()); self.n];
        for j in 0..r {
            x[self.piv[j]] = y[j];
        }
        let mut res = S::zero();
        for item in c.iter().skip(r) {
            res = res + item.norm_sqr();
        }
        Lstsq {
            solution: x,
            rank: r,
            residual: res.sqrt(),
            kernel_dim: self.n - r,
        }
    }
}

impl<S: Scalar> QrPivot<S> {
    /// Basis of the (numerical) kernel, one column per free variable.
    pub fn kernel_basis(&self) -> Vec<Vec<C<S>>> {
        let r = self.rank;
        let mut out = Vec::with_capacity(self.n - r);
        for free in r..self.n {
            // solve R11 y = R12[:, free]
            let mut y = vec![Complex::new(S::zero(), S::zero()); r];
            for i in (0..r).rev() {
                let mut acc = self.f.at(i, free);
                for j in i + 1..r {
                    acc = acc - self.f.at(i, j) * y[j];
                }
                y[i] = acc / self.f.at(i, i);
            }
            let mut v = vec![Complex::new(S::zero(), S::zero()); self.n];
            v[self.piv[free]] = Complex::new(S::one(), S::zero());
            for i in 0..r {
                v[self.piv[i]] = -y[i];
            }
            out.push(v);
        }
        out
    }

    /// Minimum-norm least-squares solution: the basic solution with its
    /// kernel component removed.
    pub fn solve_min_norm(&self, b: &[C<S>]) -> Lstsq<S> {
        let mut base = self.solve(b);
        let kernel = self.kernel_basis();
        let kd = kernel.len();
        if kd == 0 {
            return base;
        }
        // project base.solution off span(kernel): solve (K^H K) a = K^H x
        let mut gram = ConstMat::zero(kd, kd);
        let mut rhs = vec![Complex::new(S::zero(), S::zero()); kd];
        for p in 0..kd {
            for q in 0..kd {
                let mut s = Complex::new(S::zero(), S::zero());
                for i in 0..self.n {
                    s = s + kernel[p][i].conj() * kernel[q][i];
                }
                *gram.at_mut(p, q) = s;
            }
            let mut s = Complex::new(S::zero(), S::zero());
            for i in 0..self.n {
                s = s + kernel[p][i].conj() * base.solution[i];
            }
            rhs[p] = s;
        }
        if let Ok(a) = gram.lu_solve(&rhs, S::of(1e-300)) {
            for (p, ap) in a.iter().enumerate() {
                for i in 0..self.n {
                    base.solution[i] = base.solution[i] - *ap * kernel[p][i];
                }
            }
        }
        base
    }
}

pub fn lstsq<S: Scalar>(a: &ConstMat<S>, b: &[C<S>], rel_tol: S) -> Lstsq<S> {
    QrPivot::new(a, rel_tol).solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    type CM = ConstMat<f64>;
    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn lu_solve_and_inverse() {
        let a = CM::from_rows(&[
            vec![c(2.0, 1.0), c(0.0, -1.0)],
            vec![c(1.0, 0.0), c(3.0, 0.5)],
        ]);
        let b = vec![c(1.0, 0.0), c(0.0, 2.0)];
        let x = a.lu_solve(&b, 1e-14).unwrap();
        let bx = a.apply(&x);
        assert!((bx[0] - b[0]).norm() < 1e-12);
        assert!((bx[1] - b[1]).norm() < 1e-12);
        let inv = a.lu_inverse(1e-14).unwrap();
        let idm = a.mul(&inv).sub(&CM::identity(2)).norm_max();
        assert!(idm < 1e-12);
    }

    #[test]
    fn hermitian_eigs() {
        // eigenvalues of [[2, i], [-i, 2]] are 1 and 3
        let a = CM::from_rows(&[
            vec![c(2.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, -1.0), c(2.0, 0.0)],
        ]);
        let e = a.hermitian_eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-10, "{e:?}");
        assert!((e[1] - 3.0).abs() < 1e-10, "{e:?}");
    }

    #[test]
    fn general_eigs() {
        // companion-ish matrix with eigenvalues 1, 2i
        let a = CM::from_rows(&[
            vec![c(1.0, 0.0), c(5.0, -1.0)],
            vec![c(0.0, 0.0), c(0.0, 2.0)],
        ]);
        let mut e = a.eigenvalues();
        e.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((e[0] - c(0.0, 2.0)).norm() < 1e-8, "{e:?}");
        assert!((e[1] - c(1.0, 0.0)).norm() < 1e-8, "{e:?}");
    }

    #[test]
    fn lstsq_rank_and_residual() {
        // rank-1 system with inconsistent rhs
        let a = CM::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(2.0, 0.0), c(4.0, 0.0)],
        ]);
        let out = lstsq(&a, &[c(1.0, 0.0), c(0.0, 0.0)], 1e-10);
        assert_eq!(out.rank, 1);
        assert_eq!(out.kernel_dim, 1);
        assert!(out.residual > 0.3);
        // consistent overdetermined system solved exactly
        let a2 = CM::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 1.0)],
            vec![c(1.0, 0.0), c(1.0, 1.0)],
        ]);
        let x = vec![c(0.5, -0.25), c(2.0, 1.0)];
        let b = a2.apply(&x);
        let out2 = lstsq(&a2, &b, 1e-10);
        assert_eq!(out2.rank, 2);
        assert!(out2.residual < 1e-12);
        assert!((out2.solution[0] - x[0]).norm() < 1e-12);
        assert!((out2.solution[1] - x[1]).norm() < 1e-12);
    }

    #[test]
    fn coker_projection() {
        let a = CM::from_rows(&[
            vec![c(1.0, 0.0)],
            vec![c(1.0, 0.0)],
        ]);
        let qr = QrPivot::new(&a, 1e-10);
        let p = qr.project_coker(&[c(1.0, 0.0), c(0.0, 0.0)]);
        // complement of span{(1,1)} is span{(1,-1)}; projection of e1 is (0.5, -0.5)
        assert!((p[0] - c(0.5, 0.0)).norm() < 1e-12);
        assert!((p[1] - c(-0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sigma_min_simple() {
        let a = CM::from_rows(&[
            vec![c(3.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.5, 0.0)],
        ]);
        assert!((a.sigma_min() - 0.5).abs() < 1e-10);
    }
}
