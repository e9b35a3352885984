//! Order-by-order solver for formal gauge equivalences Psi = id + z A_1 +
//! z^2 A_2 + ... intertwining a holomorphic-flat-side z-family with a
//! hermitian-side one that shares (C, U, g).
//!
//! Per order k the unknown A_k enters linearly:
//!   t-direction (z^{k-1}):  [C_i, A_k] + d_i A_{k-1} + G^D_i A_{k-1} - A_{k-1} G^r_i
//!   z-direction (z^{k-1}):  [U, A_k] + (k-1) A_{k-1} - Q A_{k-1} + A_{k-1} V - Uhat A_{k-2}
//!   (0,1)-direction (z^k):  dbar_j A_k + Chat_j A_{k-1}
//!   pairing (z^k):          sum_{p+q=k} (-1)^q A_p^T g A_q
//! The commutator part [C_i, -], [U, -] has a kernel (the commutant), so a
//! second stage steers the kernel component toward the branch that keeps the
//! next order solvable: the order-(k+1) known terms, projected onto the
//! cokernel of the commutator map, are minimized over the kernel. When even
//! the optimum leaves a large projected residual the next order is
//! infeasible for every branch and the kernel component is left at zero
//! (minimum norm), keeping the reported solution canonical.

use num_complex::Complex;
use serde::Serialize;

use crate::axioms::{check_cv, check_saito, StructureReport};
use crate::bundle::{chern_connection, ChartBundle};
use crate::error::{CvError, Result};
use crate::jets::{keys_up_to, JetContext, VarKind};
use crate::linalg::{ConstMat, QrPivot};
use crate::matrix::MatrixJet;
use crate::scalar::{C, Scalar};

#[derive(Debug, Clone)]
pub struct FormalIso<S: Scalar> {
    /// A_1 .. A_K (indices shifted by one)
    pub a: Vec<MatrixJet<S>>,
    /// largest k with all order-k residuals below tolerance
    pub achieved: usize,
    /// per-order primary residual (inf-norm over coefficients)
    pub residuals: Vec<f64>,
    /// kernel dimension of the order-k primary system
    pub kernel_dims: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FormalIsoLog {
    pub achieved: usize,
    pub residuals: Vec<f64>,
    pub kernel_dims: Vec<usize>,
}

impl<S: Scalar> FormalIso<S> {
    pub fn log(&self) -> FormalIsoLog {
        FormalIsoLog {
            achieved: self.achieved,
            residuals: self.residuals.clone(),
            kernel_dims: self.kernel_dims.clone(),
        }
    }
}

/// The tensor data the order-by-order systems are assembled from.
pub struct IsoData<S: Scalar> {
    pub ctx: JetContext,
    pub n: usize,
    pub c: Vec<MatrixJet<S>>,
    pub u: MatrixJet<S>,
    pub g: MatrixJet<S>,
    /// holomorphic-side connection coefficients and skew endomorphism
    pub gamma_r: Vec<MatrixJet<S>>,
    pub v: MatrixJet<S>,
    /// hermitian-side Chern coefficients, Q, and the antilinear conjugates
    pub gamma_d: Vec<MatrixJet<S>>,
    pub q: MatrixJet<S>,
    pub chat: Vec<MatrixJet<S>>,
    pub uhat: MatrixJet<S>,
}

impl<S: Scalar> IsoData<S> {
    pub fn from_charts(saito: &ChartBundle<S>, cv: &ChartBundle<S>, tol: f64) -> Result<Self> {
        let scale = S::one()
            .max(saito.c.iter().map(|c| c.norm()).fold(S::zero(), S::max))
            .max(saito.u_ref()?.norm())
            .max(saito.g_ref()?.norm());
        let mut mismatch = S::zero();
        for i in 0..saito.m() {
            mismatch = mismatch.max(saito.c[i].sub(&cv.c[i]).norm());
        }
        mismatch = mismatch.max(saito.u_ref()?.sub(cv.u_ref()?).norm());
        mismatch = mismatch.max(saito.g_ref()?.sub(cv.g_ref()?).norm());
        if mismatch > S::of(tol) * (S::one() + scale) {
            return Err(CvError::SharedDataMismatch(mismatch.to_f64_lossy()));
        }
        let chat = saito
            .c
            .iter()
            .map(|ci| cv.kappa_conj(ci))
            .collect::<Result<Vec<_>>>()?;
        Ok(IsoData {
            ctx: saito.ctx,
            n: saito.n,
            c: saito.c.clone(),
            u: saito.u_ref()?.clone(),
            g: saito.g_ref()?.clone(),
            gamma_r: saito.gamma10_or_zero(),
            v: saito.v_ref()?.clone(),
            gamma_d: chern_connection(cv.h_ref()?)?,
            q: cv.q_ref()?.clone(),
            chat,
            uhat: cv.kappa_conj(cv.u_ref()?)?,
        })
    }

    fn scale(&self) -> S {
        let mut s = S::one();
        for t in self.c.iter().chain(self.gamma_r.iter()).chain(self.gamma_d.iter()).chain(self.chat.iter()) {
            s = s.max(t.norm());
        }
        s.max(self.u.norm()).max(self.g.norm()).max(self.v.norm()).max(self.q.norm()).max(self.uhat.norm())
    }
}

fn vec_of<S: Scalar>(m: &MatrixJet<S>, keys: &[Vec<u8>], ctx: JetContext) -> Vec<C<S>> {
    let mut out = Vec::with_capacity(m.rows * m.cols * keys.len());
    for i in 0..m.rows {
        for j in 0..m.cols {
            let jet = m.at(i, j);
            for key in keys {
                out.push(jet.get(&key[..ctx.m], &key[ctx.m..]));
            }
        }
    }
    out
}

fn matrix_of<S: Scalar>(ctx: JetContext, n: usize, keys: &[Vec<u8>], x: &[C<S>]) -> MatrixJet<S> {
    let mut m = MatrixJet::zero(ctx, n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in 0..n {
            for key in keys {
                m.at_mut(i, j).set(&key[..ctx.m], &key[ctx.m..], x[idx]);
                idx += 1;
            }
        }
    }
    m
}

pub fn solve_formal_iso_data<S: Scalar>(data: &IsoData<S>, kmax: usize, tol: f64) -> Result<FormalIso<S>> {
    let ctx = data.ctx;
    let n = data.n;
    let d = ctx.d;
    let keys_full = keys_up_to(ctx, d);
    let keys_d1 = keys_up_to(ctx, d.saturating_sub(1));
    let nx = n * n * keys_full.len();
    let scale = data.scale();
    let thresh = S::of(tol) * (S::one() + scale);
    let aug_thresh = S::of(tol.sqrt()) * (S::one() + scale);
    let zero = MatrixJet::zero(ctx, n, n);
    let ident = MatrixJet::identity(ctx, n);

    // primary equations at order k given A_k candidate `b` and the history
    let primary = |b: &MatrixJet<S>, k: usize, hist: &[MatrixJet<S>]| -> Vec<C<S>> {
        let prev = if k >= 2 { &hist[k - 2] } else { &ident };
        let prev2: &MatrixJet<S> = if k >= 3 {
            &hist[k - 3]
        } else if k == 2 {
            &ident
        } else {
            &zero
        };
        let mut rows = Vec::new();
        for i in 0..ctx.m {
            let r = data.c[i]
                .commutator(b)
                .add(&prev.differentiate(i, VarKind::Holo))
                .add(&data.gamma_d[i].mul(prev))
                .sub(&prev.mul(&data.gamma_r[i]));
            rows.extend(vec_of(&r, &keys_d1, ctx));
        }
        let km1 = Complex::new(S::of((k as f64) - 1.0), S::zero());
        let r = data
            .u
            .commutator(b)
            .add(&prev.scale(km1))
            .sub(&data.q.mul(prev))
            .add(&prev.mul(&data.v))
            .sub(&data.uhat.mul(prev2));
        rows.extend(vec_of(&r, &keys_full, ctx));
        for j in 0..ctx.m {
            let r = b.differentiate(j, VarKind::Anti).add(&data.chat[j].mul(prev));
            rows.extend(vec_of(&r, &keys_d1, ctx));
        }
        // pairing: sum_{p+q=k} (-1)^q A_p^T g A_q with A_k = b, A_0 = id
        let mut pr = b.transpose().mul(&data.g);
        let sk = if k % 2 == 0 { S::one() } else { -S::one() };
        pr = pr.add(&data.g.mul(b).scale(Complex::new(sk, S::zero())));
        for p in 1..k {
            let q = k - p;
            let sq = if q % 2 == 0 { S::one() } else { -S::one() };
            pr = pr.add(
                &hist[p - 1]
                    .transpose()
                    .mul(&data.g)
                    .mul(&hist[q - 1])
                    .scale(Complex::new(sq, S::zero())),
            );
        }
        rows.extend(vec_of(&pr, &keys_full, ctx));
        rows
    };

    // commutator map B -> ([C_i, B], [U, B]) and its QR, for cokernel
    // projection of next-order known terms
    let comm_stack = |b: &MatrixJet<S>| -> Vec<C<S>> {
        let mut rows = Vec::new();
        for ci in &data.c {
            rows.extend(vec_of(&ci.commutator(b), &keys_full, ctx));
        }
        rows.extend(vec_of(&data.u.commutator(b), &keys_full, ctx));
        rows
    };
    let comm_rows = (ctx.m + 1) * n * n * keys_full.len();
    let mut comm_mat = ConstMat::<S>::zero(comm_rows, nx);
    {
        let mut x = vec![Complex::new(S::zero(), S::zero()); nx];
        for col in 0..nx {
            x[col] = Complex::new(S::one(), S::zero());
            let b = matrix_of(ctx, n, &keys_full, &x);
            x[col] = Complex::new(S::zero(), S::zero());
            for (r, v) in comm_stack(&b).into_iter().enumerate() {
                *comm_mat.at_mut(r, col) = v;
            }
        }
    }
    let comm_qr = QrPivot::new(&comm_mat, S::of(1e-10));

    // next-order known terms as a function of A_k = b (with A_{k-1} fixed)
    let next_known = |b: &MatrixJet<S>, k: usize, prev: &MatrixJet<S>| -> Vec<C<S>> {
        let mut rows = Vec::new();
        for i in 0..ctx.m {
            let r = b
                .differentiate(i, VarKind::Holo)
                .add(&data.gamma_d[i].mul(b))
                .sub(&b.mul(&data.gamma_r[i]));
            rows.extend(vec_of(&r, &keys_full, ctx));
        }
        let kk = Complex::new(S::of(k as f64), S::zero());
        let r = b
            .scale(kk)
            .sub(&data.q.mul(b))
            .add(&b.mul(&data.v))
            .sub(&data.uhat.mul(prev));
        rows.extend(vec_of(&r, &keys_full, ctx));
        rows
    };

    let mut hist: Vec<MatrixJet<S>> = Vec::new();
    let mut residuals = Vec::new();
    let mut kernel_dims = Vec::new();
    let mut achieved = 0usize;
    for k in 1..=kmax {
        let base = primary(&zero, k, &hist);
        let rows = base.len();
        let mut a = ConstMat::<S>::zero(rows, nx);
        let mut x = vec![Complex::new(S::zero(), S::zero()); nx];
        for col in 0..nx {
            x[col] = Complex::new(S::one(), S::zero());
            let b = matrix_of(ctx, n, &keys_full, &x);
            x[col] = Complex::new(S::zero(), S::zero());
            for (r, v) in primary(&b, k, &hist).into_iter().enumerate() {
                *a.at_mut(r, col) = v - base[r];
            }
        }
        let rhs: Vec<C<S>> = base.iter().map(|v| -*v).collect();
        let qr = QrPivot::new(&a, S::of(1e-10));
        let sol = qr.solve_min_norm(&rhs);
        let kernel = qr.kernel_basis();
        kernel_dims.push(kernel.len());
        let mut xs = sol.solution;

        if !kernel.is_empty() {
            // stage 2: steer the kernel component toward next-order solvability
            let prev = if hist.is_empty() { ident.clone() } else { hist[hist.len() - 1].clone() };
            let bsol = matrix_of(ctx, n, &keys_full, &xs);
            let aug0 = comm_qr.project_coker(&next_known(&bsol, k, &prev));
            let mut cols = Vec::with_capacity(kernel.len());
            for kv in &kernel {
                let xk: Vec<C<S>> = xs.iter().zip(kv.iter()).map(|(a, b)| *a + *b).collect();
                let bk = matrix_of(ctx, n, &keys_full, &xk);
                let av = comm_qr.project_coker(&next_known(&bk, k, &prev));
                cols.push(av.iter().zip(aug0.iter()).map(|(a, b)| *a - *b).collect::<Vec<_>>());
            }
            let mut am = ConstMat::<S>::zero(aug0.len(), kernel.len());
            for (j, cv) in cols.iter().enumerate() {
                for (i, v) in cv.iter().enumerate() {
                    *am.at_mut(i, j) = *v;
                }
            }
            let arhs: Vec<C<S>> = aug0.iter().map(|v| -*v).collect();
            let aqr = QrPivot::new(&am, S::of(1e-10));
            let ysol = aqr.solve_min_norm(&arhs);
            if ysol.residual <= aug_thresh {
                for (j, y) in ysol.solution.iter().enumerate() {
                    for (i, kv) in kernel[j].iter().enumerate() {
                        xs[i] = xs[i] + *y * *kv;
                    }
                }
            }
        }

        let bk = matrix_of(ctx, n, &keys_full, &xs);
        let resid = primary(&bk, k, &hist)
            .iter()
            .map(|v| v.norm())
            .fold(S::zero(), S::max);
        residuals.push(resid.to_f64_lossy());
        if resid > thresh {
            break;
        }
        hist.push(bk);
        achieved = k;
    }
    Ok(FormalIso { a: hist, achieved, residuals, kernel_dims })
}

/// Chart-level entry: gates on the structure suites and the shared-data
/// condition, then runs the order-by-order solver.
pub fn solve_formal_iso<S: Scalar>(
    saito: &ChartBundle<S>,
    cv: &ChartBundle<S>,
    kmax: usize,
    tol: f64,
) -> Result<FormalIso<S>> {
    let rs = check_saito(saito, tol)?;
    if !rs.passed() {
        return Err(CvError::AxiomFailure(format!(
            "holomorphic-side chart fails its suite (worst {:.3e})",
            rs.worst()
        )));
    }
    let rc = check_cv(cv, tol)?;
    if !rc.passed() {
        return Err(CvError::AxiomFailure(format!(
            "hermitian-side chart fails its suite (worst {:.3e})",
            rc.worst()
        )));
    }
    let data = IsoData::from_charts(saito, cv, tol)?;
    solve_formal_iso_data(&data, kmax, tol)
}

/// h-adjoint in the stored frame: A-flat = conj(H^{-1} A^T H).
pub fn h_adjoint<S: Scalar>(a: &MatrixJet<S>, h: &MatrixJet<S>) -> Result<MatrixJet<S>> {
    Ok(h.invert()?.mul(&a.transpose()).mul(h).conj())
}

/// g-adjoint: A* = g^{-1} A^T g.
pub fn g_adjoint<S: Scalar>(a: &MatrixJet<S>, g: &MatrixJet<S>) -> Result<MatrixJet<S>> {
    Ok(g.invert()?.mul(&a.transpose()).mul(g))
}

/// Potential candidate from a solved isomorphism: the g-symmetrization
/// (B + B*)/2 of B = -A_1-flat.
pub fn extract_potential<S: Scalar>(iso: &FormalIso<S>, cv: &ChartBundle<S>) -> Result<MatrixJet<S>> {
    if iso.achieved < 1 {
        return Err(CvError::OrderTooLow(iso.achieved, 1));
    }
    let b = h_adjoint(&iso.a[0], cv.h_ref()?)?.neg();
    let bstar = g_adjoint(&b, cv.g_ref()?)?;
    Ok(b.add(&bstar).scale(Complex::new(S::of(0.5), S::zero())))
}

/// The three defining relations of a harmonic potential A (g-symmetric):
///   1. Gamma^D_i - Gamma^r_i + [A-flat, C_i] = 0
///   2. Q - V + [U, A-flat] = 0
///   3. dbar_j(A-flat) - kappa C_j kappa = 0
pub fn check_harmonic<S: Scalar>(
    saito: &ChartBundle<S>,
    cv: &ChartBundle<S>,
    a: &MatrixJet<S>,
    tol: f64,
) -> Result<StructureReport> {
    let mut rep = StructureReport::new("harmonic-potential", tol);
    let d = saito.ctx.d;
    let g = saito.g_ref()?;
    let astar = g_adjoint(a, g)?;
    rep.record("potential.g_symmetric", a.sub(&astar).norm_up_to(d), a.norm() * g.norm());
    let aflat = h_adjoint(a, cv.h_ref()?)?;
    let gamma_r = saito.gamma10_or_zero();
    let gamma_d = chern_connection(cv.h_ref()?)?;
    let cap1 = d.saturating_sub(1);
    for i in 0..saito.m() {
        let r1 = gamma_d[i].sub(&gamma_r[i]).add(&aflat.commutator(&saito.c[i]));
        rep.record(
            &format!("connection_shift.{}", i + 1),
            r1.norm_up_to(cap1),
            gamma_d[i].norm() + gamma_r[i].norm() + aflat.norm() * saito.c[i].norm(),
        );
        let r3 = aflat
            .differentiate(i, VarKind::Anti)
            .sub(&cv.kappa_conj(&saito.c[i])?);
        rep.record(
            &format!("antiholo_derivative.{}", i + 1),
            r3.norm_up_to(cap1),
            aflat.norm() + saito.c[i].norm(),
        );
    }
    let r2 = cv
        .q_ref()?
        .sub(saito.v_ref()?)
        .add(&saito.u_ref()?.commutator(&aflat));
    rep.record(
        "skew_shift",
        r2.norm_up_to(d),
        cv.q_ref()?.norm() + saito.v_ref()?.norm() + saito.u_ref()?.norm() * aflat.norm(),
    );
    Ok(rep)
}

/// Manufacture the holomorphic-flat partner of a hermitian chart whose
/// antilinear Higgs conjugates admit a dbar-antiderivative: solve
/// dbar_j(Aflat) = kappa C_j kappa for Aflat by least squares, then set
/// Gamma^r_i = Gamma^D_i + [Aflat, C_i] and V = Q + [U, Aflat]. Returns the
/// partner chart and the potential (g-symmetrized (Aflat)-flat-conjugate).
pub fn harmonic_partner<S: Scalar>(cv: &ChartBundle<S>) -> Result<(ChartBundle<S>, MatrixJet<S>)> {
    let ctx = cv.ctx;
    let n = cv.n;
    let keys = keys_up_to(ctx, ctx.d);
    let keys_d1 = keys_up_to(ctx, ctx.d.saturating_sub(1));
    let nx = n * n * keys.len();
    let chat = cv
        .c
        .iter()
        .map(|ci| cv.kappa_conj(ci))
        .collect::<Result<Vec<_>>>()?;
    let eval = |b: &MatrixJet<S>| -> Vec<C<S>> {
        let mut rows = Vec::new();
        for j in 0..ctx.m {
            let r = b.differentiate(j, VarKind::Anti).sub(&chat[j]);
            rows.extend(vec_of(&r, &keys_d1, ctx));
        }
        rows
    };
    let zero = MatrixJet::zero(ctx, n, n);
    let base = eval(&zero);
    let mut a = ConstMat::<S>::zero(base.len(), nx);
    let mut x = vec![Complex::new(S::zero(), S::zero()); nx];
    for col in 0..nx {
        x[col] = Complex::new(S::one(), S::zero());
        let b = matrix_of(ctx, n, &keys, &x);
        x[col] = Complex::new(S::zero(), S::zero());
        for (r, v) in eval(&b).into_iter().enumerate() {
            *a.at_mut(r, col) = v - base[r];
        }
    }
    let rhs: Vec<C<S>> = base.iter().map(|v| -*v).collect();
    let qr = QrPivot::new(&a, S::of(1e-10));
    let sol = qr.solve_min_norm(&rhs);
    let scale = chat.iter().map(|c| c.norm()).fold(S::one(), S::max);
    if sol.residual > S::of(1e-8) * scale {
        return Err(CvError::Other(format!(
            "antilinear Higgs conjugates not dbar-integrable (residual {:.3e})",
            sol.residual.to_f64_lossy()
        )));
    }
    let aflat = matrix_of(ctx, n, &keys, &sol.solution);
    let gamma_d = chern_connection(cv.h_ref()?)?;
    // Germ-level both are holomorphic; the jet representatives pick up
    // conjugate-variable junk exactly at the degrees where the Chern
    // coefficients stop being exact, so strip it.
    let gamma_r: Vec<MatrixJet<S>> = (0..ctx.m)
        .map(|i| gamma_d[i].add(&aflat.commutator(&cv.c[i])).holomorphic_part())
        .collect();
    let v = cv.q_ref()?.add(&cv.u_ref()?.commutator(&aflat)).holomorphic_part();
    let mut saito = ChartBundle::new(ctx, n, cv.w, cv.c.clone());
    saito.u = Some(cv.u_ref()?.clone());
    saito.g = Some(cv.g_ref()?.clone());
    saito.v = Some(v);
    saito.gamma10 = Some(gamma_r);
    let pot_raw = h_adjoint(&aflat, cv.h_ref()?)?;
    let pot_star = g_adjoint(&pot_raw, cv.g_ref()?)?;
    let potential = pot_raw.add(&pot_star).scale(Complex::new(S::of(0.5), S::zero()));
    Ok((saito, potential))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::DEFAULT_TOL;
    use crate::fixtures::{example_rank1, example_semisimple, sg_unfolded};

    #[test]
    fn rank1_pair_solves_to_exponential_gauge() {
        let b = example_rank1::<f64>(3, 0);
        let iso = solve_formal_iso(&b, &b, 3, DEFAULT_TOL).unwrap();
        assert_eq!(iso.achieved, 3, "{:?}", iso.residuals);
        // Psi = e^{z conj(u)}: A_k = conj(u)^k / k!
        assert!((iso.a[0].at(0, 0).get(&[0], &[1]).re - 1.0).abs() < 1e-8);
        assert!((iso.a[1].at(0, 0).get(&[0], &[2]).re - 0.5).abs() < 1e-8);
    }

    #[test]
    fn semisimple_pair_reaches_full_order() {
        let b = example_semisimple::<f64>(3, 2, &[0.0, 1.0]).unwrap();
        let iso = solve_formal_iso(&b, &b, 4, DEFAULT_TOL).unwrap();
        assert_eq!(iso.achieved, 4, "{:?}", iso.residuals);
        for r in &iso.residuals {
            assert!(*r < 1e-8);
        }
        // A_1 = Uhat = diag(conj(u_a) + offset_a)
        let a1 = &iso.a[0];
        assert!((a1.at(0, 0).get(&[0, 0], &[1, 0]).re - 1.0).abs() < 1e-8);
        assert!((a1.at(1, 1).constant_term().re - 1.0).abs() < 1e-8);
        assert!(a1.at(0, 1).norm() < 1e-8);
    }

    #[test]
    fn perturbed_q_fails_at_order_one() {
        let b = example_semisimple::<f64>(3, 2, &[0.0, 1.0]).unwrap();
        let mut cv = b.clone();
        let mut q = cv.q_ref().unwrap().clone();
        *q.at_mut(0, 1) = crate::jets::Jet::constant(b.ctx, Complex::new(1e-2, 0.0));
        cv.q = Some(q);
        let data = IsoData::from_charts(&b, &cv, DEFAULT_TOL).unwrap();
        let iso = solve_formal_iso_data(&data, 3, DEFAULT_TOL).unwrap();
        assert_eq!(iso.achieved, 0, "{:?}", iso.residuals);
        assert!(iso.residuals[0] >= 1e-3);
    }

    #[test]
    fn manufactured_partner_roundtrip() {
        let cv = sg_unfolded::<f64>(4).unwrap();
        let (saito, pot) = harmonic_partner(&cv).unwrap();
        let rep = crate::axioms::check_saito(&saito, DEFAULT_TOL).unwrap();
        assert!(rep.passed(), "{}", rep.render());
        let iso = solve_formal_iso(&saito, &cv, 2, DEFAULT_TOL).unwrap();
        assert!(iso.achieved >= 1, "{:?}", iso.residuals);
        let rec = extract_potential(&iso, &cv).unwrap();
        assert!(rec.sub(&pot).norm() < 1e-8, "potential deviates by {}", rec.sub(&pot).norm());
        let hrep = check_harmonic(&saito, &cv, &rec, DEFAULT_TOL).unwrap();
        assert!(hrep.passed(), "{}", hrep.render());
    }
}

