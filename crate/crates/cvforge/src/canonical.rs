//! The endomorphism-bundle metric and the data it induces on the base.
//!
//! End(K) carries the product pairings h^end(A, B) = tr(A^T H conj(B) H^{-1})
//! and g^end(A, B) = tr(A^T G B G^{-1}).  The image F of X -> C_X is a
//! holomorphic subbundle; its induced metric, Chern connection, second
//! fundamental form and curvature transport back to the tangent sheaf as the
//! canonical pairings h^M, g^M and the operator Q^M.  Sectional curvature of
//! h^M is computed both from the Gram jet and from the subbundle
//! decomposition, and twisted pullbacks through inverse multiplication
//! operators give the discriminant/caustic metrics.

use crate::bundle::{
    chern_connection, lie_derivative_sesq, lie_derivative_sesq_bar, ChartBundle, VectorFieldJet,
};
use crate::error::{CvError, Result};
use crate::jets::{Jet, VarKind};
use crate::matrix::MatrixJet;
use crate::scalar::{C, Scalar};
use crate::unfolding::{induce_f_structure, FStructure};

/// Pairing evaluators on matrix jets, with cached inverse Grams.
pub struct EndPairings<S: Scalar> {
    pub h: MatrixJet<S>,
    pub hinv: MatrixJet<S>,
    pub g: MatrixJet<S>,
    pub ginv: MatrixJet<S>,
}

pub fn end_pairings<S: Scalar>(b: &ChartBundle<S>) -> Result<EndPairings<S>> {
    let h = b.h_ref()?.clone();
    let g = b.g_ref()?.clone();
    let hinv = h
        .invert()
        .map_err(|_| CvError::DegenerateMetric("h at base point".into()))?;
    let ginv = g
        .invert()
        .map_err(|_| CvError::DegenerateMetric("g at base point".into()))?;
    Ok(EndPairings { h, hinv, g, ginv })
}

impl<S: Scalar> EndPairings<S> {
    pub fn h_end(&self, a: &MatrixJet<S>, bm: &MatrixJet<S>) -> Jet<S> {
        a.transpose()
            .mul(&self.h)
            .mul(&bm.conj())
            .mul(&self.hinv)
            .trace()
    }

    pub fn g_end(&self, a: &MatrixJet<S>, bm: &MatrixJet<S>) -> Jet<S> {
        a.transpose()
            .mul(&self.g)
            .mul(bm)
            .mul(&self.ginv)
            .trace()
    }

    /// h-adjoint: A^flat = conj(H^{-1} A^T H).
    pub fn flat(&self, a: &MatrixJet<S>) -> MatrixJet<S> {
        self.hinv.mul(&a.transpose()).mul(&self.h).conj()
    }

    /// g-adjoint: A^* = G^{-1} A^T G.
    pub fn g_adjoint(&self, a: &MatrixJet<S>) -> MatrixJet<S> {
        self.ginv.mul(&a.transpose()).mul(&self.g)
    }
}

/// The Higgs-image subbundle F with everything needed to project onto it.
pub struct FSubbundle<S: Scalar> {
    pub pair: EndPairings<S>,
    pub gamma: Vec<MatrixJet<S>>,
    /// Gram of h^end on the frame {C_a}: the h^M Gram by transport
    pub gram: MatrixJet<S>,
    gram_inv: MatrixJet<S>,
}

pub fn f_subbundle<S: Scalar>(b: &ChartBundle<S>) -> Result<FSubbundle<S>> {
    let pair = end_pairings(b)?;
    let gamma = chern_connection(b.h_ref()?)?;
    let m = b.m();
    let gram = MatrixJet::from_fn(b.ctx, m, m, |a, c| pair.h_end(&b.c[a], &b.c[c]));
    let gram_inv = gram
        .invert()
        .map_err(|_| CvError::DegenerateMetric("induced metric on the Higgs image".into()))?;
    Ok(FSubbundle {
        pair,
        gamma,
        gram,
        gram_inv,
    })
}

/// Tangential/normal split of a matrix jet against the Higgs frame.
pub struct Projection<S: Scalar> {
    pub lambda: Vec<Jet<S>>,
    pub tangential: MatrixJet<S>,
    pub normal: MatrixJet<S>,
}

impl<S: Scalar> FSubbundle<S> {
    /// Solve sum_a lambda_a h^end(C_a, C_b) = h^end(B, C_b) for all b.
    pub fn project(&self, b: &ChartBundle<S>, mat: &MatrixJet<S>) -> Projection<S> {
        let m = b.m();
        let rhs: Vec<Jet<S>> = (0..m).map(|c| self.pair.h_end(mat, &b.c[c])).collect();
        // gram^T lambda = rhs
        let lambda = self.gram_inv.transpose().apply(&rhs);
        let mut tangential = MatrixJet::zero(b.ctx, b.n, b.n);
        for (a, l) in lambda.iter().enumerate() {
            tangential = tangential.add(&b.c[a].scale_jet(l));
        }
        let normal = mat.sub(&tangential);
        Projection {
            lambda,
            tangential,
            normal,
        }
    }

    /// Covariant derivative of the Higgs field in End(K): D_i C_j =
    /// d_i C_j + [Gamma_i, C_j].
    pub fn d_higgs(&self, b: &ChartBundle<S>, i: usize, j: usize) -> MatrixJet<S> {
        b.c[j]
            .differentiate(i, VarKind::Holo)
            .add(&self.gamma[i].commutator(&b.c[j]))
    }

    /// Normal parts A^F_i(C_j) of the covariant derivatives of the frame.
    pub fn second_fundamental_form(&self, b: &ChartBundle<S>) -> Vec<Vec<MatrixJet<S>>> {
        let m = b.m();
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| self.project(b, &self.d_higgs(b, i, j)).normal)
                    .collect()
            })
            .collect()
    }

    /// The F-component of the hermitian dual of the second fundamental form
    /// applied to a normal vector: solves h^end(A^F_j(C_c), s) =
    /// h^end(C_c, result) for result in F.
    fn flat_sff_apply(
        &self,
        b: &ChartBundle<S>,
        sff: &[Vec<MatrixJet<S>>],
        j: usize,
        s: &MatrixJet<S>,
    ) -> MatrixJet<S> {
        let m = b.m();
        // h^end(C_c, sum_b mu_b C_b) = sum_b conj(mu_b) gram_cb
        let rhs: Vec<Jet<S>> = (0..m).map(|c| self.pair.h_end(&sff[j][c], s)).collect();
        let mu_conj = self.gram_inv.apply(&rhs);
        let mut out = MatrixJet::zero(b.ctx, b.n, b.n);
        for (bb, mc) in mu_conj.iter().enumerate() {
            out = out.add(&b.c[bb].scale_jet(&mc.conj()));
        }
        out
    }
}

/// Mixed curvature of the induced metric on F, computed two independent
/// ways; entry [i][j][a] is R^F(d_i, dbar_j)(C_a) as an element of End(K).
pub struct CurvatureF<S: Scalar> {
    pub gram_way: Vec<Vec<Vec<MatrixJet<S>>>>,
    pub subbundle_way: Vec<Vec<Vec<MatrixJet<S>>>>,
    pub discrepancy: f64,
}

pub fn curvature_f<S: Scalar>(b: &ChartBundle<S>) -> Result<CurvatureF<S>> {
    let sub = f_subbundle(b)?;
    let m = b.m();
    let d = b.ctx.d;
    let cap = d.saturating_sub(2);
    let sff = sub.second_fundamental_form(b);
    // way (i): Chern curvature of the Gram jet, pushed onto the frame
    let gamma_f = chern_connection(&sub.gram)?;
    let mut way1 = Vec::with_capacity(m);
    let mut way2 = Vec::with_capacity(m);
    let mut disc = S::zero();
    for i in 0..m {
        let mut row1 = Vec::with_capacity(m);
        let mut row2 = Vec::with_capacity(m);
        for j in 0..m {
            let rf = gamma_f[i].differentiate(j, VarKind::Anti).neg();
            let rd = sub.gamma[i].differentiate(j, VarKind::Anti).neg();
            let mut v1 = Vec::with_capacity(m);
            let mut v2 = Vec::with_capacity(m);
            for a in 0..m {
                // frame coefficients (column a of rf) back to End(K)
                let mut e1 = MatrixJet::zero(b.ctx, b.n, b.n);
                for bb in 0..m {
                    e1 = e1.add(&b.c[bb].scale_jet(rf.at(bb, a)));
                }
                // subbundle formula: pr^F [R^D, C_a] - Aflat_j(A_i C_a)
                let comm = rd.commutator(&b.c[a]);
                let prc = sub.project(b, &comm).tangential;
                let e2 = prc.sub(&sub.flat_sff_apply(b, &sff, j, &sff[i][a]));
                disc = disc.max(e1.sub(&e2).norm_up_to(cap));
                v1.push(e1);
                v2.push(e2);
            }
            row1.push(v1);
            row2.push(v2);
        }
        way1.push(row1);
        way2.push(row2);
    }
    Ok(CurvatureF {
        gram_way: way1,
        subbundle_way: way2,
        discrepancy: disc.to_f64_lossy(),
    })
}

/// The canonical data transported to the base chart.
pub struct CanonicalData<S: Scalar> {
    pub f: FStructure<S>,
    pub h_m: MatrixJet<S>,
    pub g_m: MatrixJet<S>,
    pub q_m: MatrixJet<S>,
}

pub fn canonical_data<S: Scalar>(
    b: &ChartBundle<S>,
    zeta: &VectorFieldJet<S>,
) -> Result<CanonicalData<S>> {
    let sub = f_subbundle(b)?;
    let m = b.m();
    let f = induce_f_structure(b, zeta)?;
    let h_m = sub.gram.clone();
    let g_m = MatrixJet::from_fn(b.ctx, m, m, |a, c| sub.pair.g_end(&b.c[a], &b.c[c]));
    let q = b.q_ref()?;
    let mut cols = Vec::with_capacity(m);
    for a in 0..m {
        cols.push(sub.project(b, &q.commutator(&b.c[a])).lambda);
    }
    let q_m = MatrixJet::from_columns(b.ctx, &cols);
    Ok(CanonicalData { f, h_m, g_m, q_m })
}

/// Residuals of the structural identities satisfied by the canonical data:
/// metric parallelism, the symmetries of the second fundamental form and of
/// the derivative of Q^M, the Euler-derivative law, hermitian symmetry, the
/// three flow invariances of h^M, and the defect identity for g^F.
pub fn check_canonical_props<S: Scalar>(
    cd: &CanonicalData<S>,
    b: &ChartBundle<S>,
    tol: f64,
) -> Result<crate::axioms::StructureReport> {
    let mut rep = crate::axioms::StructureReport::new("canonical", tol);
    let sub = f_subbundle(b)?;
    let m = b.m();
    let d = b.ctx.d;
    let cap1 = d.saturating_sub(1);
    let mut cscale = S::zero();
    for ci in &b.c {
        cscale = cscale.max(ci.norm());
    }
    let scale =
        (S::one() + cd.h_m.norm()) * (S::one() + cscale) * (S::one() + b.q_ref()?.norm());

    let gamma_m = chern_connection(&cd.h_m)?;

    // D^M preserves g^M
    let mut dg = S::zero();
    for i in 0..m {
        let r = cd
            .g_m
            .differentiate(i, VarKind::Holo)
            .sub(&gamma_m[i].transpose().mul(&cd.g_m))
            .sub(&cd.g_m.mul(&gamma_m[i]));
        dg = dg.max(r.norm_up_to(cap1));
    }
    rep.record("canon.dm_gm_parallel", dg, scale);

    // second fundamental form symmetry and vanishing along the unit
    let sff = sub.second_fundamental_form(b);
    let mut sym = S::zero();
    for i in 0..m {
        for j in (i + 1)..m {
            sym = sym.max(sff[i][j].sub(&sff[j][i]).norm_up_to(cap1));
        }
    }
    rep.record("canon.sff_symmetric", sym, scale);
    let mut sff_e = S::zero();
    for j in 0..m {
        let mut acc = MatrixJet::zero(b.ctx, b.n, b.n);
        for i in 0..m {
            acc = acc.add(&sff[i][j].scale_jet(&cd.f.e.comps[i]));
        }
        sff_e = sff_e.max(acc.norm_up_to(cap1));
    }
    rep.record("canon.sff_unit_direction", sff_e, scale);

    // D^M_X(Q^M) symmetric in X and the argument
    let dq = |i: usize| -> MatrixJet<S> {
        cd.q_m
            .differentiate(i, VarKind::Holo)
            .add(&gamma_m[i].commutator(&cd.q_m))
    };
    let mut dqs = S::zero();
    for i in 0..m {
        for j in (i + 1)..m {
            let mut r = S::zero();
            for k in 0..m {
                r = r.max(dq(i).at(k, j).sub(dq(j).at(k, i)).norm_up_to(cap1));
            }
            dqs = dqs.max(r);
        }
    }
    rep.record("canon.dm_qm_symmetric", dqs, scale);

    // normal component of the Euler-derivative law: the normal part of
    // D_i(U) must be produced entirely by [C_i, Q]
    let u = b.u_ref()?;
    let q_full = b.q_ref()?;
    let mut en = S::zero();
    for i in 0..m {
        let du = u
            .differentiate(i, VarKind::Holo)
            .add(&sub.gamma[i].commutator(u));
        let r = du.sub(&b.c[i].commutator(q_full));
        en = en.max(sub.project(b, &r).normal.norm_up_to(cap1));
    }
    rep.record("canon.euler_law_normal", en, scale);

    // D^M_X(E) = Q^M(X) + X
    let mut de = S::zero();
    for i in 0..m {
        let mut col: Vec<Jet<S>> = cd
            .f
            .euler
            .comps
            .iter()
            .map(|c| c.differentiate(i, VarKind::Holo))
            .collect();
        let ge = gamma_m[i].apply(&cd.f.euler.comps);
        for k in 0..m {
            col[k] = col[k].add(&ge[k]).sub(cd.q_m.at(k, i));
            if k == i {
                col[k] = col[k].sub(&Jet::one(b.ctx));
            }
        }
        de = de.max(
            col.iter()
                .fold(S::zero(), |acc, c| acc.max(c.norm_up_to(cap1))),
        );
    }
    rep.record("canon.dm_euler_law", de, scale);

    // Q^M is h^M-hermitian
    rep.record(
        "canon.qm_hm_hermitian",
        cd.q_m
            .transpose()
            .mul(&cd.h_m)
            .sub(&cd.h_m.mul(&cd.q_m.conj()))
            .norm_up_to(d),
        scale,
    );

    // flow invariances of the CV-metric
    rep.record(
        "canon.hm_flow_e",
        lie_derivative_sesq(&cd.f.e, &cd.h_m).norm_up_to(cap1),
        scale,
    );
    rep.record(
        "canon.hm_flow_ebar",
        lie_derivative_sesq_bar(&cd.f.e, &cd.h_m).norm_up_to(cap1),
        scale,
    );
    rep.record(
        "canon.hm_flow_euler_diff",
        lie_derivative_sesq(&cd.f.euler, &cd.h_m)
            .sub(&lie_derivative_sesq_bar(&cd.f.euler, &cd.h_m))
            .norm_up_to(cap1),
        scale,
    );

    // defect identity: the g^F-symmetrized Q^F equals minus the symmetrized
    // normal component of [Q, .] paired through g^end
    let q = b.q_ref()?;
    let mut defect = S::zero();
    for a in 0..m {
        let pa = sub.project(b, &q.commutator(&b.c[a]));
        for c in 0..m {
            let pc = sub.project(b, &q.commutator(&b.c[c]));
            let mut lhs = Jet::zero(b.ctx);
            for k in 0..m {
                lhs = lhs
                    .add(&pa.lambda[k].mul(cd.g_m.at(k, c)))
                    .add(&pc.lambda[k].mul(cd.g_m.at(a, k)));
            }
            let rhs = sub
                .pair
                .g_end(&pa.normal, &b.c[c])
                .add(&sub.pair.g_end(&pc.normal, &b.c[a]))
                .neg();
            defect = defect.max(lhs.sub(&rhs).norm_up_to(d));
        }
    }
    rep.record("canon.gm_defect_identity", defect, scale);
    Ok(rep)
}

/// Holomorphic sectional curvature of h^M in direction x at the base point,
/// via the Gram-jet curvature, cross-checked against the subbundle
/// decomposition -(|[C_X, C_Xbar^flat]|^2 + |A^F_X(C_X)|^2)/h^M(X,X)^2.
pub fn sectional_curvature<S: Scalar>(
    b: &ChartBundle<S>,
    x: &[C<S>],
) -> Result<(f64, f64)> {
    let sub = f_subbundle(b)?;
    let m = b.m();
    let mut xnorm = S::zero();
    for xi in x {
        xnorm = xnorm.max(xi.norm());
    }
    if xnorm < S::of(1e-300) {
        return Err(CvError::Other("sectional curvature of the zero direction".into()));
    }
    let h0 = sub.gram.constant_term();
    let eigs = h0.hermitian_eigenvalues();
    let min_eig = eigs
        .iter()
        .fold(S::infinity(), |acc, &e| acc.min(e));
    if min_eig <= S::zero() {
        return Err(CvError::NotPositiveDefinite(min_eig.to_f64_lossy()));
    }

    // h^M(X, X) at base
    let mut hxx = C::<S>::new(S::zero(), S::zero());
    for a in 0..m {
        for c in 0..m {
            hxx = hxx + x[a] * h0.at(a, c) * x[c].conj();
        }
    }
    let denom = hxx.re * hxx.re;

    // way (i): Gram-jet curvature
    let gamma_m = chern_connection(&sub.gram)?;
    let mut rx = crate::linalg::ConstMat::<S>::zero(m, m);
    for i in 0..m {
        for j in 0..m {
            let rij = gamma_m[i].differentiate(j, VarKind::Anti).neg().constant_term();
            for r in 0..m {
                for c in 0..m {
                    *rx.at_mut(r, c) = rx.at(r, c) + rij.at(r, c) * x[i] * x[j].conj();
                }
            }
        }
    }
    let mut rxx = vec![C::<S>::new(S::zero(), S::zero()); m];
    for r in 0..m {
        for c in 0..m {
            rxx[r] = rxx[r] + rx.at(r, c) * x[c];
        }
    }
    let mut num1 = C::<S>::new(S::zero(), S::zero());
    for a in 0..m {
        for c in 0..m {
            num1 = num1 + rxx[a] * h0.at(a, c) * x[c].conj();
        }
    }
    let way1 = (num1 / C::<S>::new(denom, S::zero())).re.to_f64_lossy();

    // way (ii): subbundle decomposition at the base point
    let mut cx = MatrixJet::zero(b.ctx, b.n, b.n);
    for (a, xa) in x.iter().enumerate() {
        cx = cx.add(&b.c[a].scale(*xa));
    }
    let cxbar_flat = b.kappa_conj(&cx)?;
    let comm = cx.commutator(&cxbar_flat);
    let term1 = sub.pair.h_end(&comm, &comm).constant_term();
    let sff = sub.second_fundamental_form(b);
    let mut ax = MatrixJet::zero(b.ctx, b.n, b.n);
    for i in 0..m {
        for j in 0..m {
            ax = ax.add(&sff[i][j].scale(x[i] * x[j]));
        }
    }
    let term2 = sub.pair.h_end(&ax, &ax).constant_term();
    let way2 = (-(term1 + term2).re / denom).to_f64_lossy();

    Ok((way1, (way1 - way2).abs()))
}

/// Pullback Grams through inverse multiplication operators: the
/// discriminant metric through (E o)^{-1} and the caustic-type metric
/// through (H^op o)^{-1} (default H^op = e, which gives back h^M).
pub fn twisted_metrics<S: Scalar>(
    cd: &CanonicalData<S>,
    hop: Option<&VectorFieldJet<S>>,
) -> Result<(MatrixJet<S>, MatrixJet<S>)> {
    let eo = cd.f.mult_matrix(&cd.f.euler);
    let w = eo.invert().map_err(|_| CvError::OnDiscriminant)?;
    let h_md = w.transpose().mul(&cd.h_m).mul(&w.conj());
    let hop_field = hop.unwrap_or(&cd.f.e);
    let ho = cd.f.mult_matrix(hop_field);
    let wk = ho.invert().map_err(|_| CvError::OnCaustic)?;
    let h_mk = wk.transpose().mul(&cd.h_m).mul(&wk.conj());
    Ok((h_md, h_mk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{example_rank1, example_semisimple, sg_unfolded};
    use crate::jets::JetContext;
    use crate::unfolding::find_primitive;
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cc(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn random_mat(rng: &mut ChaCha8Rng, ctx: JetContext, n: usize) -> MatrixJet<f64> {
        let vals: Vec<Complex<f64>> = (0..n * n)
            .map(|_| cc(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        MatrixJet::from_fn(ctx, n, n, |i, j| Jet::constant(ctx, vals[i * n + j]))
    }

    #[test]
    fn pairing_identities() {
        // trivial metric: trace pairing and dimension count
        let b = example_semisimple::<f64>(2, 3, &[0.0, 1.0, 2.0]).unwrap();
        let pair = end_pairings(&b).unwrap();
        let id = MatrixJet::identity(b.ctx, 3);
        assert!((pair.h_end(&id, &id).constant_term() - cc(3.0, 0.0)).norm() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_mat(&mut rng, b.ctx, 3);
        let bm = random_mat(&mut rng, b.ctx, 3);
        let trace_form = a.transpose().mul(&bm.conj()).trace();
        assert!(pair.h_end(&a, &bm).sub(&trace_form).norm() < 1e-12);

        // bracket-adjoint identity against a nontrivial hermitian metric
        let ctx = JetContext::new(1, 2).unwrap();
        let h = MatrixJet::from_fn(ctx, 2, 2, |i, j| {
            Jet::constant(
                ctx,
                match (i, j) {
                    (0, 0) => cc(2.0, 0.0),
                    (0, 1) => cc(0.3, 0.1),
                    (1, 0) => cc(0.3, -0.1),
                    _ => cc(1.0, 0.0),
                },
            )
        });
        let g = MatrixJet::from_fn(ctx, 2, 2, |i, j| {
            Jet::constant(
                ctx,
                match (i, j) {
                    (0, 0) => cc(1.0, 0.4),
                    (0, 1) => cc(0.2, 0.0),
                    (1, 0) => cc(0.2, 0.0),
                    _ => cc(1.5, -0.3),
                },
            )
        });
        let mut b2 = ChartBundle::new(ctx, 2, 0, vec![MatrixJet::zero(ctx, 2, 2)]);
        b2.h = Some(h);
        b2.g = Some(g);
        let pair2 = end_pairings(&b2).unwrap();
        for _ in 0..20 {
            let a = random_mat(&mut rng, ctx, 2);
            let bb = random_mat(&mut rng, ctx, 2);
            let c = random_mat(&mut rng, ctx, 2);
            let lhs = pair2.h_end(&a.commutator(&bb), &c);
            let rhs = pair2.h_end(&a, &pair2.flat(&bb).commutator(&c));
            assert!(lhs.add(&rhs).norm() < 1e-10);
            let lhs_g = pair2.g_end(&a.commutator(&bb), &c);
            let rhs_g = pair2.g_end(&a, &pair2.g_adjoint(&bb).commutator(&c));
            assert!(lhs_g.add(&rhs_g).norm() < 1e-10);
        }
    }

    #[test]
    fn projection_split_on_diagonal_chart() {
        let b = example_semisimple::<f64>(3, 2, &[0.0, 1.0]).unwrap();
        let sub = f_subbundle(&b).unwrap();
        // the Higgs frame projects to itself
        let p = sub.project(&b, &b.c[0]);
        assert!(p.lambda[0].sub(&Jet::one(b.ctx)).norm() < 1e-12);
        assert!(p.lambda[1].norm() < 1e-12);
        assert!(p.normal.norm() < 1e-12);
        // off-diagonal matrices are orthogonal to the diagonal frame
        let mut off = MatrixJet::zero(b.ctx, 2, 2);
        *off.at_mut(0, 1) = Jet::one(b.ctx);
        let p2 = sub.project(&b, &off);
        assert!(p2.tangential.norm() < 1e-12);
        assert!(p2.normal.sub(&off).norm() < 1e-12);
    }

    #[test]
    fn curvature_two_ways() {
        let b1 = example_rank1::<f64>(4, 0);
        let c1 = curvature_f(&b1).unwrap();
        assert!(c1.discrepancy < 1e-10);
        assert!(c1.gram_way[0][0][0].norm_up_to(2) < 1e-10);

        let b2 = example_semisimple::<f64>(4, 2, &[0.0, 1.0]).unwrap();
        let c2 = curvature_f(&b2).unwrap();
        assert!(c2.discrepancy < 1e-10);

        let b3 = sg_unfolded::<f64>(4).unwrap();
        let c3 = curvature_f(&b3).unwrap();
        assert!(c3.discrepancy < 1e-8, "discrepancy {}", c3.discrepancy);
        // the nilpotent direction carries genuine curvature
        assert!(c3.gram_way[1][1][1].norm_up_to(2) > 1e-3);
    }

    #[test]
    fn canonical_data_on_fixtures() {
        let b = example_semisimple::<f64>(3, 2, &[0.0, 1.0]).unwrap();
        let (zeta, _) = find_primitive(&b).unwrap();
        let cd = canonical_data(&b, &zeta).unwrap();
        assert!(cd.h_m.sub(&MatrixJet::identity(b.ctx, 2)).norm() < 1e-12);
        assert!(cd.g_m.sub(&MatrixJet::identity(b.ctx, 2)).norm() < 1e-12);
        assert!(cd.q_m.norm() < 1e-12);
        let rep = check_canonical_props(&cd, &b, 1e-9).unwrap();
        assert!(rep.passed(), "{}", rep.render());

        let b1 = example_rank1::<f64>(4, 0);
        let (z1, _) = find_primitive(&b1).unwrap();
        let cd1 = canonical_data(&b1, &z1).unwrap();
        assert!(cd1.h_m.at(0, 0).sub(&Jet::one(b1.ctx)).norm() < 1e-12);
        let rep1 = check_canonical_props(&cd1, &b1, 1e-9).unwrap();
        assert!(rep1.passed(), "{}", rep1.render());

        let b3 = sg_unfolded::<f64>(4).unwrap();
        let (z3, _) = find_primitive(&b3).unwrap();
        let cd3 = canonical_data(&b3, &z3).unwrap();
        let rep3 = check_canonical_props(&cd3, &b3, 1e-9).unwrap();
        assert!(rep3.passed(), "{}", rep3.render());
    }

    #[test]
    fn perturbed_q_is_detected() {
        let mut b = example_semisimple::<f64>(3, 2, &[0.0, 1.0]).unwrap();
        let mut q = b.q.clone().unwrap();
        *q.at_mut(0, 1) = Jet::constant(b.ctx, cc(1e-3, 0.0));
        *q.at_mut(1, 0) = Jet::constant(b.ctx, cc(-1e-3, 0.0));
        b.q = Some(q);
        let (zeta, _) = find_primitive(&b).unwrap();
        let cd = canonical_data(&b, &zeta).unwrap();
        let rep = check_canonical_props(&cd, &b, 1e-9).unwrap();
        assert!(!rep.passed());
        assert!(rep
            .checks
            .iter()
            .any(|c| !c.pass && c.residual >= 1e-4));
    }

    #[test]
    fn sectional_curvature_signs() {
        let b = example_semisimple::<f64>(4, 2, &[0.0, 1.0]).unwrap();
        let (r, disc) = sectional_curvature(&b, &[cc(1.0, 0.0), cc(2.0, 0.5)]).unwrap();
        assert!(r.abs() < 1e-10 && disc < 1e-10);

        let b3 = sg_unfolded::<f64>(4).unwrap();
        // unit direction of the induced structure is d_1
        let (re, de) = sectional_curvature(&b3, &[cc(1.0, 0.0), cc(0.0, 0.0)]).unwrap();
        assert!(re.abs() < 1e-9 && de < 1e-9);
        // nilpotent direction is strictly negative, both ways agreeing
        let (rn, dn) = sectional_curvature(&b3, &[cc(0.0, 0.0), cc(1.0, 0.0)]).unwrap();
        assert!(rn < -1.0, "expected strictly negative, got {}", rn);
        assert!(dn < 1e-8, "two-way discrepancy {}", dn);

        assert!(matches!(
            sectional_curvature(&b, &[cc(0.0, 0.0), cc(0.0, 0.0)]),
            Err(CvError::Other(_))
        ));
    }

    #[test]
    fn twisted_metrics_on_diagonal_chart() {
        let b = example_semisimple::<f64>(3, 2, &[1.0, 2.0]).unwrap();
        let (zeta, _) = find_primitive(&b).unwrap();
        let cd = canonical_data(&b, &zeta).unwrap();
        let (h_md, h_mk) = twisted_metrics(&cd, None).unwrap();
        let c0 = h_md.constant_term();
        assert!((c0.at(0, 0) - cc(1.0, 0.0)).norm() < 1e-12);
        assert!((c0.at(1, 1) - cc(0.25, 0.0)).norm() < 1e-12);
        // default twist by the unit gives back the CV-metric
        assert!(h_mk.sub(&cd.h_m).norm() < 1e-12);

        let b2 = example_semisimple::<f64>(3, 2, &[0.0, 1.0]).unwrap();
        let (z2, _) = find_primitive(&b2).unwrap();
        let cd2 = canonical_data(&b2, &z2).unwrap();
        assert!(matches!(
            twisted_metrics(&cd2, None),
            Err(CvError::OnDiscriminant)
        ));
    }
}
