//! Base-manifold structures induced through a primitive section.
//!
//! When the bundle rank equals the base dimension, a holomorphic section
//! zeta with invertible period map I(X) = -C_X(zeta) transports the Higgs
//! data down to the tangent sheaf: a commutative associative multiplication
//! with unit e and Euler field E.  On tangent-bundle data the skew operator
//! Q is recovered from first derivatives of U, the unit/Euler flow
//! identities form an all-or-nothing equivalence chain, and flat sections of
//! the right weight upgrade the picture to a Frobenius (and, jointly with a
//! positive hermitian pairing, a CDV-type) chart.

use crate::axioms::{check_cv, StructureReport};
use crate::bundle::{
    chern_connection, lie_bracket, lie_derivative_bilinear, lie_derivative_kappa,
    lie_derivative_kappa_bar, lie_derivative_sesq, lie_derivative_sesq_bar, ChartBundle,
    VectorFieldJet,
};
use crate::error::{CvError, Result};
use crate::jets::{Jet, JetContext, VarKind};
use crate::matrix::MatrixJet;
use crate::scalar::{C, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Multiplication, unit and Euler field on the base chart.  `mult[i]` is the
/// matrix of left multiplication by the i-th coordinate field, so
/// c^k_{ij} = mult[i][(k, j)].
#[derive(Debug, Clone)]
pub struct FStructure<S: Scalar> {
    pub ctx: JetContext,
    pub n: usize,
    pub mult: Vec<MatrixJet<S>>,
    pub e: VectorFieldJet<S>,
    pub euler: VectorFieldJet<S>,
}

impl<S: Scalar> FStructure<S> {
    /// X o Y for vector fields with jet components.
    pub fn mult_vf(&self, x: &VectorFieldJet<S>, y: &VectorFieldJet<S>) -> VectorFieldJet<S> {
        let mut acc = VectorFieldJet::zero(self.ctx, self.n);
        for (i, xi) in x.comps.iter().enumerate() {
            let col = self.mult[i].apply(&y.comps);
            for k in 0..self.n {
                acc.comps[k] = acc.comps[k].add(&col[k].mul(xi));
            }
        }
        acc
    }

    /// Matrix of left multiplication by a vector field.
    pub fn mult_matrix(&self, x: &VectorFieldJet<S>) -> MatrixJet<S> {
        let mut acc = MatrixJet::zero(self.ctx, self.n, self.n);
        for (i, xi) in x.comps.iter().enumerate() {
            acc = acc.add(&self.mult[i].scale_jet(xi));
        }
        acc
    }

    pub fn scale(&self) -> S {
        let mut s = self.e.norm().max(self.euler.norm());
        for m in &self.mult {
            s = s.max(m.norm());
        }
        s
    }
}

fn vec_norm<S: Scalar>(v: &[Jet<S>]) -> S {
    let mut n = S::zero();
    for c in v {
        n = n.max(c.norm());
    }
    n
}

fn vec_norm_up_to<S: Scalar>(v: &[Jet<S>], deg: usize) -> S {
    let mut n = S::zero();
    for c in v {
        n = n.max(c.norm_up_to(deg));
    }
    n
}

/// Period map of a section: columns -C_i(zeta).
pub fn period_map<S: Scalar>(b: &ChartBundle<S>, zeta: &VectorFieldJet<S>) -> MatrixJet<S> {
    let cols: Vec<Vec<Jet<S>>> = (0..b.m())
        .map(|i| {
            b.c[i]
                .apply(&zeta.comps)
                .into_iter()
                .map(|j| j.neg())
                .collect()
        })
        .collect();
    MatrixJet::from_columns(b.ctx, &cols)
}

/// Pick a constant section whose period map is best conditioned at the base
/// point.  Candidates are the frame sections followed by sign patterns
/// (first entry +1); the winner maximizes the smallest singular value of
/// I(0), ties resolved by candidate order.
pub fn find_primitive<S: Scalar>(
    b: &ChartBundle<S>,
) -> Result<(VectorFieldJet<S>, MatrixJet<S>)> {
    let n = b.n;
    if b.m() != n {
        return Err(CvError::RankMismatch(n, b.m()));
    }
    let mut candidates: Vec<Vec<C<S>>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|k| {
                    if k == a {
                        C::<S>::new(S::one(), S::zero())
                    } else {
                        C::<S>::new(S::zero(), S::zero())
                    }
                })
                .collect()
        })
        .collect();
    if n > 1 && n <= 8 {
        for mask in 0..(1u32 << (n - 1)) {
            let v: Vec<C<S>> = (0..n)
                .map(|k| {
                    let s = if k > 0 && mask >> (k - 1) & 1 == 1 {
                        -S::one()
                    } else {
                        S::one()
                    };
                    C::<S>::new(s, S::zero())
                })
                .collect();
            candidates.push(v);
        }
    }
    let mut best: Option<(S, VectorFieldJet<S>, MatrixJet<S>)> = None;
    for cand in &candidates {
        let zeta = VectorFieldJet::from_const(b.ctx, cand);
        let pm = period_map(b, &zeta);
        let sig = pm.constant_term().sigma_min();
        if best.as_ref().map_or(true, |(s, _, _)| sig > *s) {
            best = Some((sig, zeta, pm));
        }
    }
    let (sig, zeta, pm) = best.unwrap();
    let mut scale = S::zero();
    for c in &b.c {
        scale = scale.max(c.norm());
    }
    if sig <= S::of(1e-9) * (S::one() + scale) {
        return Err(CvError::NoPrimitive);
    }
    Ok((zeta, pm))
}

/// Transport the Higgs data through the period map of `zeta`:
/// left multiplication by d_i is -I^{-1} C_i I, the unit solves C_e = -Id
/// and the Euler field solves C_E = -U.
pub fn induce_f_structure<S: Scalar>(
    b: &ChartBundle<S>,
    zeta: &VectorFieldJet<S>,
) -> Result<FStructure<S>> {
    let n = b.n;
    if b.m() != n {
        return Err(CvError::RankMismatch(n, b.m()));
    }
    let pm = period_map(b, zeta);
    let pm_inv = pm
        .invert()
        .map_err(|_| CvError::NotPrimitive(pm.constant_term().sigma_min().to_f64_lossy()))?;
    let mult: Vec<MatrixJet<S>> = (0..n)
        .map(|i| pm_inv.mul(&b.c[i]).mul(&pm).neg())
        .collect();
    let e = VectorFieldJet {
        comps: pm_inv.apply(&zeta.comps),
    };
    let euler = VectorFieldJet {
        comps: pm_inv.apply(&b.u_ref()?.apply(&zeta.comps)),
    };
    Ok(FStructure {
        ctx: b.ctx,
        n,
        mult,
        e,
        euler,
    })
}

/// Lie derivative of the multiplication tensor along X, evaluated on a pair
/// of vector fields: (L_X o)(Y, Z) = [X, Y o Z] - [X, Y] o Z - Y o [X, Z].
pub fn lie_of_mult<S: Scalar>(
    f: &FStructure<S>,
    x: &VectorFieldJet<S>,
    y: &VectorFieldJet<S>,
    z: &VectorFieldJet<S>,
) -> VectorFieldJet<S> {
    let yz = f.mult_vf(y, z);
    lie_bracket(x, &yz)
        .sub(&f.mult_vf(&lie_bracket(x, y), z))
        .sub(&f.mult_vf(y, &lie_bracket(x, z)))
}

/// Commutativity, associativity, unit, the product rule for Lie derivatives
/// of the multiplication, and the Euler rescaling law.
pub fn check_f_manifold<S: Scalar>(f: &FStructure<S>, tol: f64) -> StructureReport {
    let mut rep = StructureReport::new("fmanifold", tol);
    let n = f.n;
    let d = f.ctx.d;
    let scale = f.scale() * (S::one() + f.scale());
    let frames: Vec<VectorFieldJet<S>> = (0..n)
        .map(|i| VectorFieldJet::frame(f.ctx, n, i))
        .collect();

    let mut comm = S::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut diff = S::zero();
            for k in 0..n {
                diff = diff.max(f.mult[i].at(k, j).sub(f.mult[j].at(k, i)).norm_up_to(d));
            }
            comm = comm.max(diff);
        }
    }
    rep.record("mult.commutative", comm, scale);

    let unit = f
        .mult_matrix(&f.e)
        .sub(&MatrixJet::identity(f.ctx, n))
        .norm_up_to(d);
    rep.record("mult.unit", unit, scale);

    let mut assoc = S::zero();
    for i in 0..n {
        for j in i..n {
            let prod = f.mult[i].mul(&f.mult[j]);
            let mut rec = MatrixJet::zero(f.ctx, n, n);
            for k in 0..n {
                rec = rec.add(&f.mult[k].scale_jet(f.mult[i].at(k, j)));
            }
            assoc = assoc.max(prod.sub(&rec).norm_up_to(d));
        }
    }
    rep.record("mult.associative", assoc, scale);

    // (L_{X o Y})(o) = X o (L_Y o) + Y o (L_X o) on coordinate quadruples.
    let cap1 = d.saturating_sub(1);
    let mut prod_rule = S::zero();
    for i in 0..n {
        for j in i..n {
            let xy = f.mult_vf(&frames[i], &frames[j]);
            for k in 0..n {
                for l in 0..n {
                    let lhs = lie_of_mult(f, &xy, &frames[k], &frames[l]);
                    let rhs = f
                        .mult_vf(&frames[i], &lie_of_mult(f, &frames[j], &frames[k], &frames[l]))
                        .add(&f.mult_vf(
                            &frames[j],
                            &lie_of_mult(f, &frames[i], &frames[k], &frames[l]),
                        ));
                    prod_rule = prod_rule.max(vec_norm_up_to(&lhs.sub(&rhs).comps, cap1));
                }
            }
        }
    }
    rep.record("fman.mult_product_rule", prod_rule, scale);

    let mut euler = S::zero();
    for j in 0..n {
        for k in 0..n {
            let le = lie_of_mult(f, &f.euler, &frames[j], &frames[k]);
            let jk = f.mult_vf(&frames[j], &frames[k]);
            euler = euler.max(vec_norm_up_to(&le.sub(&jk).comps, cap1));
        }
    }
    rep.record("fman.euler_rescaling", euler, scale);
    rep
}

/// Reconstruction of the skew operator from first derivatives of U, plus
/// (on tangent-bundle data) the flow-difference formula and the gap between
/// the two.
#[derive(Debug, Clone)]
pub struct QReconstruction<S: Scalar> {
    pub q: MatrixJet<S>,
    pub tangent_q: Option<MatrixJet<S>>,
    pub discrepancy: Option<f64>,
}

fn g_skew<S: Scalar>(r: &MatrixJet<S>, g: &MatrixJet<S>) -> Result<MatrixJet<S>> {
    let ginv = g.invert()?;
    Ok(r.sub(&ginv.mul(&r.transpose()).mul(g))
        .scale(C::<S>::new(S::of(0.5), S::zero())))
}

/// Matrix of D_X - L_X acting on the tangent frame: sum_i X^i Gamma_i + J_X.
pub fn flow_difference<S: Scalar>(
    x: &VectorFieldJet<S>,
    gamma: &[MatrixJet<S>],
) -> MatrixJet<S> {
    let n = x.dim();
    let mut acc = x.jacobian();
    for i in 0..n {
        acc = acc.add(&gamma[i].scale_jet(&x.comps[i]));
    }
    acc
}

pub fn reconstruct_q<S: Scalar>(
    b: &ChartBundle<S>,
    zeta: &VectorFieldJet<S>,
) -> Result<QReconstruction<S>> {
    let n = b.n;
    if b.m() != n {
        return Err(CvError::RankMismatch(n, b.m()));
    }
    let gamma = chern_connection(b.h_ref()?)?;
    let u = b.u_ref()?;
    let g = b.g_ref()?;
    let pm = period_map(b, zeta);
    let pm_inv = pm
        .invert()
        .map_err(|_| CvError::NotPrimitive(pm.constant_term().sigma_min().to_f64_lossy()))?;
    // column b of the raw endomorphism: sum_i (I^{-1})^i_b (D_i U)(zeta)
    let cols: Vec<Vec<Jet<S>>> = (0..n)
        .map(|i| {
            u.differentiate(i, VarKind::Holo)
                .add(&gamma[i].commutator(u))
                .apply(&zeta.comps)
        })
        .collect();
    let raw = MatrixJet::from_columns(b.ctx, &cols).mul(&pm_inv);
    let q = g_skew(&raw, g)?;

    // On tangent-presented data (Higgs field symmetric in field and frame
    // slot, so C_X = -X o in the coordinate frame) the same operator is the
    // skew part of D_E - L_E.
    let mut asym = S::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            for kk in 0..n {
                asym = asym.max(b.c[i].at(kk, j).sub(b.c[j].at(kk, i)).norm());
            }
        }
    }
    let mut cscale = S::zero();
    for ci in &b.c {
        cscale = cscale.max(ci.norm());
    }
    if asym > S::of(1e-9) * (S::one() + cscale) {
        return Ok(QReconstruction {
            q,
            tangent_q: None,
            discrepancy: None,
        });
    }
    let euler = VectorFieldJet {
        comps: pm_inv.apply(&u.apply(&zeta.comps)),
    };
    let tq = g_skew(&flow_difference(&euler, &gamma), g)?;
    let cap = b.ctx.d.saturating_sub(1);
    let disc = q.sub(&tq).norm_up_to(cap).to_f64_lossy();
    Ok(QReconstruction {
        q,
        tangent_q: Some(tq),
        discrepancy: Some(disc),
    })
}

fn push_info(rep: &mut StructureReport, name: &str, residual: f64) {
    rep.checks.push(crate::axioms::AxiomCheck {
        name: name.to_string(),
        residual,
        threshold: f64::INFINITY,
        pass: true,
    });
}

/// The unit/Euler flow-identity chain on tangent-bundle data: the seven
/// members must vanish together or fail together, and when the Euler flow
/// rescales g conformally with weight 2 - d the skew operator acquires a
/// closed-form expression whose flows are all driven by [U, kUk].
pub fn check_flow_chain<S: Scalar>(
    b: &ChartBundle<S>,
    f: &FStructure<S>,
    d_weight: S,
    tol: f64,
) -> Result<StructureReport> {
    let mut rep = StructureReport::new("flow-chain", tol);
    let n = b.n;
    let d = b.ctx.d;
    let cap1 = d.saturating_sub(1);
    let gamma = chern_connection(b.h_ref()?)?;
    let g = b.g_ref()?;
    let h = b.h_ref()?;
    let k = b.kappa_ref()?;
    let q = b.q_ref()?;
    let u = b.u_ref()?;
    let mut scale = g.norm().max(h.norm()).max(k.norm()).max(u.norm());
    scale = scale.max(f.scale()) * (S::one() + f.e.norm() + f.euler.norm());

    let e = &f.e;
    let eu = &f.euler;

    // members of the equivalence chain (informational: only joint behaviour
    // is pass/fail)
    let de_le = flow_difference(e, &gamma).norm_up_to(cap1);
    let de_e = {
        let mut v = Vec::with_capacity(n);
        for kk in 0..n {
            v.push(e.apply(&e.comps[kk]));
        }
        let mut conn = vec![Jet::zero(b.ctx); n];
        for i in 0..n {
            let col = gamma[i].apply(&e.comps);
            for kk in 0..n {
                conn[kk] = conn[kk].add(&col[kk].mul(&e.comps[i]));
            }
        }
        let total: Vec<Jet<S>> = v.iter().zip(&conn).map(|(a, c)| a.add(c)).collect();
        vec_norm_up_to(&total, cap1)
    };
    let le_h = lie_derivative_sesq(e, h).norm_up_to(cap1);
    let lebar_h = lie_derivative_sesq_bar(e, h).norm_up_to(cap1);
    let le_k = lie_derivative_kappa(e, k).norm_up_to(cap1);
    let lebar_k = lie_derivative_kappa_bar(e, k).norm_up_to(cap1);
    let le_g = lie_derivative_bilinear(e, g).norm_up_to(cap1);
    let members = [
        ("chain.flow_difference_e", de_le),
        ("chain.de_e", de_e),
        ("chain.le_h", le_h),
        ("chain.lebar_h", lebar_h),
        ("chain.le_kappa", le_k),
        ("chain.lebar_kappa", lebar_k),
        ("chain.le_g", le_g),
    ];
    let thresh = S::of(tol) * (S::one() + scale);
    let zeros = members.iter().filter(|(_, r)| *r < thresh).count();
    for (name, r) in &members {
        push_info(&mut rep, name, r.to_f64_lossy());
    }
    rep.record_flag("chain.consistent", zeros == 0 || zeros == members.len());
    let chain_holds = zeros == members.len();

    // unconditional flow identities of the skew operator
    let lie_end = |x: &VectorFieldJet<S>, a: &MatrixJet<S>| -> MatrixJet<S> {
        let jx = x.jacobian();
        x.apply_matrix(a).sub(&jx.mul(a)).add(&a.mul(&jx))
    };
    let cov = |x: &VectorFieldJet<S>, a: &MatrixJet<S>| -> MatrixJet<S> {
        let mut acc = x.apply_matrix(a);
        for i in 0..n {
            acc = acc.add(&gamma[i].commutator(a).scale_jet(&x.comps[i]));
        }
        acc
    };
    rep.record("flow.lebar_q", e.apply_bar_matrix(q).norm_up_to(cap1), scale);
    rep.record("flow.de_q", cov(e, q).norm_up_to(cap1), scale);
    if chain_holds {
        rep.record("flow.le_q", lie_end(e, q).norm_up_to(cap1), scale);
    }

    // conformal Euler weight and its consequences
    let two_minus_d = C::<S>::new(S::of(2.0) - d_weight, S::zero());
    let conformal = lie_derivative_bilinear(eu, g)
        .sub(&g.scale(two_minus_d))
        .norm_up_to(cap1);
    push_info(&mut rep, "euler.conformal_weight", conformal.to_f64_lossy());
    if conformal < thresh {
        let half = C::<S>::new((S::of(2.0) - d_weight) * S::of(0.5), S::zero());
        let q_euler = flow_difference(eu, &gamma).sub(&MatrixJet::identity(b.ctx, n).scale(half));
        rep.record("euler.q_formula", q.sub(&q_euler).norm_up_to(cap1), scale);
        let flow_h = lie_derivative_sesq(eu, h)
            .sub(&lie_derivative_sesq_bar(eu, h))
            .norm_up_to(cap1);
        rep.record("euler.h_flow_invariance", flow_h, scale);
        let driver = u.commutator(&b.kappa_conj(u)?);
        rep.record(
            "euler.le_q_driver",
            lie_end(eu, q).sub(&driver).norm_up_to(cap1),
            scale,
        );
        rep.record(
            "euler.lebar_q_driver",
            eu.apply_bar_matrix(q).sub(&driver).norm_up_to(cap1),
            scale,
        );
        rep.record(
            "euler.de_q_driver",
            cov(eu, q).sub(&driver).norm_up_to(cap1),
            scale,
        );
    }
    Ok(rep)
}

/// A Frobenius chart: the induced multiplication together with the metric
/// and connection coefficients pushed down through the period map.
#[derive(Debug, Clone)]
pub struct FrobeniusChart<S: Scalar> {
    pub f: FStructure<S>,
    pub g_m: MatrixJet<S>,
    pub gamma_m: Vec<MatrixJet<S>>,
    pub d_fitted: f64,
}

pub fn build_frobenius<S: Scalar>(
    saito: &ChartBundle<S>,
    zeta: &VectorFieldJet<S>,
    d_weight: S,
    tol: f64,
) -> Result<FrobeniusChart<S>> {
    let rep = crate::axioms::check_saito(saito, tol)?;
    if !rep.passed() {
        return Err(crate::correspond::fail(&rep));
    }
    let n = saito.n;
    let gamma = saito.gamma10_or_zero();
    let v = saito.v_ref()?;
    let g = saito.g_ref()?;
    let scale = S::one() + zeta.norm() + v.norm();
    // hypothesis 1: zeta is flat for the residual connection
    let mut flat = S::zero();
    for i in 0..n {
        let mut col: Vec<Jet<S>> = zeta
            .comps
            .iter()
            .map(|c| c.differentiate(i, VarKind::Holo))
            .collect();
        let gz = gamma[i].apply(&zeta.comps);
        for kk in 0..n {
            col[kk] = col[kk].add(&gz[kk]);
        }
        flat = flat.max(vec_norm(&col));
    }
    if flat > S::of(tol) * scale {
        return Err(CvError::BadSection(
            "flat section".into(),
            flat.to_f64_lossy(),
    ));
    }
    // hypothesis 2: zeta is a V-eigenvector of weight d/2
    let vz = v.apply(&zeta.comps);
    let half_d = C::<S>::new(d_weight * S::of(0.5), S::zero());
    let eig: Vec<Jet<S>> = vz
        .iter()
        .zip(&zeta.comps)
        .map(|(a, z)| a.sub(&z.scale(half_d)))
        .collect();
    let eig_res = vec_norm(&eig);
    if eig_res > S::of(tol) * scale {
        return Err(CvError::BadSection(
            "weight eigenvector".into(),
            eig_res.to_f64_lossy(),
        ));
    }
    // least-squares fit of d from <V zeta, zeta> / <zeta, zeta> at base
    let z0: Vec<C<S>> = zeta.comps.iter().map(|c| c.constant_term()).collect();
    let vz0: Vec<C<S>> = vz.iter().map(|c| c.constant_term()).collect();
    let mut num = C::<S>::new(S::zero(), S::zero());
    let mut den = C::<S>::new(S::zero(), S::zero());
    for (a, b2) in vz0.iter().zip(&z0) {
        num = num + *a * b2.conj();
        den = den + *b2 * b2.conj();
    }
    let d_fitted = 2.0 * (num / den).re.to_f64_lossy();

    let f = induce_f_structure(saito, zeta)?;
    let pm = period_map(saito, zeta);
    let pm_inv = pm.invert()?;
    let g_m = pm.transpose().mul(g).mul(&pm);
    let gamma_m: Vec<MatrixJet<S>> = (0..n)
        .map(|i| {
            pm_inv.mul(&pm.differentiate(i, VarKind::Holo).add(&gamma[i].mul(&pm)))
        })
        .collect();
    Ok(FrobeniusChart {
        f,
        g_m,
        gamma_m,
        d_fitted,
    })
}

/// Levi-Civita coefficients of a holomorphic metric in the coordinate frame:
/// (Gamma_i)^k_j = (1/2) g^{kl} (d_i g_jl + d_j g_il - d_l g_ij).
pub fn levi_civita<S: Scalar>(g: &MatrixJet<S>) -> Result<Vec<MatrixJet<S>>> {
    let n = g.rows;
    let ginv = g.invert()?;
    let half = C::<S>::new(S::of(0.5), S::zero());
    let dg: Vec<MatrixJet<S>> = (0..n).map(|i| g.differentiate(i, VarKind::Holo)).collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let m = MatrixJet::from_fn(g.ctx, n, n, |k, j| {
            let mut acc = Jet::zero(g.ctx);
            for l in 0..n {
                let sym = dg[i]
                    .at(j, l)
                    .add(dg[j].at(i, l))
                    .sub(dg[l].at(i, j));
                acc = acc.add(&ginv.at(k, l).mul(&sym));
            }
            acc.scale(half)
        });
        out.push(m);
    }
    Ok(out)
}

/// Flatness and torsion of the Levi-Civita connection, invariance of the
/// multiplication, covariance of the unit, the conformal Euler weight, and
/// symmetry of the covariant derivative of the multiplication tensor.
pub fn check_frobenius<S: Scalar>(
    f: &FStructure<S>,
    g_m: &MatrixJet<S>,
    d_weight: S,
    tol: f64,
) -> Result<StructureReport> {
    let mut rep = StructureReport::new("frobenius", tol);
    let n = f.n;
    let d = f.ctx.d;
    let cap1 = d.saturating_sub(1);
    let cap2 = d.saturating_sub(2);
    let lc = levi_civita(g_m)?;
    let scale = (S::one() + g_m.norm()) * (S::one() + f.scale());

    let mut flat = S::zero();
    let mut torsion = S::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let r = lc[j]
                .differentiate(i, VarKind::Holo)
                .sub(&lc[i].differentiate(j, VarKind::Holo))
                .add(&lc[i].commutator(&lc[j]));
            flat = flat.max(r.norm_up_to(cap2));
            let mut t = S::zero();
            for k in 0..n {
                t = t.max(lc[i].at(k, j).sub(lc[j].at(k, i)).norm_up_to(cap1));
            }
            torsion = torsion.max(t);
        }
    }
    rep.record("frob.lc_flat", flat, scale);
    rep.record("frob.lc_torsion_free", torsion, scale);

    let mut invariance = S::zero();
    for i in 0..n {
        let t = f.mult[i].transpose().mul(g_m);
        invariance = invariance.max(t.sub(&g_m.mul(&f.mult[i])).norm_up_to(d));
    }
    rep.record("frob.mult_invariance", invariance, scale);

    let mut nabla_e = S::zero();
    for i in 0..n {
        let mut col: Vec<Jet<S>> = f
            .e
            .comps
            .iter()
            .map(|c| c.differentiate(i, VarKind::Holo))
            .collect();
        let ge = lc[i].apply(&f.e.comps);
        for k in 0..n {
            col[k] = col[k].add(&ge[k]);
        }
        nabla_e = nabla_e.max(vec_norm_up_to(&col, cap1));
    }
    rep.record("frob.unit_flat", nabla_e, scale);

    let two_minus_d = C::<S>::new(S::of(2.0) - d_weight, S::zero());
    rep.record(
        "frob.euler_conformal",
        lie_derivative_bilinear(&f.euler, g_m)
            .sub(&g_m.scale(two_minus_d))
            .norm_up_to(cap1),
        scale,
    );

    // nabla C as a symmetric 2-form in the derivative slots
    let nabla_c = |i: usize, j: usize| -> MatrixJet<S> {
        let mut r = f.mult[j]
            .differentiate(i, VarKind::Holo)
            .add(&lc[i].commutator(&f.mult[j]));
        for k in 0..n {
            r = r.sub(&f.mult[k].scale_jet(lc[i].at(k, j)));
        }
        r
    };
    let mut pot = S::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            pot = pot.max(nabla_c(i, j).sub(&nabla_c(j, i)).norm_up_to(cap1));
        }
    }
    rep.record("frob.nabla_mult_symmetric", pot, scale);
    Ok(rep)
}

/// CDV verdict: CV axioms plus Frobenius axioms plus compatibility of the
/// Higgs field and U with the induced multiplication and Euler field, with
/// the equivalent small-system formulation cross-checked.
pub fn check_cdv<S: Scalar>(
    b: &ChartBundle<S>,
    f: &FStructure<S>,
    g_m: &MatrixJet<S>,
    d_weight: C<S>,
    tol: f64,
) -> Result<StructureReport> {
    if d_weight.im.abs() > S::of(tol) {
        return Err(CvError::BadWeight(format!(
            "conformal weight must be real, got imaginary part {:.3e}",
            d_weight.im.to_f64_lossy()
        )));
    }
    let dw = d_weight.re;
    let mut rep = StructureReport::new("cdv", tol);
    rep.merge(check_cv(b, tol)?);
    let frep = check_frobenius(f, g_m, dw, tol)?;
    let frob_ok = frep.passed();
    rep.merge(frep);

    let n = b.n;
    let d = b.ctx.d;
    let cap1 = d.saturating_sub(1);
    let scale = (S::one() + f.scale()) * (S::one() + b.u_ref()?.norm());
    let mut higgs_match = S::zero();
    for i in 0..n {
        higgs_match = higgs_match.max(b.c[i].add(&f.mult[i]).norm_up_to(d));
    }
    rep.record("cdv.higgs_is_mult", higgs_match, scale);
    rep.record(
        "cdv.u_is_euler_mult",
        b.u_ref()?.sub(&f.mult_matrix(&f.euler)).norm_up_to(d),
        scale,
    );

    // equivalent small system: Frobenius + kappa real structure with the
    // flow-formula Q h-selfadjoint and the two mixed structure equations
    let gamma = chern_connection(b.h_ref()?)?;
    let h = b.h_ref()?;
    let u = b.u_ref()?;
    let half = C::<S>::new((S::of(2.0) - dw) * S::of(0.5), S::zero());
    let q_euler = flow_difference(&f.euler, &gamma).sub(&MatrixJet::identity(b.ctx, n).scale(half));
    let herm = q_euler
        .transpose()
        .mul(h)
        .sub(&h.mul(&q_euler.conj()))
        .norm_up_to(cap1);
    let mut pot = S::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let dc = b.c[j]
                .differentiate(i, VarKind::Holo)
                .add(&gamma[i].commutator(&b.c[j]))
                .sub(&b.c[i].differentiate(j, VarKind::Holo))
                .sub(&gamma[j].commutator(&b.c[i]));
            pot = pot.max(dc.norm_up_to(cap1));
        }
    }
    let mut curv = S::zero();
    for i in 0..n {
        for j in 0..n {
            let r = gamma[i].differentiate(j, VarKind::Anti).neg();
            let cc = b.c[i].commutator(&b.kappa_conj(&b.c[j])?);
            curv = curv.max(r.add(&cc).norm_up_to(d.saturating_sub(2)));
        }
    }
    let thresh = S::of(tol) * (S::one() + scale + h.norm() + u.norm());
    let small_ok =
        frob_ok && herm < thresh && pot < thresh && curv < thresh;
    push_info(&mut rep, "cdv.small_system.q_hermitian", herm.to_f64_lossy());
    push_info(&mut rep, "cdv.small_system.higgs_potential", pot.to_f64_lossy());
    push_info(&mut rep, "cdv.small_system.curvature", curv.to_f64_lossy());
    rep.record_flag("cdv.small_system_agrees", small_ok == rep.passed());
    Ok(rep)
}

/// Spectral type of the multiplication at the base point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointClass {
    Semisimple,
    Irreducible,
    /// cluster sizes of the generic spectrum, descending
    Mixed(Vec<usize>),
}

fn cluster_sizes<S: Scalar>(eigs: &[C<S>], gap: S) -> Vec<usize> {
    let n = eigs.len();
    let mut scale = S::zero();
    for e in eigs {
        scale = scale.max(e.norm());
    }
    let thresh = gap * (S::one() + scale);
    // single-linkage union-find on pairwise distance
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        if p[i] != i {
            let r = find(p, p[i]);
            p[i] = r;
        }
        p[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (eigs[i] - eigs[j]).norm() < thresh {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut counts = std::collections::BTreeMap::new();
    for i in 0..n {
        *counts.entry(find(&mut parent, i)).or_insert(0usize) += 1;
    }
    let mut sizes: Vec<usize> = counts.into_values().collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Eigenvalue clustering of the multiplication by three seeded random
/// tangent vectors at the base point; the most generic probe (most
/// clusters) decides.
pub fn classify_point<S: Scalar>(f: &FStructure<S>) -> PointClass {
    let n = f.n;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0f5eed);
    let mults0: Vec<_> = f.mult.iter().map(|m| m.constant_term()).collect();
    let mut best: Vec<usize> = Vec::new();
    for _ in 0..3 {
        let mut a = crate::linalg::ConstMat::zero(n, n);
        for m0 in &mults0 {
            let re = S::of(rng.gen_range(-1.0..1.0));
            let im = S::of(rng.gen_range(-1.0..1.0));
            let w = C::<S>::new(re, im);
            for r in 0..n {
                for c in 0..n {
                    *a.at_mut(r, c) = a.at(r, c) + m0.at(r, c) * w;
                }
            }
        }
        let eigs = a.eigenvalues();
        let sizes = cluster_sizes(&eigs, S::of(1e-6));
        if sizes.len() > best.len() {
            best = sizes;
        }
    }
    if best.len() == n {
        PointClass::Semisimple
    } else if best.len() == 1 {
        PointClass::Irreducible
    } else {
        PointClass::Mixed(best)
    }
}
