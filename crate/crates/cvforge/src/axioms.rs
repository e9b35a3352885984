//! Structure checkers. Each checker evaluates a fixed list of residual
//! tensors and reports one named entry per residual; an entry passes when
//! its max coefficient magnitude stays below tol * (1 + scale) with scale
//! the magnitude of the data feeding that residual.
//!
//! Degree bookkeeping: a stored jet is exact through total degree d, its
//! coordinate derivative through d-1, and anything built from a derivative
//! of the Chern coefficients (curvature) through d-2. Residuals are only
//! measured through the degree at which they are meaningful.

use serde::Serialize;

use crate::bundle::{chern_connection, curvature_holo_frame, ChartBundle};
use crate::error::Result;
use crate::matrix::{LaurentJet, MatrixJet};
use crate::scalar::Scalar;
use crate::VarKind;

#[derive(Debug, Clone, Serialize)]
pub struct AxiomCheck {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub label: String,
    pub tol: f64,
    pub checks: Vec<AxiomCheck>,
}

impl StructureReport {
    pub fn new(label: &str, tol: f64) -> Self {
        StructureReport { label: label.into(), tol, checks: Vec::new() }
    }

    /// Record a residual measured against a data scale.
    pub fn record<S: Scalar>(&mut self, name: &str, residual: S, scale: S) {
        let residual = residual.to_f64_lossy();
        let threshold = self.tol * (1.0 + scale.to_f64_lossy());
        self.checks.push(AxiomCheck { name: name.into(), residual, threshold, pass: residual < threshold });
    }

    /// Record a yes/no condition as residual 0 or 1.
    pub fn record_flag(&mut self, name: &str, ok: bool) {
        self.checks.push(AxiomCheck {
            name: name.into(),
            residual: if ok { 0.0 } else { 1.0 },
            threshold: self.tol,
            pass: ok,
        });
    }

    pub fn merge(&mut self, other: StructureReport) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn worst(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("== {} ==\n", self.label));
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<44} residual {:.6e} (threshold {:.6e})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.threshold
            ));
        }
        out.push_str(&format!(
            "{}: {}\n",
            self.label,
            if self.passed() { "ok" } else { "FAILED" }
        ));
        out
    }
}

/// Commuting, g-symmetric, holomorphic Higgs data (C_i, U, g).
pub fn check_higgs_pair<S: Scalar>(b: &ChartBundle<S>, tol: f64) -> Result<StructureReport> {
    let mut rep = StructureReport::new("higgs-pair", tol);
    let d = b.ctx.d;
    let u = b.u_ref()?;
    let g = b.g_ref()?;
    let cscale = b.c.iter().map(|c| c.norm()).fold(S::zero(), S::max);
    let uscale = u.norm();
    let gscale = g.norm();

    for i in 0..b.m() {
        rep.record(&format!("holomorphic.C_{}", i + 1), b.c[i].nonholo_norm(), cscale);
    }
    rep.record("holomorphic.U", u.nonholo_norm(), uscale);
    rep.record("holomorphic.g", g.nonholo_norm(), gscale);

    for i in 0..b.m() {
        for j in (i + 1)..b.m() {
            rep.record(
                &format!("commute.C_{}.C_{}", i + 1, j + 1),
                b.c[i].commutator(&b.c[j]).norm_up_to(d),
                cscale * cscale,
            );
        }
        rep.record(
            &format!("commute.C_{}.U", i + 1),
            b.c[i].commutator(u).norm_up_to(d),
            cscale * uscale,
        );
        rep.record(
            &format!("gsym.C_{}", i + 1),
            g.mul(&b.c[i]).sub(&b.c[i].transpose().mul(g)).norm_up_to(d),
            cscale * gscale,
        );
    }
    rep.record("gsym.U", g.mul(u).sub(&u.transpose().mul(g)).norm_up_to(d), uscale * gscale);
    Ok(rep)
}

/// Flat holomorphic connection compatible with the Higgs data: flatness and
/// potentiality of the stored connection, covariant constancy of V and g,
/// the mixed U-equation, and g-skewness of V.
pub fn check_saito<S: Scalar>(b: &ChartBundle<S>, tol: f64) -> Result<StructureReport> {
    let mut rep = check_higgs_pair(b, tol)?;
    rep.label = "saito".into();
    let d = b.ctx.d;
    let u = b.u_ref()?;
    let v = b.v_ref()?;
    let g = b.g_ref()?;
    let gamma = b.gamma10_or_zero();
    let gscale = gamma.iter().map(|x| x.norm()).fold(S::zero(), S::max);
    let cscale = b.c.iter().map(|c| c.norm()).fold(S::zero(), S::max);

    if let Some(g01) = &b.gamma01 {
        let n01 = g01.iter().map(|x| x.norm()).fold(S::zero(), S::max);
        rep.record("connection.holomorphic", n01, gscale);
    }
    for gi in &gamma {
        rep.record("connection.coeff.holomorphic", gi.nonholo_norm(), gscale);
    }
    rep.record("holomorphic.V", v.nonholo_norm(), v.norm());

    let cap1 = d.saturating_sub(1);
    for i in 0..b.m() {
        for j in (i + 1)..b.m() {
            // d_i G_j - d_j G_i + [G_i, G_j]
            let r = gamma[j]
                .differentiate(i, VarKind::Holo)
                .sub(&gamma[i].differentiate(j, VarKind::Holo))
                .add(&gamma[i].commutator(&gamma[j]));
            rep.record(
                &format!("flat.{}.{}", i + 1, j + 1),
                r.norm_up_to(cap1),
                gscale * (S::one() + gscale),
            );
            // potentiality: nabla_i C_j symmetric in i, j
            let p = b.c[j]
                .differentiate(i, VarKind::Holo)
                .add(&gamma[i].commutator(&b.c[j]))
                .sub(&b.c[i].differentiate(j, VarKind::Holo))
                .sub(&gamma[j].commutator(&b.c[i]));
            rep.record(
                &format!("potential.{}.{}", i + 1, j + 1),
                p.norm_up_to(cap1),
                cscale * (S::one() + gscale),
            );
        }
        let rv = v.differentiate(i, VarKind::Holo).add(&gamma[i].commutator(v));
        rep.record(&format!("flatV.{}", i + 1), rv.norm_up_to(cap1), v.norm() * (S::one() + gscale));
        let ru = u
            .differentiate(i, VarKind::Holo)
            .add(&gamma[i].commutator(u))
            .sub(&b.c[i].commutator(v))
            .add(&b.c[i]);
        rep.record(
            &format!("mixedU.{}", i + 1),
            ru.norm_up_to(cap1),
            (u.norm() + cscale) * (S::one() + gscale + v.norm()),
        );
        let rg = g
            .differentiate(i, VarKind::Holo)
            .sub(&gamma[i].transpose().mul(g))
            .sub(&g.mul(&gamma[i]));
        rep.record(&format!("flatg.{}", i + 1), rg.norm_up_to(cap1), g.norm() * (S::one() + gscale));
    }
    rep.record("gskew.V", g.mul(v).add(&v.transpose().mul(g)).norm_up_to(d), g.norm() * v.norm());
    Ok(rep)
}

/// Degree through which a residual tensor is meaningful: d for algebraic
/// identities, d-1 for first-order ones, d-2 for curvature-type ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResKind {
    Algebraic,
    FirstOrder,
    Curvature,
}

impl ResKind {
    pub fn cap(self, d: usize) -> usize {
        match self {
            ResKind::Algebraic => d,
            ResKind::FirstOrder => d.saturating_sub(1),
            ResKind::Curvature => d.saturating_sub(2),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResidualEntry<S: Scalar> {
    pub name: String,
    pub kind: ResKind,
    pub res: MatrixJet<S>,
    pub scale: S,
}

/// All hermitian-structure residual tensors of (C, U, g, kappa, h, Q)
/// against the Chern connection of h. Shared by the checker and by the
/// jet-completion solver.
pub fn cv_residual_entries<S: Scalar>(b: &ChartBundle<S>) -> Result<Vec<ResidualEntry<S>>> {
    let u = b.u_ref()?;
    let g = b.g_ref()?;
    let h = b.h_ref()?;
    let k = b.kappa_ref()?;
    let q = b.q_ref()?;
    let gamma = chern_connection(h)?;
    let gam_scale = gamma.iter().map(|x| x.norm()).fold(S::zero(), S::max);
    let cscale = b.c.iter().map(|c| c.norm()).fold(S::zero(), S::max);
    let kscale = k.norm();
    let mut out: Vec<ResidualEntry<S>> = Vec::new();
    let mut push = |name: String, kind: ResKind, res: MatrixJet<S>, scale: S| {
        out.push(ResidualEntry { name, kind, res, scale });
    };

    push(
        "kappa.involution".into(),
        ResKind::Algebraic,
        k.mul(&k.conj()).sub(&MatrixJet::identity(b.ctx, b.n)),
        kscale * kscale,
    );
    push("metric.h_eq_g_kappa".into(), ResKind::Algebraic, g.mul(k).sub(h), h.norm());
    push("metric.h_hermitian".into(), ResKind::Algebraic, h.sub(&h.conj().transpose()), h.norm());
    // kappa^T g kappa = conj(g), i.e. g(kappa a, kappa b) = conj(g(a, b))
    push(
        "metric.kappa_g_compat".into(),
        ResKind::Algebraic,
        k.transpose().mul(g).mul(k).sub(&g.conj()),
        g.norm() * kscale * kscale,
    );
    push("gskew.Q".into(), ResKind::Algebraic, g.mul(q).add(&q.transpose().mul(g)), g.norm() * q.norm());
    push(
        "hherm.Q".into(),
        ResKind::Algebraic,
        q.transpose().mul(h).sub(&h.mul(&q.conj())),
        h.norm() * q.norm(),
    );

    for i in 0..b.m() {
        // D kappa = 0: holomorphic part d_i k + Gamma_i k, antiholomorphic
        // part dbar_i k - k conj(Gamma_i) (from kappa's antilinearity)
        push(
            format!("flat.kappa10.{}", i + 1),
            ResKind::FirstOrder,
            k.differentiate(i, VarKind::Holo).add(&gamma[i].mul(k)),
            kscale * (S::one() + gam_scale),
        );
        push(
            format!("flat.kappa01.{}", i + 1),
            ResKind::FirstOrder,
            k.differentiate(i, VarKind::Anti).sub(&k.mul(&gamma[i].conj())),
            kscale * (S::one() + gam_scale),
        );
        for j in (i + 1)..b.m() {
            // D^{1,0} C symmetric
            let p = b.c[j]
                .differentiate(i, VarKind::Holo)
                .add(&gamma[i].commutator(&b.c[j]))
                .sub(&b.c[i].differentiate(j, VarKind::Holo))
                .sub(&gamma[j].commutator(&b.c[i]));
            push(
                format!("potential.{}.{}", i + 1, j + 1),
                ResKind::FirstOrder,
                p,
                cscale * (S::one() + gam_scale),
            );
        }
        for j in 0..b.m() {
            // curvature of D cancels against [C_i, kappa C_j kappa]
            let cjh = b.kappa_conj(&b.c[j])?;
            push(
                format!("curv.{}.{}", i + 1, j + 1),
                ResKind::Curvature,
                curvature_holo_frame(&gamma, i, j).add(&b.c[i].commutator(&cjh)),
                gam_scale + cscale * cscale * kscale * kscale,
            );
        }
        push(
            format!("mixedU.{}", i + 1),
            ResKind::FirstOrder,
            u.differentiate(i, VarKind::Holo)
                .add(&gamma[i].commutator(u))
                .sub(&b.c[i].commutator(q))
                .add(&b.c[i]),
            (u.norm() + cscale) * (S::one() + gam_scale + q.norm()),
        );
        let uh = b.kappa_conj(u)?;
        push(
            format!("mixedQ.{}", i + 1),
            ResKind::FirstOrder,
            q.differentiate(i, VarKind::Holo)
                .add(&gamma[i].commutator(q))
                .add(&b.c[i].commutator(&uh)),
            q.norm() * (S::one() + gam_scale) + cscale * uh.norm(),
        );
    }
    Ok(out)
}

/// Hermitian-metric structure: compatibilities of (C, U, g, kappa, h, Q)
/// with the Chern connection of h.
pub fn check_cv<S: Scalar>(b: &ChartBundle<S>, tol: f64) -> Result<StructureReport> {
    let mut rep = check_higgs_pair(b, tol)?;
    rep.label = "cv".into();
    let d = b.ctx.d;
    for e in cv_residual_entries(b)? {
        rep.record(&e.name, e.res.norm_up_to(e.kind.cap(d)), e.scale);
    }
    Ok(rep)
}

impl<S: Scalar> ChartBundle<S> {
    /// Chern coefficients of the stored hermitian Gram matrix.
    pub fn chern(&self, _tol: f64) -> Result<Vec<MatrixJet<S>>> {
        chern_connection(self.h_ref()?)
    }
}

/// A z-family of connection coefficients in the base directions plus the
/// z-direction, with optional antiholomorphic directions.
#[derive(Debug, Clone)]
pub struct ZFamilyConnection<S: Scalar> {
    /// coefficients of nabla_{d_i}
    pub a_t: Vec<LaurentJet<S>>,
    /// coefficient of z nabla_{z d_z} (i.e. nabla in z d/dz direction)
    pub a_z: LaurentJet<S>,
    /// coefficients of nabla_{dbar_j}, when the family extends over t-bar
    pub a_bar: Option<Vec<LaurentJet<S>>>,
}

/// Flatness of a z-family connection with a first-order pole at z = 0, plus
/// the weight-w symmetry, regularity and nondegeneracy of a flat pairing P.
///
/// The pairing convention: P(s, s') is z-bilinear with the second argument
/// pulled back through z -> -z, so flatness in a base direction reads
/// d_i P(z) = A_i(z)^T P(z) + P(z) A_i(-z) and in the z-direction
/// z d_z P(z) = A_z(z)^T P(z) + P(z) A_z(-z).
pub fn check_tep<S: Scalar>(
    conn: &ZFamilyConnection<S>,
    p: &LaurentJet<S>,
    w: i32,
    tol: f64,
) -> Result<StructureReport> {
    let mut rep = StructureReport::new("z-family", tol);
    let ctx = conn.a_z.ctx();
    let d = ctx.d;
    let cap = d.saturating_sub(2);
    let m = conn.a_t.len();
    let ascale = conn
        .a_t
        .iter()
        .map(|a| a.norm())
        .fold(conn.a_z.norm(), S::max);

    // pole order exactly -1: nothing below z^{-1}, something at z^{-1}
    let mut below = S::zero();
    let mut at_pole = S::zero();
    for a in conn.a_t.iter().chain(std::iter::once(&conn.a_z)) {
        for z in a.low..(-1) {
            below = below.max(a.coeff_or_zero(z).norm());
        }
        at_pole = at_pole.max(a.coeff_or_zero(-1).norm());
    }
    rep.record("pole.order_at_most_one", below, ascale);
    rep.record_flag("pole.order_exactly_one", at_pole.to_f64_lossy() > tol);

    for i in 0..m {
        for j in (i + 1)..m {
            let r = conn.a_t[j]
                .differentiate(i, VarKind::Holo)
                .sub(&conn.a_t[i].differentiate(j, VarKind::Holo))
                .add(&conn.a_t[i].commutator(&conn.a_t[j]));
            rep.record(
                &format!("flat.t{}.t{}", i + 1, j + 1),
                r.norm_up_to(cap),
                ascale * (S::one() + ascale),
            );
        }
        // [nabla_i, z nabla_z]: d_i A_z - z d_z A_i + [A_i, A_z]
        let r = conn
            .a_z
            .differentiate(i, VarKind::Holo)
            .sub(&conn.a_t[i].z_ddz())
            .add(&conn.a_t[i].commutator(&conn.a_z));
        rep.record(&format!("flat.t{}.z", i + 1), r.norm_up_to(cap), ascale * (S::one() + ascale));
    }
    if let Some(abar) = &conn.a_bar {
        let bscale = abar.iter().map(|a| a.norm()).fold(S::zero(), S::max);
        for j in 0..m {
            for i in 0..m {
                let r = abar[j]
                    .differentiate(i, VarKind::Holo)
                    .sub(&conn.a_t[i].differentiate(j, VarKind::Anti))
                    .add(&conn.a_t[i].commutator(&abar[j]));
                rep.record(
                    &format!("flat.t{}.tbar{}", i + 1, j + 1),
                    r.norm_up_to(cap),
                    (ascale + bscale) * (S::one() + ascale + bscale),
                );
            }
            for jj in (j + 1)..m {
                let r = abar[jj]
                    .differentiate(j, VarKind::Anti)
                    .sub(&abar[j].differentiate(jj, VarKind::Anti))
                    .add(&abar[j].commutator(&abar[jj]));
                rep.record(
                    &format!("flat.tbar{}.tbar{}", j + 1, jj + 1),
                    r.norm_up_to(cap),
                    bscale * (S::one() + bscale),
                );
            }
            let r = conn
                .a_z
                .differentiate(j, VarKind::Anti)
                .sub(&abar[j].z_ddz())
                .add(&abar[j].commutator(&conn.a_z));
            rep.record(
                &format!("flat.tbar{}.z", j + 1),
                r.norm_up_to(cap),
                (ascale + bscale) * (S::one() + ascale + bscale),
            );
        }
    }

    // pairing: weight-w symmetry per z-power
    let pscale = p.norm();
    let mut sym = S::zero();
    for z in p.low..=p.high() {
        let pc = p.coeff_or_zero(z);
        let sign = if (w + z).rem_euclid(2) == 0 { S::one() } else { -S::one() };
        sym = sym
            .max(pc.sub(&pc.transpose().scale(num_complex::Complex::new(sign, S::zero()))).norm_up_to(d));
    }
    rep.record("pairing.weight_symmetry", sym, pscale);

    // z^{-w} P holomorphic at z = 0 and nondegenerate there
    let mut reg = S::zero();
    for z in p.low..w {
        reg = reg.max(p.coeff_or_zero(z).norm());
    }
    rep.record("pairing.regular", reg, pscale);
    let lead = p.coeff_or_zero(w).constant_term();
    let nondeg = lead.min_pivot_estimate() > S::of(1e-12) * S::one().max(pscale);
    rep.record_flag("pairing.nondegenerate", nondeg);

    // flatness of the pairing
    for i in 0..m {
        let r = p
            .differentiate(i, VarKind::Holo)
            .sub(&conn.a_t[i].transpose().mul(p))
            .sub(&p.mul(&conn.a_t[i].negate_z()));
        rep.record(
            &format!("pairing.flat.t{}", i + 1),
            r.norm_up_to(cap),
            pscale * (S::one() + ascale),
        );
    }
    let r = p
        .z_ddz()
        .sub(&conn.a_z.transpose().mul(p))
        .sub(&p.mul(&conn.a_z.negate_z()));
    rep.record("pairing.flat.z", r.norm_up_to(cap), pscale * (S::one() + ascale));
    if let Some(abar) = &conn.a_bar {
        for j in 0..m {
            let r = p
                .differentiate(j, VarKind::Anti)
                .sub(&abar[j].transpose().mul(p))
                .sub(&p.mul(&abar[j].negate_z()));
            rep.record(
                &format!("pairing.flat.tbar{}", j + 1),
                r.norm_up_to(cap),
                pscale * (S::one() + ascale),
            );
        }
    }
    Ok(rep)
}
