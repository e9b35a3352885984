//! JSON chart files. One document describes a full chart: base dimension,
//! bundle rank, truncation degrees, and a map of named tensors whose entries
//! carry explicit monomial exponents (holomorphic block `t`, conjugate block
//! `tbar`) with re/im coefficient pairs. Omitted tensors are absent, not
//! zero-filled. Schema tag: "cvforge/1".

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bundle::ChartBundle;
use crate::error::{CvError, Result};
use crate::jets::{Jet, JetContext, keys_up_to};
use crate::matrix::MatrixJet;
use crate::scalar::{C, Scalar};

pub const SCHEMA: &str = "cvforge/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Term {
    /// holomorphic exponents, one per base coordinate
    pub t: Vec<u8>,
    /// conjugate exponents, one per base coordinate
    pub tbar: Vec<u8>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartFile {
    pub schema: String,
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub zorder: usize,
    pub w: i32,
    pub tensors: BTreeMap<String, Vec<Entry>>,
}

fn jet_terms<S: Scalar>(j: &Jet<S>) -> Vec<Term> {
    let ctx = j.ctx;
    let mut out = Vec::new();
    for key in keys_up_to(ctx, ctx.d) {
        let (a, b) = key.split_at(ctx.m);
        let v = j.get(a, b);
        if v.norm() > S::zero() {
            out.push(Term {
                t: a.to_vec(),
                tbar: b.to_vec(),
                re: v.re.to_f64_lossy(),
                im: v.im.to_f64_lossy(),
            });
        }
    }
    out
}

fn matrix_entries<S: Scalar>(m: &MatrixJet<S>) -> Vec<Entry> {
    let mut out = Vec::new();
    for row in 0..m.rows {
        for col in 0..m.cols {
            let terms = jet_terms(m.at(row, col));
            if !terms.is_empty() {
                out.push(Entry { row, col, terms });
            }
        }
    }
    out
}

pub fn to_chart_file<S: Scalar>(b: &ChartBundle<S>, zorder: usize) -> ChartFile {
    let mut tensors = BTreeMap::new();
    for (i, ci) in b.c.iter().enumerate() {
        tensors.insert(format!("C_{}", i + 1), matrix_entries(ci));
    }
    let named: [(&str, &Option<MatrixJet<S>>); 6] = [
        ("U", &b.u),
        ("V", &b.v),
        ("Q", &b.q),
        ("g", &b.g),
        ("h", &b.h),
        ("kappa", &b.kappa),
    ];
    for (name, t) in named {
        if let Some(t) = t {
            tensors.insert(name.to_string(), matrix_entries(t));
        }
    }
    ChartFile {
        schema: SCHEMA.to_string(),
        m: b.ctx.m,
        n: b.n,
        d: b.ctx.d,
        zorder,
        w: b.w,
        tensors,
    }
}

fn parse_matrix<S: Scalar>(
    name: &str,
    entries: &[Entry],
    ctx: JetContext,
    n: usize,
) -> Result<MatrixJet<S>> {
    let mut m = MatrixJet::zero(ctx, n, n);
    for e in entries {
        if e.row >= n || e.col >= n {
            return Err(CvError::SchemaError(format!(
                "tensor {name}: entry ({}, {}) outside a {n}x{n} matrix",
                e.row, e.col
            )));
        }
        let mut jet = Jet::zero(ctx);
        for term in &e.terms {
            if term.t.len() != ctx.m || term.tbar.len() != ctx.m {
                return Err(CvError::SchemaError(format!(
                    "tensor {name}: exponent blocks must have length m = {}",
                    ctx.m
                )));
            }
            let deg: usize = term
                .t
                .iter()
                .chain(term.tbar.iter())
                .map(|&x| x as usize)
                .sum();
            if deg > ctx.d {
                return Err(CvError::SchemaError(format!(
                    "tensor {name}: monomial degree {deg} exceeds d = {}",
                    ctx.d
                )));
            }
            let mut key = term.t.clone();
            key.extend_from_slice(&term.tbar);
            jet.set_key(key, C::new(S::of(term.re), S::of(term.im)));
        }
        *m.at_mut(e.row, e.col) = jet;
    }
    Ok(m)
}

pub fn from_chart_file<S: Scalar>(cf: &ChartFile) -> Result<ChartBundle<S>> {
    if cf.schema != SCHEMA {
        return Err(CvError::SchemaError(format!(
            "unsupported schema '{}', expected '{SCHEMA}'",
            cf.schema
        )));
    }
    let ctx = JetContext::new(cf.m, cf.d)
        .map_err(|e| CvError::SchemaError(format!("bad truncation degree: {e}")))?;
    let mut c = Vec::with_capacity(cf.m);
    for i in 0..cf.m {
        let name = format!("C_{}", i + 1);
        let entries = cf
            .tensors
            .get(&name)
            .ok_or_else(|| CvError::SchemaError(format!("missing tensor {name}")))?;
        c.push(parse_matrix(&name, entries, ctx, cf.n)?);
    }
    let mut b = ChartBundle::new(ctx, cf.n, cf.w, c);
    for (name, slot) in [("U", 0usize), ("V", 1), ("Q", 2), ("g", 3), ("h", 4), ("kappa", 5)] {
        if let Some(entries) = cf.tensors.get(name) {
            let m = parse_matrix(name, entries, ctx, cf.n)?;
            match slot {
                0 => b.u = Some(m),
                1 => b.v = Some(m),
                2 => b.q = Some(m),
                3 => b.g = Some(m),
                4 => b.h = Some(m),
                _ => b.kappa = Some(m),
            }
        }
    }
    for key in cf.tensors.keys() {
        let known = key == "U"
            || key == "V"
            || key == "Q"
            || key == "g"
            || key == "h"
            || key == "kappa"
            || (key.starts_with("C_")
                && key[2..]
                    .parse::<usize>()
                    .map(|i| i >= 1 && i <= cf.m)
                    .unwrap_or(false));
        if !known {
            return Err(CvError::SchemaError(format!("unknown tensor '{key}'")));
        }
    }
    b.validate(S::of(1e-12))?;
    Ok(b)
}

pub fn write_chart<S: Scalar>(b: &ChartBundle<S>, zorder: usize, path: &str) -> Result<()> {
    let cf = to_chart_file(b, zorder);
    let text = serde_json::to_string_pretty(&cf).map_err(|e| CvError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CvError::Io(format!("{path}: {e}")))
}

pub fn read_chart<S: Scalar>(path: &str) -> Result<ChartBundle<S>> {
    let text = std::fs::read_to_string(path).map_err(|e| CvError::Io(format!("{path}: {e}")))?;
    let cf: ChartFile =
        serde_json::from_str(&text).map_err(|e| CvError::SchemaError(e.to_string()))?;
    from_chart_file(&cf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{example_rank1, example_semisimple};

    #[test]
    fn round_trip_is_identity() {
        let b = example_semisimple::<f64>(4, 2, &[0.0, 1.0]).unwrap();
        let cf = to_chart_file(&b, 3);
        let b2: ChartBundle<f64> = from_chart_file(&cf).unwrap();
        assert_eq!(b.n, b2.n);
        assert_eq!(b.w, b2.w);
        for i in 0..b.m() {
            assert!(b.c[i].sub(&b2.c[i]).norm() == 0.0);
        }
        for (x, y) in [
            (&b.u, &b2.u),
            (&b.g, &b2.g),
            (&b.h, &b2.h),
            (&b.kappa, &b2.kappa),
            (&b.q, &b2.q),
            (&b.v, &b2.v),
        ] {
            match (x, y) {
                (Some(x), Some(y)) => assert!(x.sub(y).norm() == 0.0),
                (None, None) => {}
                _ => panic!("tensor presence changed in round trip"),
            }
        }
        // serialization itself is stable
        let cf2 = to_chart_file(&b2, 3);
        assert_eq!(
            serde_json::to_string(&cf).unwrap(),
            serde_json::to_string(&cf2).unwrap()
        );
    }

    #[test]
    fn bad_inputs_are_diagnosed() {
        let b = example_rank1::<f64>(3, 1);
        let mut cf = to_chart_file(&b, 0);
        cf.schema = "cvforge/9".into();
        assert!(matches!(
            from_chart_file::<f64>(&cf),
            Err(CvError::SchemaError(_))
        ));
        let mut cf = to_chart_file(&b, 0);
        cf.tensors.insert("mystery".into(), vec![]);
        assert!(matches!(
            from_chart_file::<f64>(&cf),
            Err(CvError::SchemaError(_))
        ));
        // non-hermitian h is an invariant violation, not a schema problem
        let mut cf = to_chart_file(&b, 0);
        cf.tensors.insert(
            "h".into(),
            vec![Entry {
                row: 0,
                col: 0,
                terms: vec![Term {
                    t: vec![0],
                    tbar: vec![0],
                    re: 1.0,
                    im: 0.5,
                }],
            }],
        );
        assert!(matches!(
            from_chart_file::<f64>(&cf),
            Err(CvError::InvariantViolation(_))
        ));
    }
}
