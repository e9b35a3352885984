//! Command-line front end: loads JSON chart files, dispatches structure
//! checks and constructions, and emits deterministic reports (text or JSON).
//! Exit codes: 0 all checks passed, 1 some check failed, 2 input/usage error.

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cvforge::axioms::{check_cv, check_higgs_pair, check_saito, check_tep, StructureReport};
use cvforge::bundle::ChartBundle;
use cvforge::canonical::{
    canonical_data, check_canonical_props, curvature_f, sectional_curvature,
};
use cvforge::chartfile::{read_chart, write_chart};
use cvforge::correspond::{build_cv_connection, build_saito_connection};
use cvforge::error::CvError;
use cvforge::fixtures::{example_frobenius2, example_rank1, example_semisimple, sg_unfolded, sinh_gordon_jet};
use cvforge::formal_iso::solve_formal_iso;
use cvforge::hyperbolicity::bound_k0;
use cvforge::scalar::C;
use cvforge::unfolding::{
    build_frobenius, check_cdv, check_f_manifold, check_frobenius, classify_point, find_primitive,
    induce_f_structure, PointClass,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConnKind {
    Saito,
    Cv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FixtureName {
    E1,
    E2,
    F2,
    Sg,
    SgUnfolded,
}

#[derive(Parser, Debug)]
#[command(name = "cvforge", version, about = "structure checks for Higgs-pair charts")]
struct Cli {
    /// residual tolerance for all checks
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    /// write the report to this path instead of stdout
    #[arg(long, global = true)]
    report: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// verify the Higgs-pair axioms of a chart
    CheckHiggs { chart: String },
    /// verify the full holomorphic-structure axiom set
    CheckSaito { chart: String },
    /// verify the hermitian-structure axiom set
    CheckCv { chart: String },
    /// build the z-family connection and verify its pairing/flatness axioms
    CheckTep {
        chart: String,
        #[arg(long, value_enum, default_value_t = ConnKind::Saito)]
        from: ConnKind,
    },
    /// build the z-family connection and report its check suite
    BuildConnection {
        chart: String,
        #[arg(long, value_enum)]
        from: ConnKind,
    },
    /// solve for a formal z-power-series isomorphism between two charts
    FormalIso {
        saito_chart: String,
        cv_chart: String,
        #[arg(long, default_value_t = 6)]
        order: usize,
    },
    /// induce the base multiplication from a primitive section and classify it
    InduceF { chart: String },
    /// verify the flat-metric axioms of the induced base structure
    CheckFrobenius {
        chart: String,
        /// conformal weight; fitted from the primitive section when absent
        #[arg(long)]
        weight: Option<f64>,
    },
    /// verify the compatibility axioms between base metric and hermitian data
    CheckCdv {
        chart: String,
        #[arg(long)]
        weight: Option<f64>,
    },
    /// induced data on the multiplication subbundle and its property suite
    Canonical {
        chart: String,
        /// also compare the two curvature computations
        #[arg(long)]
        with_curvature: bool,
    },
    /// sectional curvature of the induced metric in one tangent direction
    Sectional {
        chart: String,
        /// comma-separated re,im pairs, e.g. "0,0,1,0" for the direction (0, 1)
        #[arg(long)]
        direction: String,
    },
    /// sampled estimate of the curvature bound at an irreducible point
    Hyperbolicity {
        chart: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        refine: bool,
    },
    /// write a built-in example chart to a file
    Fixture {
        #[arg(long, value_enum)]
        name: FixtureName,
        #[arg(long)]
        out: String,
    },
}

fn report_value(rep: &StructureReport) -> Value {
    json!({
        "label": rep.label,
        "tolerance": rep.tol,
        "passed": rep.passed(),
        "checks": rep.checks.iter().map(|c| json!({
            "name": c.name,
            "residual": c.residual,
            "threshold": c.threshold,
            "pass": c.pass,
        })).collect::<Vec<_>>(),
    })
}

struct Outcome {
    text: String,
    value: Value,
    passed: bool,
}

impl Outcome {
    fn from_report(rep: &StructureReport) -> Self {
        Outcome {
            text: rep.render(),
            value: report_value(rep),
            passed: rep.passed(),
        }
    }
}

fn fitted_weight(b: &ChartBundle<f64>) -> Result<f64, CvError> {
    let (zeta, _) = find_primitive(b)?;
    let vz = b.v_ref()?.apply(&zeta.comps);
    let z0: Vec<C<f64>> = zeta.comps.iter().map(|c| c.constant_term()).collect();
    let mut num = C::new(0.0, 0.0);
    let mut den = C::new(0.0, 0.0);
    for (a, z) in vz.iter().zip(&z0) {
        num += a.constant_term() * z.conj();
        den += z * z.conj();
    }
    Ok(2.0 * (num / den).re)
}

fn parse_direction(s: &str) -> Result<Vec<C<f64>>, CvError> {
    let parts: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let parts = parts.map_err(|e| CvError::Other(format!("bad --direction: {e}")))?;
    if parts.is_empty() || parts.len() % 2 != 0 {
        return Err(CvError::Other(
            "--direction needs an even number of comma-separated values (re,im pairs)".into(),
        ));
    }
    Ok(parts.chunks(2).map(|p| C::new(p[0], p[1])).collect())
}

fn class_label(pc: &PointClass) -> String {
    match pc {
        PointClass::Semisimple => "semisimple".into(),
        PointClass::Irreducible => "irreducible".into(),
        PointClass::Mixed(sizes) => format!(
            "mixed({})",
            sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join("+")
        ),
    }
}

fn run(cli: &Cli) -> Result<Outcome, CvError> {
    let tol = cli.tolerance;
    Ok(match &cli.command {
        Command::CheckHiggs { chart } => {
            Outcome::from_report(&check_higgs_pair(&read_chart::<f64>(chart)?, tol)?)
        }
        Command::CheckSaito { chart } => {
            Outcome::from_report(&check_saito(&read_chart::<f64>(chart)?, tol)?)
        }
        Command::CheckCv { chart } => {
            Outcome::from_report(&check_cv(&read_chart::<f64>(chart)?, tol)?)
        }
        Command::CheckTep { chart, from } | Command::BuildConnection { chart, from } => {
            let b = read_chart::<f64>(chart)?;
            let (conn, p) = match from {
                ConnKind::Saito => build_saito_connection(&b, tol)?,
                ConnKind::Cv => build_cv_connection(&b, tol)?,
            };
            Outcome::from_report(&check_tep(&conn, &p, b.w, tol)?)
        }
        Command::FormalIso {
            saito_chart,
            cv_chart,
            order,
        } => {
            let saito = read_chart::<f64>(saito_chart)?;
            let cv = read_chart::<f64>(cv_chart)?;
            let iso = solve_formal_iso(&saito, &cv, *order, tol)?;
            let passed = iso.achieved >= *order;
            let mut text = format!(
                "formal iso: achieved order {} of {}\n",
                iso.achieved, order
            );
            for (k, (r, kd)) in iso.residuals.iter().zip(&iso.kernel_dims).enumerate() {
                text += &format!(
                    "order {:>2}: residual {:.6e}, kernel dim {}\n",
                    k + 1,
                    r,
                    kd
                );
            }
            Outcome {
                text,
                value: json!({
                    "achieved": iso.achieved,
                    "requested": order,
                    "residuals": iso.residuals,
                    "kernel_dims": iso.kernel_dims,
                    "passed": passed,
                }),
                passed,
            }
        }
        Command::InduceF { chart } => {
            let b = read_chart::<f64>(chart)?;
            let (zeta, _) = find_primitive(&b)?;
            let f = induce_f_structure(&b, &zeta)?;
            let rep = check_f_manifold(&f, tol);
            let class = class_label(&classify_point(&f));
            let mut out = Outcome::from_report(&rep);
            out.text += &format!("point class: {class}\n");
            out.value = json!({"report": out.value, "point_class": class});
            out
        }
        Command::CheckFrobenius { chart, weight } => {
            let b = read_chart::<f64>(chart)?;
            let d = match weight {
                Some(d) => *d,
                None => fitted_weight(&b)?,
            };
            let (zeta, _) = find_primitive(&b)?;
            let fc = build_frobenius(&b, &zeta, d, tol)?;
            let rep = check_frobenius(&fc.f, &fc.g_m, d, tol)?;
            let mut out = Outcome::from_report(&rep);
            out.text += &format!("conformal weight: {d:.12}\n");
            out.value = json!({"report": out.value, "weight": d});
            out
        }
        Command::CheckCdv { chart, weight } => {
            let b = read_chart::<f64>(chart)?;
            let d = match weight {
                Some(d) => *d,
                None => fitted_weight(&b)?,
            };
            let (zeta, _) = find_primitive(&b)?;
            let fc = build_frobenius(&b, &zeta, d, tol)?;
            let rep = check_cdv(&b, &fc.f, &fc.g_m, C::new(d, 0.0), tol)?;
            let mut out = Outcome::from_report(&rep);
            out.text += &format!("conformal weight: {d:.12}\n");
            out.value = json!({"report": out.value, "weight": d});
            out
        }
        Command::Canonical {
            chart,
            with_curvature,
        } => {
            let b = read_chart::<f64>(chart)?;
            let (zeta, _) = find_primitive(&b)?;
            let cd = canonical_data(&b, &zeta)?;
            let mut rep = check_canonical_props(&cd, &b, tol)?;
            if *with_curvature {
                let cf = curvature_f(&b)?;
                let scale = 1.0 + cd.h_m.norm();
                rep.record("curvature.two_way_agreement", cf.discrepancy, 1e4 * scale);
            }
            Outcome::from_report(&rep)
        }
        Command::Sectional { chart, direction } => {
            let b = read_chart::<f64>(chart)?;
            let x = parse_direction(direction)?;
            let (value, disc) = sectional_curvature(&b, &x)?;
            Outcome {
                text: format!(
                    "sectional curvature {:.12e} (two-way discrepancy {:.6e})\n",
                    value, disc
                ),
                value: json!({"sectional": value, "discrepancy": disc, "passed": true}),
                passed: true,
            }
        }
        Command::Hyperbolicity {
            chart,
            samples,
            seed,
            refine,
        } => {
            let b = read_chart::<f64>(chart)?;
            let est = bound_k0(&b, *samples, *seed, *refine)?;
            let min = est.rsect.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = est.rsect.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mean = est.rsect.iter().sum::<f64>() / est.rsect.len().max(1) as f64;
            let passed = est.k0 > 0.0;
            Outcome {
                text: format!(
                    "k0 estimate {:.12e} over {} samples (sectional min {:.6e}, mean {:.6e}, max {:.6e})\n",
                    est.k0, samples, min, mean, max
                ),
                value: json!({
                    "k0": est.k0,
                    "samples": samples,
                    "seed": seed,
                    "sectional_min": min,
                    "sectional_mean": mean,
                    "sectional_max": max,
                    "passed": passed,
                }),
                passed,
            }
        }
        Command::Fixture { name, out } => {
            let (b, zorder, label) = match name {
                FixtureName::E1 => (example_rank1::<f64>(4, 0), 2, "e1"),
                FixtureName::E2 => (example_semisimple::<f64>(4, 2, &[0.0, 1.0])?, 2, "e2"),
                FixtureName::F2 => (example_frobenius2::<f64>(4), 2, "f2"),
                FixtureName::Sg => (sinh_gordon_jet::<f64>(4)?, 2, "sg"),
                FixtureName::SgUnfolded => (sg_unfolded::<f64>(4)?, 2, "sg-unfolded"),
            };
            write_chart(&b, zorder, out)?;
            Outcome {
                text: format!("wrote fixture {label} to {out}\n"),
                value: json!({"fixture": label, "path": out, "passed": true}),
                passed: true,
            }
        }
    })
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("CVFORGE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let body = match cli.format {
                Format::Text => out.text,
                Format::Json => {
                    serde_json::to_string_pretty(&out.value).expect("serializable report") + "\n"
                }
            };
            match &cli.report {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, body) {
                        eprintln!("error: cannot write report to {path}: {e}");
                        return ExitCode::from(2);
                    }
                }
                None => print!("{body}"),
            }
            ExitCode::from(if out.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
