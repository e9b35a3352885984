//! Truncated-jet calculus for families of Higgs pairs with compatible
//! metrics on a trivialized holomorphic bundle over a coordinate chart:
//! axiom checkers, associated flat-connection builders, formal isomorphism
//! solvers, tangent-bundle unfoldings, induced curvature data and negativity
//! bounds, plus reference fixtures and a CLI.

pub mod scalar;
pub mod error;
pub mod jets;
pub mod linalg;
pub mod matrix;
pub mod bundle;
pub mod axioms;
pub mod fixtures;
pub mod correspond;
pub mod formal_iso;
pub mod unfolding;
pub mod canonical;
pub mod hyperbolicity;
pub mod chartfile;

pub use error::{CvError, Result};
pub use jets::{Jet, JetContext, VarKind};
pub use matrix::{LaurentJet, MatrixJet};
pub use scalar::{C, Scalar};

/// Concrete double-precision aliases; everything user-facing runs on these.
pub type Jet64 = Jet<f64>;
pub type MatrixJet64 = MatrixJet<f64>;
pub type LaurentJet64 = LaurentJet<f64>;
pub type C64 = num_complex::Complex<f64>;
