use thiserror::Error;

#[derive(Error, Debug, Clone)]
pub enum CvError {
    #[error("jet context mismatch: ({0} vars, degree {1}) vs ({2} vars, degree {3})")]
    ContextMismatch(usize, usize, usize, usize),
    #[error("matrix dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimMismatch(usize, usize, usize, usize),
    #[error("non-unit jet: constant term too small or singular (min pivot {0:.3e}, scale {1:.3e})")]
    NonUnit(f64, f64),
    #[error("required tensor `{0}` missing from chart")]
    MissingTensor(String),
    #[error("metric degenerate at base point: {0}")]
    DegenerateMetric(String),
    #[error("hermitian metric not positive definite (min eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),
    #[error("duplicate eigenvalues in diagonal join (offsets must keep them distinct)")]
    DuplicateEigenvalues,
    #[error("multiplication by the Euler field is singular at the base point (discriminant)")]
    OnDiscriminant,
    #[error("unit-field twist undefined at the base point (caustic)")]
    OnCaustic,
    #[error("no admissible primitive section found (all candidates give singular period map)")]
    NoPrimitive,
    #[error("section is not primitive: period map singular at base point (sigma_min {0:.3e})")]
    NotPrimitive(f64),
    #[error("unfolding requires chart rank to equal base dimension (n = {0}, m = {1})")]
    RankMismatch(usize, usize),
    #[error("section fails a flat-weight hypothesis: {0} (residual {1:.3e})")]
    BadSection(String, f64),
    #[error("structure checks failed: {0}")]
    AxiomFailure(String),
    #[error("charts do not share (C, U, g) to tolerance (residual {0:.3e})")]
    SharedDataMismatch(f64),
    #[error("formal isomorphism achieved order {0}, need at least {1}")]
    OrderTooLow(usize, usize),
    #[error("base point not irreducible: eigenvalue clusters {0:?}")]
    NotIrreducible(Vec<usize>),
    #[error("degree-by-degree completion inconsistent at degree {degree} (residual {residual:.3e})")]
    Inconsistent { degree: usize, residual: f64 },
    #[error("nilpotent projection failed to converge after {0} attempts")]
    ProjectionFailed(usize),
    #[error("chart file schema error: {0}")]
    SchemaError(String),
    #[error("chart invariant violated: {0}")]
    InvariantViolation(String),
    #[error("weight parity/range unsupported: {0}")]
    BadWeight(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, CvError>;
