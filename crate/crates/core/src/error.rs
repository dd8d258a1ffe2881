use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are grouped loosely by the failure class a caller usually cares
/// about: malformed input, validation of physical constraints, scope guards,
/// and failed symmetry conditions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown party label `{0}`")]
    UnknownParty(String),
    #[error("duplicate party label `{0}`")]
    DuplicateLabel(String),
    #[error("party labels must be nonempty")]
    EmptyLabel,
    #[error("party `{label}` has invalid dimension {dim}")]
    InvalidDimension { label: String, dim: usize },
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("partition mismatch: {0}")]
    SpecMismatch(String),
    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("matrix is not Hermitian (max |M - M^dag| = {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("density matrix trace is {trace}, expected 1")]
    BadTrace { trace: f64 },
    #[error("density matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("party set must be nonempty")]
    EmptyPartySet,
    #[error("factor for party `{party}` is not unitary (max |u^dag u - I| = {residual:e})")]
    NotUnitary { party: String, residual: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("outside supported scope: {0}")]
    ScopeGuard(String),
    #[error("party `{0}` is not a qubit")]
    NonQubit(String),
    #[error("unitary is not a stabilizer (residual {residual:e})")]
    NotAStabilizer { residual: f64 },
    #[error("state is not a purification of the density matrix (max-abs distance {distance:e})")]
    NotAPurification { distance: f64 },
    #[error("reduced density matrices differ (max-abs distance {distance:e})")]
    ReducedStateMismatch { distance: f64 },
    #[error("ensemble line {line} is not an eigenvector of the {party} factor (residual {residual:e})")]
    EigenvectorCondition {
        line: usize,
        party: String,
        residual: f64,
    },
    #[error("eigenphases of line {line} sum to {sum}, expected {theta} mod 2pi")]
    PhaseSumCondition { line: usize, sum: f64, theta: f64 },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("incompatible algebras: {0}")]
    IncompatibleAlgebras(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
