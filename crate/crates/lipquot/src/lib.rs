//! Numerical laboratory for Lipschitz maps: scale-restricted Lipschitz
//! estimation, exact minimax affine fitting, local affine-approximation
//! certificates, a zoo of quotient-like maps with coverage checkers, preimage
//! and lifting solvers, and generalized dyadic martingales on `[0,1)`.

pub mod affine;
pub mod cli;
pub mod counterexamples;
pub mod engine;
pub mod lipfn;
pub mod martingale;
pub mod report;
pub mod rng;
pub mod simplex;
pub mod solvers;
pub mod space;
pub mod uaap;
pub mod zoo;

/// Crate-wide error type.  Variants are grouped by the subsystem that
/// produces them; all carry enough context to be actionable.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("exponent out of range: p = {0} (need 1 <= p <= inf)")]
    BadExponent(f64),
    #[error("norm is not uniformly smooth (p = {0}); no norming-functional map")]
    NonSmoothNorm(String),
    #[error("zero vector has no normalized norming functional")]
    ZeroVector,
    #[error("accuracy eps = {0} out of range (need 0 < eps < 1/2)")]
    BadAccuracy(f64),
    #[error("empty sample set")]
    EmptySamples,
    #[error("sample budget {0} exceeds cap {1}")]
    BudgetCap(usize, usize),
    #[error("no feasible pair at scale t = {t} (domain diameter {diameter})")]
    EmptyPairSet { t: f64, diameter: f64 },
    #[error("declared Lipschitz constant missing on function handle")]
    MissingLip,
    #[error("scale scan found no admissible d; trace: {trace:?}")]
    ScanFailure { trace: Vec<(f64, f64, f64)> },
    #[error("certificate validation failed: sampled error {sampled} > claimed {claimed}")]
    ValidationFailure { sampled: f64, claimed: f64 },
    #[error("linear program did not converge: {0}")]
    LpFailure(String),
    #[error("point outside map domain: {0}")]
    OutsideDomain(String),
    #[error("ball not inside required region: {0}")]
    BallOutsideRegion(String),
    #[error("coordinate truncation too small: needed threshold below 2^-{0}")]
    TruncationTooSmall(usize),
    #[error("difference quotients do not converge (oscillation {0})")]
    NoDirectionalLimit(f64),
    #[error("preimage solve failed: best residual {residual} > tolerance {tol}")]
    SolveFailure { residual: f64, tol: f64 },
    #[error("lift step {step} failed: residual {residual} > tolerance {tol}")]
    LiftFailure { step: usize, residual: f64, tol: f64 },
    #[error("perturbation too large: co-Lip * Lip(g) = {0} >= 1")]
    PerturbationTooLarge(f64),
    #[error("invalid interval [{a}, {c})")]
    BadInterval { a: f64, c: f64 },
    #[error("invalid martingale tree: {0}")]
    BadMartingale(String),
    #[error("no atom pair of width <= {0} around the query point")]
    NoAtomPair(f64),
    #[error("polyline must have at least two strictly increasing times")]
    BadPolyline,
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
