use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameters outside the three-cut phase: b = a^2 = {b}, t = {t}")]
    Phase { b: f64, t: f64 },

    #[error("xi = {re}{im:+}i is a pole of z(xi)")]
    PoleAtXi { re: f64, im: f64 },

    #[error("branch points not strictly increasing: {0:?}")]
    OrderingViolation([f64; 3]),

    #[error("sheet continuation failed: {0}")]
    ContinuationFailure(String),

    #[error("degenerate edge: |z''| = {0:e} at the critical point")]
    DegenerateEdge(f64),

    #[error("z = {0} is within the exclusion radius of a branch point")]
    BranchPointSingularity(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("root solve failed at z = {re}{im:+}i: {reason}")]
    RootSolve { re: f64, im: f64, reason: String },

    #[error("quadrature did not converge: error estimate {error:e} above tolerance {tolerance:e}")]
    QuadratureNonConvergence { error: f64, tolerance: f64 },

    #[error("point {re}{im:+}i lies on a cut and needs an explicit side")]
    OnCut { re: f64, im: f64 },

    #[error("argument outside the domain of the operation: {0}")]
    Domain(String),

    #[error("linear system too ill-conditioned (condition estimate {condition:e}); use extended precision")]
    IllConditioned { condition: f64 },

    #[error("cancellation in moment recursion exceeds budget (estimated relative error {estimate:e})")]
    PrecisionLoss { estimate: f64 },

    #[error("eigenvalue solver failed for draw {draw}")]
    EigenSolverFailure { draw: u64 },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
