use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown gauge group tag `{0}`")]
    UnknownGroup(String),

    #[error("unknown orientation `{0}` (expected `ab` or `ba`)")]
    UnknownOrientation(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("non-finite value in field `{0}`")]
    NonFinite(String),

    #[error("evaluation at singular point {0:?}")]
    Singular((f64, f64)),

    #[error("lambda = {0} is not an integer; operation only defined for integer lambda")]
    NonIntegerLambda(String),

    #[error("Gram matrix numerically singular (det = {det:.3e}, threshold = {threshold:.3e})")]
    SingularGram { det: f64, threshold: f64 },

    #[error("linear system singular or ill-conditioned: {0}")]
    SingularSystem(String),

    #[error("right-hand side inconsistent with the solvability conditions (multiplier size {0:.3e})")]
    Inconsistent(f64),

    #[error("Newton iteration diverged after {iterations} steps (last residual {residual:.3e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("exponent {value:.3} exceeds overflow guard in {context}")]
    Overflow { value: f64, context: &'static str },

    #[error("fixed-point iteration diverged at step {0}")]
    PicardDivergence(usize),

    #[error("iterate left the ball: norm {norm:.3e} > M0 = {radius:.3e}")]
    BallViolation { norm: f64, radius: f64 },

    #[error("iteration did not converge within {0} steps")]
    NoConvergence(usize),

    #[error("fit annulus empty: {0}")]
    EmptyAnnulus(String),

    #[error("nondegeneracy estimate {0:.3e} below threshold; mixed solve refused")]
    Degenerate(f64),

    #[error("residual check failed: {0:.3e}")]
    ResidualCheck(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
