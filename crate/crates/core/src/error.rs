use thiserror::Error;

/// Unified error type for the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x:.6}, {y:.6}, {z:.6}) lies outside the model chart")]
    OutOfChart { x: f64, y: f64, z: f64 },

    #[error("Reeb denominator {value:.3e} at ({x:.6}, {y:.6}, {z:.6}) is within 1e-12 of zero")]
    SingularForm { value: f64, x: f64, y: f64, z: f64 },

    #[error("contact condition fails at ({x:.6}, {y:.6}, {z:.6}): volume {volume:.3e}")]
    NotContact { x: f64, y: f64, z: f64, volume: f64 },

    #[error("step size underflow at t = {t:.6}: h = {step:.3e} below the configured minimum")]
    StepUnderflow { t: f64, step: f64 },

    #[error("tangential section crossing near t = {t:.6} (event derivative {derivative:.3e})")]
    TangentCrossing { t: f64, derivative: f64 },

    #[error("frame degenerates along the trajectory at t = {t:.6}")]
    FrameDegenerate { t: f64 },

    #[error("determinant drift {drift:.3e} exceeds 1e-6 at t = {t:.6}")]
    DeterminantDrift { t: f64, drift: f64 },

    #[error("angle increment {step:.4} at sample {index} is not below pi/2; refine the path sampling")]
    AngleResolution { index: usize, step: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("action bound {bound} is within 1e-9 of the achievable action {action}")]
    ActionBoundary { bound: f64, action: f64 },

    #[error("unknown letter '{0}'")]
    UnknownLetter(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("numerical search failed: {0}")]
    Numerical(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
