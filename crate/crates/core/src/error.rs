use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErwError {
    /// The cookie environment could not be built from the given parameters.
    #[error("invalid cookie environment: {0}")]
    InvalidEnvironment(String),

    /// An operation was called outside the parameter region where it is defined.
    #[error("domain error (delta = {}): {reason}", short(*delta))]
    Domain { delta: f64, reason: String },

    /// An argument violated a precondition unrelated to the drift parameter.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no convergence after {iterations} iterations: {reason}")]
    NonConvergence { iterations: usize, reason: String },

    /// The search region for the gap optimizer contains no admissible point.
    #[error("search region contains no point with delta >= {min_delta}")]
    EmptyRegion { min_delta: f64 },
}

/// Drift rounded to 12 significant digits for messages.
fn short(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(11 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

pub type Result<T> = std::result::Result<T, ErwError>;
