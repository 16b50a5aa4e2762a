use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value sits on a pole `1/(a - b)` of some formula.
    #[error("pole: {what} ({a} vs {b})")]
    Pole { what: String, a: String, b: String },

    /// Two parameters that must stay distinct (rapidities, levels, combined sets) coincide.
    #[error("collision: {0}")]
    Collision(String),

    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("continuation failed for seed {seed}: step underflow, last good g = {last_good_g}")]
    Continuation { seed: String, last_good_g: f64 },

    #[error("duplicate solutions for seeds {first} and {second}")]
    DuplicateSolution { first: String, second: String },

    #[error(
        "newton iteration did not converge: residual {residual:.3e} after {iterations} iterations"
    )]
    Divergence { residual: f64, iterations: usize },

    #[error("degenerate rapidities: {0}")]
    Degenerate(String),

    #[error("eigenvalue-based variables are inconsistent with a degree-{degree} polynomial (residual {residual:.3e})")]
    InconsistentLambdas { degree: usize, residual: f64 },

    #[error("singular point: g^-1 = {point} ({context})")]
    SingularPoint { point: i64, context: String },

    #[error("missing rapidities: {0}")]
    MissingRapidities(String),

    #[error("outside validity range: {0}")]
    OutOfValidity(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("basis mismatch: (L={0}, N={1}) vs (L={2}, N={3})")]
    BasisMismatch(usize, usize, usize, usize),

    #[error("non-real eigenvalue-based variable at level {level}: imaginary part {imag:.3e}")]
    NonReal { level: usize, imag: f64 },
}

impl Error {
    pub(crate) fn pole(
        what: impl Into<String>,
        a: impl std::fmt::Display,
        b: impl std::fmt::Display,
    ) -> Self {
        Error::Pole {
            what: what.into(),
            a: a.to_string(),
            b: b.to_string(),
        }
    }
}
