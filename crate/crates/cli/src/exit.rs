//! Exit-code contract: 1 failed verification, 2 I/O and references, 3 validation,
//! 4 convergence and singular points.

use std::fmt::Display;
use std::path::Path;

use rg_core::error::Error;

pub const VERIFY_FAILED: u8 = 1;
pub const IO: u8 = 2;
pub const VALIDATION: u8 = 3;
pub const CONVERGENCE: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn new(code: u8, message: impl Display) -> Self {
        CliError {
            code,
            message: message.to_string(),
        }
    }

    pub fn io(path: &Path, err: impl Display) -> Self {
        CliError::new(IO, format!("{}: {err}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } | Error::BasisMismatch(..) => IO,
            Error::Pole { .. }
            | Error::Collision(_)
            | Error::InvalidModel(_)
            | Error::Precondition(_)
            | Error::Degenerate(_)
            | Error::MissingRapidities(_)
            | Error::OutOfValidity(_) => VALIDATION,
            Error::Continuation { .. }
            | Error::DuplicateSolution { .. }
            | Error::Divergence { .. }
            | Error::InconsistentLambdas { .. }
            | Error::SingularPoint { .. }
            | Error::Singular(_)
            | Error::NonReal { .. } => CONVERGENCE,
        };
        CliError::new(code, e)
    }
}
