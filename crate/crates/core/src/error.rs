//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("denominator {denominator} vanishes at the special value for level {ell}")]
    PoleAtSpecialValue { ell: u32, denominator: String },
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("ideal span and radical differ at grade {0}")]
    MismatchAtGrade(usize),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("component exceeded the cap of {cap} states")]
    ComponentCapExceeded { cap: usize },
    #[error("inconsistent cycle in component {component}")]
    InconsistentCycle { component: usize },
    #[error("state space of {states} exceeds the limit {cap}")]
    StateSpaceTooLarge { states: usize, cap: usize },
    #[error("skein window for level {ell} does not fit on {lattice}")]
    WindowDoesNotFit { ell: u32, lattice: String },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigInvalid(_) | Error::IndexOutOfRange(_) | Error::SignatureMismatch(_) => 2,
            Error::ComponentCapExceeded { .. }
            | Error::StateSpaceTooLarge { .. }
            | Error::WindowDoesNotFit { .. } => 3,
            Error::PoleAtSpecialValue { .. }
            | Error::InconsistentCycle { .. }
            | Error::InvariantViolation(_) => 4,
            Error::MismatchAtGrade(_) | Error::OracleMismatch(_) => 5,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PoleAtSpecialValue { .. } => "PoleAtSpecialValue",
            Error::SignatureMismatch(_) => "SignatureMismatch",
            Error::MismatchAtGrade(_) => "MismatchAtGrade",
            Error::IndexOutOfRange(_) => "IndexOutOfRange",
            Error::ComponentCapExceeded { .. } => "ComponentCapExceeded",
            Error::InconsistentCycle { .. } => "InconsistentCycle",
            Error::StateSpaceTooLarge { .. } => "StateSpaceTooLarge",
            Error::WindowDoesNotFit { .. } => "WindowDoesNotFit",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::InvariantViolation(_) => "InvariantViolation",
            Error::OracleMismatch(_) => "OracleMismatch",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
