//! Error taxonomy shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad algebra/order configuration (isotropic norm form, mismatched
    /// algebras, unparsable config files, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called with inputs outside its contract.
    #[error("invalid input: {0}")]
    Input(String),

    /// Floating-point conditioning failure (e.g. Cholesky breakdown).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An enumeration or search exceeded its element/work budget.
    #[error("resource budget exceeded: {what} (partial results: {partial})")]
    Resource { what: String, partial: bool },

    /// A truncation tail bound is above the requested tolerance.
    #[error("precision not reached: tail bound {tail:.3e} above tolerance {tol:.3e}; {hint}")]
    Precision { tail: f64, tol: f64, hint: String },

    /// An amplifier with empty support cannot feed the bound chain.
    #[error("degenerate amplifier: {0}")]
    DegenerateAmplifier(String),

    /// An internal cross-check failed; this signals a bug, not bad input.
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

impl Error {
    pub fn config<S: Into<String>>(msg: S) -> Self {
        Error::Config(msg.into())
    }

    pub fn input<S: Into<String>>(msg: S) -> Self {
        Error::Input(msg.into())
    }
}
