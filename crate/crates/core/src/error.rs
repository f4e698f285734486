use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("firm already in default: value {firm_value} is at or below effective barrier {barrier}")]
    FirmDefaulted { firm_value: f64, barrier: f64 },

    #[error("survival probability {value} left the admissible range")]
    NumericalRange { value: f64 },

    #[error("composite barrier needs at least one entry")]
    EmptyComposite,

    #[error("bracket [{lo}, {hi}] does not straddle the target (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder did not converge within {max_iter} iterations (last mismatch {mismatch})")]
    MaxIterations { max_iter: usize, mismatch: f64 },

    #[error("volatility calibration is degenerate at the money (V = K = {0})")]
    AtTheMoney(f64),

    #[error("calibration failed for starting spread {spread_bps} bps: {source}")]
    Calibration {
        spread_bps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by a model state that cannot be solved, as
    /// opposed to malformed input.
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::FirmDefaulted { .. }
            | Error::NoBracket { .. }
            | Error::MaxIterations { .. }
            | Error::AtTheMoney(_)
            | Error::NumericalRange { .. } => true,
            Error::Calibration { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }
}
