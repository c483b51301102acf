//! Error type shared by all evaluators.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Evaluation requested at (or numerically indistinguishable from) a pole.
    Pole { what: &'static str, at: String },
    /// A zeta factor would be evaluated too close to s = 1; reports the
    /// offending index pair when it comes from a shift combination.
    PoleProximity { what: &'static str, detail: String },
    /// Two shifts that must be distinct coincide (or nearly so).
    CoincidentShifts { min_distance: f64 },
    /// Argument outside the convergence/validity regime of the formula.
    Regime { what: &'static str, detail: String },
    /// A computation would exceed its configured memory or size budget.
    Budget { what: &'static str, requested: u64, cap: u64 },
    /// Integer result does not fit the working width.
    Overflow { what: &'static str },
    /// Requested tolerance not reached; carries the achieved estimate.
    AccuracyNotReached { what: &'static str, achieved: f64, requested: f64 },
    /// Adaptive quadrature gave up; carries the achieved error estimate.
    QuadratureFailure { what: &'static str, estimate: f64 },
    /// A truncated series tail is larger than the requested tolerance.
    TailTooLarge { what: &'static str, tail: f64, requested: f64 },
    /// Invalid run configuration.
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Pole { what, at } => write!(f, "{what}: pole at {at}"),
            Error::PoleProximity { what, detail } => {
                write!(f, "{what}: too close to a pole ({detail})")
            }
            Error::CoincidentShifts { min_distance } => {
                write!(f, "coincident shifts (min pairwise distance {min_distance:.3e})")
            }
            Error::Regime { what, detail } => write!(f, "{what}: outside valid regime ({detail})"),
            Error::Budget { what, requested, cap } => {
                write!(f, "{what}: requested {requested} exceeds budget {cap}")
            }
            Error::Overflow { what } => write!(f, "{what}: integer overflow"),
            Error::AccuracyNotReached { what, achieved, requested } => {
                write!(f, "{what}: achieved {achieved:.3e}, requested {requested:.3e}")
            }
            Error::QuadratureFailure { what, estimate } => {
                write!(f, "{what}: quadrature failed (error estimate {estimate:.3e})")
            }
            Error::TailTooLarge { what, tail, requested } => {
                write!(f, "{what}: truncation tail {tail:.3e} exceeds requested {requested:.3e}")
            }
            Error::Config(msg) => write!(f, "config error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
