use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated an operation's precondition.
    InvalidParameter(String),
    /// A grid does not hold enough of the probability mass.
    Truncation { coverage: f64 },
    /// Moment order beyond what a tabulated grid can resolve.
    MomentOrder { order: usize, max: usize },
    /// The characteristic function vanishes (|F| < 1e-12) at `omega`, so its
    /// logarithm cannot be continued past that frequency.
    ZeroCrossing { omega: f64 },
    /// Inverse transform left an imaginary part above tolerance.
    ImaginaryResidue { residue: f64 },
    /// A density grid has genuinely negative entries.
    NegativeDensity { value: f64, x: f64 },
    /// Frequency grid too coarse for the finite-difference derivatives.
    GridTooCoarse {
        points_in_window: usize,
        required: usize,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Truncation { coverage } => {
                write!(f, "grid covers only {coverage:.9} of the probability mass")
            }
            Error::MomentOrder { order, max } => write!(
                f,
                "moment of order {order} exceeds the tabulated-grid limit {max} (tail truncation risk)"
            ),
            Error::ZeroCrossing { omega } => write!(
                f,
                "characteristic function vanishes at omega = {omega}; logarithm undefined beyond"
            ),
            Error::ImaginaryResidue { residue } => write!(
                f,
                "inverse transform has imaginary residue {residue:e} (conjugate symmetry violated)"
            ),
            Error::NegativeDensity { value, x } => {
                write!(f, "density value {value:e} at x = {x} is negative")
            }
            Error::GridTooCoarse {
                points_in_window,
                required,
            } => write!(
                f,
                "frequency grid has {points_in_window} points in the derivative window, need {required}"
            ),
        }
    }
}

impl core::error::Error for Error {}
