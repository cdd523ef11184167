use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Two objects that must share a dimension do not.
    DimensionMismatch { expected: usize, found: usize },
    /// A real input was NaN or infinite.
    NonFinite,
    /// A builtin map name was not recognized.
    UnknownMap(String),
    /// Structurally invalid input (bad matrix, out-of-range index, ...).
    Invalid(String),
    /// A dense table or enumeration would exceed its configured budget.
    Capacity { what: &'static str, requested: u64, limit: u64 },
    /// An orbit search used up its evaluation budget.
    StepBudget { steps: u64 },
    /// A matrix that has to be inverted is singular.
    Singular,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NonFinite => f.write_str("non-finite input"),
            Error::UnknownMap(name) => write!(f, "unknown map `{name}`"),
            Error::Invalid(msg) => write!(f, "invalid input: {msg}"),
            Error::Capacity { what, requested, limit } => {
                write!(f, "{what} needs {requested}, over the limit of {limit}")
            }
            Error::StepBudget { steps } => {
                write!(f, "step budget exhausted after {steps} map evaluations")
            }
            Error::Singular => f.write_str("singular matrix"),
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Budget exhaustion of either kind.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Capacity { .. } | Error::StepBudget { .. })
    }
}
