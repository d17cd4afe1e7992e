use thiserror::Error;

/// Errors raised by the evaluation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the domain of a function (probability levels, utility domains).
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data that violates a type invariant.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Operands that do not live on the same state/outcome space.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    /// A payoff outside the utility domain, with its location in the payoff matrix.
    #[error("payoff {value} at state `{state}`, outcome {outcome} is outside the utility domain {domain}")]
    OutOfDomain {
        state: String,
        outcome: usize,
        value: f64,
        domain: String,
    },

    /// A subjective addition or doubling whose utility falls outside the image of the utility.
    #[error("image overflow: utility {utility} is outside the image {image}{}", location_suffix(.location))]
    ImageOverflow {
        utility: f64,
        image: String,
        location: Option<(String, usize)>,
    },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("prior not present in the tabulated penalty: {0:?}")]
    UnknownPrior(Vec<f64>),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("budget of {budget} evaluations is below the {required} coarse grid points")]
    Budget { budget: usize, required: usize },

    #[error("parse error in `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

fn location_suffix(location: &Option<(String, usize)>) -> String {
    match location {
        Some((state, outcome)) => format!(" at state `{state}`, outcome {outcome}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn parse(input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            input: input.to_string(),
            reason: reason.into(),
        }
    }

    /// Attach a payoff-matrix location to an image overflow.
    pub(crate) fn at(self, state: &str, outcome: usize) -> Self {
        match self {
            Error::ImageOverflow { utility, image, .. } => Error::ImageOverflow {
                utility,
                image,
                location: Some((state.to_string(), outcome)),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
