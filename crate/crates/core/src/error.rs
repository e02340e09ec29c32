use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("all weights are zero")]
    AllZeroWeights,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid distribution: {0}")]
    InvalidDist(String),

    #[error("supports cannot be aligned")]
    SupportMismatch,

    #[error("value {0} is not in the support")]
    ValueNotInSupport(f64),

    #[error("every utility is -inf")]
    AllUtilitiesNegativeInfinite,

    #[error("vague message `{0}` needs a parameter value")]
    MissingParameter(String),

    #[error("invalid message: {0}")]
    InvalidMessage(String),

    #[error("message `{0}` is false everywhere under the prior")]
    ZeroPosterior(String),

    #[error("closed form does not apply: {0}")]
    NonUniformPreconditionViolated(String),

    #[error("no truthful message for observation `{0}`")]
    NoTruthfulMessage(String),

    #[error("message `{0}` is never sent and the literal fallback is disabled")]
    DeadMessageNoFallback(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("enumeration needs {required} profiles, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("game has no question partition")]
    MissingQuestion,

    #[error("{cells} question cells but only {messages} messages")]
    NotEnoughMessages { cells: usize, messages: usize },

    #[error("states {states:?} share question cell {cell} but rank actions differently")]
    PreferenceHeterogeneity { cell: usize, states: Vec<usize> },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Schema(String),

    #[error("{0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema(_)
            | Error::Io(_)
            | Error::InvalidDist(_)
            | Error::InvalidMessage(_)
            | Error::InvalidGame(_)
            | Error::InvalidArgument(_)
            | Error::LengthMismatch { .. }
            | Error::DimensionMismatch(_)
            | Error::AllZeroWeights => 2,
            Error::NoTruthfulMessage(_) | Error::AllUtilitiesNegativeInfinite => 4,
            Error::BudgetExceeded { .. } => 5,
            _ => 3,
        }
    }
}
