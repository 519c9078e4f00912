use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A randomized generator ran out of attempts.
    #[error("generation failed after {attempts} attempts: {reason}")]
    GenerationFailure { attempts: usize, reason: String },

    /// A likelihood value or probability outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A normalizer came out non-positive or non-finite.
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    /// A belief update failed inside the engine.
    #[error("agent {agent}, round {round}: {source}")]
    Engine {
        agent: usize,
        round: usize,
        #[source]
        source: Box<Error>,
    },

    /// A requested series is not present in a trajectory or CSV.
    #[error("data error: {0}")]
    Data(String),

    /// The linear-domain oracle left its representable range.
    #[error("oracle range exceeded: {0}")]
    OracleRange(String),

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
