use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate vector: zero norm")]
    DegenerateVector,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dataset generation failed: {0}")]
    Generation(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("partition infeasible: no partition with every client holding >= {min_samples} samples after {attempts} resamples")]
    PartitionInfeasible { attempts: usize, min_samples: usize },
    #[error("degenerate classifier: row for class {class} has zero norm")]
    DegenerateClassifier { class: usize },
    #[error("aggregation error: {0}")]
    Aggregation(String),
    #[error("round {round}{}: {source}", client.map(|c| format!(", client {c}")).unwrap_or_default())]
    Round {
        round: usize,
        client: Option<usize>,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn in_round(self, round: usize, client: Option<usize>) -> Error {
        Error::Round {
            round,
            client,
            source: Box::new(self),
        }
    }
}
