use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument values or mismatched dimensions.
    #[error("domain error: {0}")]
    Domain(String),

    /// No documents (or no tokens) survive ingestion/encoding.
    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    /// A train/test split would leave one side empty.
    #[error("split error: {0}")]
    Split(String),

    /// Rank-deficient regression design.
    #[error("singular fit: {0}")]
    SingularFit(String),

    /// Every log-weight is -inf; no distribution can be formed.
    #[error("degenerate distribution: all log-weights are -inf")]
    DegenerateDistribution,

    /// Exact enumeration would exceed the feasibility guard.
    #[error("instance too large: {0}")]
    TooLarge(String),

    /// A model and a corpus disagree about the vocabulary.
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),

    /// Count-table invariants were violated; indicates a sampler bug,
    /// not a user error.
    #[error("internal consistency violated: {0}")]
    Inconsistency(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(String),
}

impl Error {
    /// True for errors caused by user input (bad flags, bad files, bad data),
    /// as opposed to internal invariant breaches. The CLI maps usage errors to
    /// exit code 2 and internal errors to exit code 1.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Inconsistency(_) | Error::DegenerateDistribution)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn user_caused_errors_are_usage() {
        let io = Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, "gone"));
        for e in [
            Error::Domain("bad".into()),
            Error::EmptyCorpus("nothing".into()),
            Error::Split("lopsided".into()),
            Error::SingularFit("rank".into()),
            Error::TooLarge("huge".into()),
            Error::VocabMismatch("ids".into()),
            Error::Csv("row".into()),
            io,
        ] {
            assert!(e.is_usage(), "{e} should map to exit code 2");
        }
    }

    #[test]
    fn internal_errors_are_not_usage() {
        for e in [
            Error::Inconsistency("count drift".into()),
            Error::DegenerateDistribution,
        ] {
            assert!(!e.is_usage(), "{e} should map to exit code 1");
        }
    }
}
