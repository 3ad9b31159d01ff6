use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("record {line}: field `{field}`: {reason}")]
    Record {
        line: usize,
        field: &'static str,
        reason: String,
    },

    #[error("record {line}: malformed JSON: {reason}")]
    Json { line: usize, reason: String },

    #[error("duplicate recipe id `{0}`")]
    DuplicateId(String),

    #[error("vector file line {line}: {reason}")]
    VectorFormat { line: usize, reason: String },

    #[error("empty vocabulary: no token reaches min_count {min_count}")]
    EmptyVocab { min_count: u64 },

    #[error("degenerate training corpus: {0}")]
    DegenerateCorpus(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("document has no embeddable tokens")]
    Unembeddable,

    #[error("wcd bound requires euclidean ground metric")]
    WcdRequiresEuclidean,

    #[error("transport solver exceeded {cap} pivots: {dump}")]
    SolverStalled { cap: usize, dump: String },

    #[error("non-finite feature in example {index}")]
    NonFinite { index: usize },

    #[error("{0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
