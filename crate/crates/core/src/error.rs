use std::path::PathBuf;

use thiserror::Error;

use crate::kg::ObjectId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("knowledge graph file contains no triples")]
    EmptyGraph,

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("unknown object {0:?}")]
    UnknownObject(ObjectId),

    #[error("{0:?} has an empty local knowledge graph")]
    EmptyLocalKg(ObjectId),

    #[error("generalized triple is not part of the GL-KG of {0:?}")]
    NotInGeneralizedKg(ObjectId),

    #[error("generalized edge triple has entity vertices at both ends")]
    EntityEntityForm,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("could not draw {wanted} negatives for {owner:?}: {reason}")]
    NegativeSampling {
        owner: ObjectId,
        wanted: usize,
        reason: String,
    },

    #[error("training diverged at epoch {epoch} (owner {owner:?}): loss {loss}")]
    Diverged {
        epoch: usize,
        owner: Option<ObjectId>,
        loss: f64,
    },

    #[error("embedding file: {0}")]
    EmbeddingFormat(String),

    #[error("no embedding for `{0}`")]
    MissingEmbedding(String),

    #[error("unmappable question: no lexicon phrase found")]
    Unmappable,

    #[error("no candidates of kind {kind} for phrase `{phrase}`")]
    NoCandidates { phrase: String, kind: &'static str },

    #[error("structure needs at least 2 vertex sets and 1 edge set (got {n} and {m})")]
    InsufficientPhrases { n: usize, m: usize },

    #[error("no valid structure matrix exists")]
    NoValidStructure,

    #[error("search space of {size} structures exceeds the brute-force limit")]
    SearchSpaceTooLarge { size: u128 },

    #[error("{count} query representations exceed the cap of {cap}; prune candidate sets harder")]
    TooManyRepresentations { count: u128, cap: u128 },

    #[error("fully grounded query: no class vertex to turn into a variable")]
    FullyGrounded,

    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
