use crate::rules::{Label, StabilityWitness};

/// Errors shared across the crate.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),

    #[error("invalid parameter for rule `{rule}`: {msg}")]
    InvalidParam { rule: String, msg: String },

    #[error("label ({0}) has no production in rule `{1}`")]
    UndefinedLabel(Label, String),

    #[error("rule `{rule}` is not stable: {witness}")]
    NotStable {
        rule: String,
        witness: StabilityWitness,
    },

    #[error("word length must be at least 1")]
    EmptyWord,

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("shifted list start ({start}) out of range for parent ({parent})")]
    StartOutOfRange { parent: Label, start: Label },

    #[error("label ({0}) does not occur in the shifted list")]
    NotInShiftedList(Label),

    #[error("words are not adjacent: {0}")]
    NotAdjacent(String),

    #[error("bit string inconsistent with word: {0}")]
    InconsistentEncoding(String),

    #[error("not a valid Dyck string: {0}")]
    NotDyck(String),

    #[error("empty permutation")]
    EmptyPermutation,

    #[error("not a permutation of 1..={0}")]
    NotAPermutation(usize),

    #[error("DSL parse error at line {line}, column {col}: {msg}")]
    Dsl { line: usize, col: usize, msg: String },

    #[error("compact form unavailable: {0}")]
    NoCompactForm(String),

    #[error("tree depth {0} exceeds the configured bound {1}")]
    DepthTooLarge(u32, u32),
}

pub type Result<T> = std::result::Result<T, Error>;
