use std::io;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unknown syllable '{syllable}' (U+{code:04X}) in '{word}'")]
    UnknownSyllable { syllable: char, code: u32, word: String },
    #[error("no representation for '{0}'")]
    NoRepresentation(String),
    #[error("cosine similarity is undefined for a zero vector")]
    UndefinedSimilarity,
    #[error("correlation is undefined for a constant sequence")]
    UndefinedCorrelation,
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("power iteration did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("model file: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn unknown_syllable(syllable: char, word: &str) -> Self {
        Error::UnknownSyllable {
            syllable,
            code: syllable as u32,
            word: word.to_owned(),
        }
    }

    /// True for the outcomes that mean "this word cannot be represented",
    /// as opposed to malformed input or I/O trouble.
    pub fn is_unrepresentable(&self) -> bool {
        matches!(self, Error::UnknownSyllable { .. } | Error::NoRepresentation(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
