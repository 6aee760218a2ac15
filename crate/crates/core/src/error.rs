//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file (inventory, rules, lexicon, FST text, scores).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Input is well-formed but violates a contract (unknown symbol,
    /// duplicate entry, out-of-vocabulary word, bad configuration).
    #[error("{0}")]
    Validation(String),

    /// An L2 phoneme matched two or more L1 phonemes during tying.
    #[error("ambiguous tie for '{symbol}': candidates {candidates:?}")]
    AmbiguousTie {
        symbol: String,
        candidates: Vec<String>,
    },

    /// Operands of a binary FST operation live in different semirings.
    #[error("semiring mismatch: {0} vs {1}")]
    SemiringMismatch(crate::wfst::Semiring, crate::wfst::Semiring),

    /// An operation that requires acyclic input saw a cycle.
    #[error("cyclic machine: {0}")]
    Cyclic(String),

    /// Epsilon-removal hit a cycle whose total weight does not converge.
    #[error("divergent epsilon cycle through state {0}")]
    EpsilonCycle(usize),

    /// Path enumeration exceeded the caller's bound.
    #[error("path count exceeds limit {0}")]
    PathOverflow(usize),

    /// Variant expansion exceeded the per-word cap.
    #[error("word expands to more than {cap} variants")]
    VariantCapExceeded { cap: usize },

    /// No accepting path exists (decode or forward pass).
    #[error("no accepting path: {0}")]
    NoAcceptingPath(String),

    /// A pdf id on an arc does not fit the score matrix.
    #[error("pdf id {pdf} out of range (num pdfs {num_pdfs})")]
    PdfOutOfRange { pdf: u32, num_pdfs: usize },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
