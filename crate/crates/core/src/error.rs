use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Arguments violate an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// An encoder was asked to write a round out of order.
    #[error("sequencing error: block is at round {current}, cannot write round {requested}")]
    Sequencing { current: u32, requested: u32 },

    /// A decoder was asked for a round other than the most recent one.
    #[error("cannot decode round {requested}: block is at round {current}")]
    DecodeRound { current: u32, requested: u32 },

    /// The search exhausted the whole hash family without a common solution.
    #[error(
        "no encoding for round {round}: block {bottleneck} is the bottleneck \
         ({candidates} candidate words for {targets} targets)"
    )]
    NoEncoding { round: u32, bottleneck: usize, candidates: u64, targets: u64 },

    /// A write tried to clear a programmed cell.
    #[error("write-once violation at cell {index}")]
    WriteOnceViolation { index: usize },

    #[error("image error: {0}")]
    Image(#[from] ImageError),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

/// Parse failures of the memory image text format.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("bad magic line: {0:?}")]
    BadMagic(String),
    #[error("malformed line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("truncated image: missing {0}")]
    Truncated(String),
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
}
