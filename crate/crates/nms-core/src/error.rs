use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle detected in suppression graph")]
    CycleDetected,
    #[error("mask length mismatch: {left} vs {right}")]
    MaskLengthMismatch { left: usize, right: usize },
    #[error("unknown NMS method `{0}` (expected one of: original, fast, cluster, boe, qsi, eqsi)")]
    UnknownMethod(String),
    #[error("unknown centroid order `{0}` (expected one of: lex, manhattan, euclid)")]
    UnknownPreorder(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
