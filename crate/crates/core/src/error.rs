use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index {index:?} outside grid extents {extents:?}")]
    IndexOutOfRange { index: [usize; 3], extents: [usize; 3] },

    #[error("field grid does not match plan grid")]
    GridMismatch,

    #[error("grid origin {origin:?} is not on the h-lattice (h = {h}); lattice convolution needs origin/h integral")]
    MisalignedOrigin { origin: [f64; 3], h: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("numerical overflow at t = {t}")]
    Overflow { t: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate initial data: all lambda coefficients are zero")]
    DegenerateInitialData,

    #[error("no blow-up signature: {0}")]
    NoBlowupSignature(String),

    #[error("empty profile")]
    EmptyProfile,

    #[error("series coefficient h_{0} requested before its lower-order coefficients")]
    MissingCoefficient(usize),

    #[error("config error at line {line}: key `{key}`: {reason}")]
    Config { key: String, line: usize, reason: String },

    #[error("config syntax error: {0}")]
    ConfigSyntax(String),

    #[error("snapshot: bad magic bytes {0:?}")]
    BadMagic([u8; 4]),

    #[error("snapshot: unsupported version {0}")]
    BadVersion(u32),

    #[error("snapshot: truncated payload (expected {expected} bytes, found {found})")]
    Truncated { expected: u64, found: u64 },

    #[error("energy csv {path}: row {row}: {reason}")]
    MalformedCsv { path: PathBuf, row: usize, reason: String },

    #[error("slice selector out of range: {0}")]
    BadSelector(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
