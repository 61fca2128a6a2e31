//! Shared error type for the kernel.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("root index must be at least 2, got {0}")]
    RootIndexTooSmall(u32),
    #[error("mixed root indices: r={left} vs r={right}")]
    MixedRootIndex { left: u32, right: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("scalar is a zero divisor and has no inverse: {0}")]
    NotInvertible(String),
    #[error("index m={m} out of range for r={r}: at most {top}")]
    FieldIndexOutOfRange { m: u32, r: u32, top: u32 },
    #[error("no value assigned to jet variable {0}")]
    MissingAssignment(String),
    #[error("coefficient of D^{order} is not certified: watermark is {watermark}")]
    BelowWatermark { order: i64, watermark: i64 },
    #[error("residue not certified: watermark is {0}, need at most -1")]
    ResidueNotCertified(i64),
    #[error(
        "composition of exact operators does not terminate below D^{order}; \
         truncate an operand first"
    )]
    NonTerminating { order: i64 },
    #[error("operator is not in Lax form: {0}")]
    NotLaxForm(String),
    #[error("depth must be at least 1, got {0}")]
    InvalidDepth(u32),
    #[error("depth {depth} too shallow for flow (a={a}, m={m}); need at least {needed}")]
    DepthTooShallow { a: u32, m: u32, depth: u32, needed: u32 },
    #[error("flow commutator reaches order {order}, expected at most {bound}")]
    CommutatorOrderBound { order: i64, bound: i64 },
    #[error("position {index} out of range for tuple of length {len}")]
    PositionOutOfRange { index: usize, len: usize },
    #[error("inadmissible type tuple: {0}")]
    BadTypeTuple(String),
    #[error("invalid correlator key: {0}")]
    BadKey(String),
    #[error("table rejects entry: {0}")]
    BadEntry(String),
    #[error("table document: {0}")]
    BadTable(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
