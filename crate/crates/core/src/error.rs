use alloc::boxed::Box;
use alloc::string::String;

use crate::dependence::Direction;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("length >= 2 required, got {len} value(s)")]
    TooShort { len: usize },
    #[error("non-positive price {value} at index {index}")]
    NonPositivePrice { index: usize, value: f64 },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("price path overflows at index {index}")]
    Overflow { index: usize },
    #[error("barrier level must be nonzero and finite, got {0}")]
    InvalidBarrier(f64),
    #[error("no crossings for barrier {rho}")]
    NoCrossings { rho: f64 },
    #[error("barrier {rho} produced {got} crossing(s), {needed} required")]
    TooFewCrossings { rho: f64, got: usize, needed: usize },
    #[error("{got} support point(s) with positive mass, at least {needed} required for a fit")]
    TooFewSupportPoints { got: usize, needed: usize },
    #[error("permutation of length {got} does not permute 0..{expected}")]
    InvalidPermutation { got: usize, expected: usize },
    #[error("panel needs at least 2 stocks, got {0}")]
    TooFewStocks(usize),
    #[error("panel row {row} ({name}) has {len} values, expected {expected}")]
    RaggedPanel {
        row: usize,
        name: String,
        len: usize,
        expected: usize,
    },
    #[error("stock {name}: {source}")]
    Stock { name: String, source: Box<Error> },
    #[error("stock {index} out of range for a panel of {count}")]
    StockOutOfRange { index: usize, count: usize },
    #[error("window length {window} invalid for a series of {days} day(s)")]
    WindowTooLong { window: usize, days: usize },
    #[error("sample lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{got} sample(s), at least {needed} required")]
    TooFewSamples { got: usize, needed: usize },
    #[error("at least 2 bins per margin required, got {0}")]
    TooFewBins(usize),
    #[error("zero-entropy margin")]
    ZeroEntropyMargin,
    #[error("constant margin, correlation undefined")]
    ConstantMargin,
    #[error("{direction} set has {got} day(s), at least {needed} required")]
    InsufficientDays {
        direction: Direction,
        got: usize,
        needed: usize,
    },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(&'static str),
}

impl Error {
    /// Errors that come from the data being numerically unusable rather than
    /// malformed (no crossings, too few days in a set, overflow).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. }
                | Error::NoCrossings { .. }
                | Error::TooFewCrossings { .. }
                | Error::TooFewSupportPoints { .. }
                | Error::InsufficientDays { .. }
                | Error::ZeroEntropyMargin
                | Error::ConstantMargin
        )
    }
}
