use thiserror::Error;

use crate::fec::FecReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("framing error: {0}")]
    Framing(String),

    #[error("invalid symbol at position {position}")]
    InvalidSymbol { position: usize },

    #[error("uncorrectable block(s): {}", .report.failed_blocks())]
    DecodeFailure { report: FecReport },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("header check failed")]
    HeaderCorrupt,

    #[error("unknown mode: phy bit {phy}, mcs {mcs}")]
    UnknownMode { phy: u8, mcs: u8 },

    #[error("no frame detected")]
    NoFrame,
}

impl Error {
    pub(crate) fn framing(msg: impl Into<String>) -> Self {
        Error::Framing(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
