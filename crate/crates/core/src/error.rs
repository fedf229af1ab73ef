use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("filter design failed: {0}")]
    Design(String),

    /// The input file is well formed but not in a supported format. `field`
    /// names the offending header field (`sample_rate`, `channels`, ...).
    #[error("unsupported format: {field} ({detail})")]
    Format { field: &'static str, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("no filter count in 1..={m_max} meets the {budget_s:.6} s per-channel budget")]
    Infeasible { m_max: u32, budget_s: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
