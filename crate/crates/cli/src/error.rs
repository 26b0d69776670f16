use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config{}: {msg}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },

    #[error(transparent)]
    Compute(#[from] bandnodal::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0} invariant(s) failed")]
    Invariant(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config { .. } => 2,
            // An inadmissible mesh level comes straight from the config.
            Self::Compute(bandnodal::Error::MeshResolution { .. }) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &str) -> impl FnOnce(io::Error) -> Self + '_ {
        move |source| Self::Io { path: path.to_string(), source }
    }
}
