use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Core(#[from] metamux::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        HarnessError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration and input problems, 3 for numerical failures,
    /// 1 for file system errors.
    pub fn exit_code(&self) -> i32 {
        use metamux::Error as E;
        match self {
            HarnessError::Config { .. } => EXIT_CONFIG,
            HarnessError::Io { .. } => EXIT_IO,
            HarnessError::Core(e) => match e {
                E::InvalidParameter { .. }
                | E::LengthMismatch { .. }
                | E::RaggedBits { .. }
                | E::StateSpaceTooLarge { .. }
                | E::PadTooSmall { .. }
                | E::BandOutsideProcessing { .. }
                | E::Format(_) => EXIT_CONFIG,
                E::ZeroEnergy
                | E::NoActiveSubchannel
                | E::NonConvergence { .. }
                | E::Unbracketed { .. }
                | E::Unnormalized { .. }
                | E::UnreliableSlicing { .. }
                | E::NoCrossing
                | E::FractionUnreachable { .. } => EXIT_NUMERICAL,
            },
        }
    }
}
