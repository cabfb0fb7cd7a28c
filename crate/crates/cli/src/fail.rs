use closure14::Error;

/// Everything that ends a command early, with its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Malformed or inconsistent configuration, exit 2.
    Config(String),
    /// Inputs outside the mathematical domain, exit 3.
    Domain(String),
    /// Output could not be written, exit 2.
    Io(String),
}

impl Failure {
    /// Maps a library error raised while handling `field`.
    pub fn from_core(field: &str, e: Error) -> Self {
        let message = format!("{field}: {e}");
        match e {
            Error::Domain(_)
            | Error::Decay { .. }
            | Error::Ladder { .. }
            | Error::Accuracy { .. } => Self::Domain(message),
            Error::OddRank(_)
            | Error::RankTooLarge { .. }
            | Error::Arity { .. }
            | Error::EtaParity { .. }
            | Error::Truncation { .. }
            | Error::DerivativeOrder { .. }
            | Error::Param(_) => Self::Config(message),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Domain(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Domain(m) | Self::Io(m) => m,
        }
    }
}
