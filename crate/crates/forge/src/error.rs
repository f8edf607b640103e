use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const VERIFICATION_FAILED: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const NUMERIC: i32 = 4;
}

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] carleman_core::Error),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("writing {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("serialising {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl ForgeError {
    /// Bad inputs (including an unwritable output directory) map to 3,
    /// everything the numerics raise to 4.
    pub fn exit_code(&self) -> i32 {
        match self {
            ForgeError::Config(_) | ForgeError::Io { .. } => exit::CONFIG,
            ForgeError::Core(e) if e.is_config() => exit::CONFIG,
            _ => exit::NUMERIC,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        assert_eq!(ForgeError::Config("x".into()).exit_code(), 3);
        assert_eq!(ForgeError::from(carleman_core::Error::Domain("x".into())).exit_code(), 3);
        assert_eq!(ForgeError::from(carleman_core::Error::Numeric("x".into())).exit_code(), 4);
        assert_eq!(ForgeError::from(carleman_core::Error::Lu { row: 3 }).exit_code(), 4);
    }
}
