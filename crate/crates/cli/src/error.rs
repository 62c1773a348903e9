use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Args(String),

    #[error("{0}")]
    TooLarge(String),

    #[error("{0}")]
    Numeric(String),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Args(_) => "E_ARGS",
            CliError::TooLarge(_) => "E_TOO_LARGE",
            CliError::Numeric(_) => "E_NUMERIC",
            CliError::Io(_) => "E_IO",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Args(_) => 2,
            CliError::TooLarge(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "code": self.code(), "message": self.to_string() } }).to_string()
    }

    /// Prefixes the message with `context`.
    pub fn context(self, context: &str) -> Self {
        let wrap = |m: String| format!("{context}: {m}");
        match self {
            CliError::Args(m) => CliError::Args(wrap(m)),
            CliError::TooLarge(m) => CliError::TooLarge(wrap(m)),
            CliError::Numeric(m) => CliError::Numeric(wrap(m)),
            CliError::Io(m) => CliError::Io(wrap(m)),
        }
    }
}

impl From<mllt_core::Error> for CliError {
    fn from(e: mllt_core::Error) -> Self {
        match e {
            mllt_core::Error::TooLarge { .. } => CliError::TooLarge(e.to_string()),
            _ => CliError::Args(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_core_errors() {
        let e: CliError = mllt_core::Error::TooLarge { count: 5, limit: 1 }.into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = mllt_core::Error::ZeroTrials.into();
        assert_eq!(e.code(), "E_ARGS");
        let v: serde_json::Value = serde_json::from_str(&e.context("pmf").to_json()).unwrap();
        assert_eq!(v["error"]["code"], "E_ARGS");
        assert!(v["error"]["message"].as_str().unwrap().starts_with("pmf: "));
    }
}
