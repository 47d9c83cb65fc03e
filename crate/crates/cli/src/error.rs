use mcmullen_core::Error;
use serde::Serialize;
use serde_json::Value;

/// Failure of a command, reported as one JSON object on stderr.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
    #[serde(skip)]
    code: u8,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { error: "config", message: message.into(), details: None, code: 2 }
    }

    pub fn invariant(message: impl Into<String>, details: Value) -> Self {
        Self { error: "invariant_violation", message: message.into(), details: Some(details), code: 3 }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { error: "io", message: message.into(), details: None, code: 1 }
    }

    pub fn exit_code(&self) -> u8 {
        self.code
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error object serializes")
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (error, code, details) = match &e {
            Error::InvalidParams(report) => ("invalid_params", 2, serde_json::to_value(report).ok()),
            Error::InvalidBranching { .. } => ("invalid_params", 2, None),
            Error::Parse(_) | Error::Structural(_) => ("config", 2, None),
            Error::OutOfDomain(_) | Error::Domain(_) | Error::Precondition(_) | Error::InvalidScale(_) => {
                ("domain", 2, None)
            }
            Error::Overflow(_) => ("overflow", 1, None),
        };
        Self { error, message, details, code }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}
