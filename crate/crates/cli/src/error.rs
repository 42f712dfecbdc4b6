use std::fmt;

/// A failure reported as `error[<kind>]: <message>`.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: "UsageError",
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: "InvalidConfig",
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.kind == "UsageError" {
            2
        } else {
            1
        }
    }
}

impl From<skinspace::Error> for CliError {
    fn from(e: skinspace::Error) -> Self {
        Self {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.kind, self.message)
    }
}
