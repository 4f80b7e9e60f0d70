use emitter_core::Error as CoreError;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("infeasible target: envelope would need f = {required:.6} > 1 at t = {t}")]
    Infeasible { t: f64, required: f64 },
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Infeasible { .. } => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Infeasible { .. } => "infeasible",
            CliError::Io(_) => "io",
        }
    }

    /// Machine-readable error record.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Infeasible { t, required } = self {
            v["t"] = json!(t);
            v["required_f"] = json!(required);
        }
        v
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InfeasibleTarget { t, required } => CliError::Infeasible { t, required },
            CoreError::InvalidArgument(_)
            | CoreError::Parse { .. }
            | CoreError::CoincidentAtoms(..)
            | CoreError::IndexOutOfRange { .. }
            | CoreError::OutOfCoverage { .. } => CliError::Config(e.to_string()),
            CoreError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Numeric(other.to_string()),
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
