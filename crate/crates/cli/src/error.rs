use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("solver error: {0}")]
    Solver(translab::Error),
    #[error("output error: {0}")]
    Io(String),
    #[error("{} check(s) failed: {}", .0.len(), .0.join(", "))]
    Checks(Vec<String>),
}

impl From<translab::Error> for CliError {
    fn from(e: translab::Error) -> Self {
        match e {
            translab::Error::Unsupported(m) => CliError::Unsupported(m),
            translab::Error::Parameter(m) => CliError::Config(m),
            other => CliError::Solver(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Checks(_) => 1,
            CliError::Config(_) | CliError::Unsupported(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Unsupported(_) => "unsupported",
            CliError::Solver(_) => "solver",
            CliError::Io(_) => "io",
            CliError::Checks(_) => "checks",
        };
        ErrorReport { kind, message: self.to_string(), exit_code: self.exit_code() }
    }
}
