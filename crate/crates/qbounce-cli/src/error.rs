use std::fmt;

/// CLI-level failures, split by exit code: configuration and data problems
/// exit 2, numerical failures exit 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Io(String),
    Numerical(qbounce::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Data(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Io(_) => "io",
            CliError::Numerical(_) => "numerical",
        }
    }

    /// One machine-readable line for standard error.
    pub fn machine_line(&self) -> String {
        let detail = match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Io(m) => m.clone(),
            CliError::Numerical(e) => e.to_string(),
        };
        format!(
            "error kind={} exit={} detail={:?}",
            self.kind(),
            self.exit_code(),
            detail
        )
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qbounce::Error> for CliError {
    fn from(e: qbounce::Error) -> Self {
        CliError::Numerical(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
