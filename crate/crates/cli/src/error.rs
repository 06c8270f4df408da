use std::fmt;
use std::process::ExitCode;

/// A failure, classified by the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<mixren::Error> for CliError {
    fn from(e: mixren::Error) -> Self {
        use mixren::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParameter(_) | E::UnsupportedVariant(_) | E::PartitionCap { .. } | E::MomentUndefined(_) => {
                CliError::Usage(msg)
            }
            E::Data(_) => CliError::Data(msg),
            E::NonConvergence { .. }
            | E::IllConditioned { .. }
            | E::DivergentIntegrand(_)
            | E::HorizonNotReached { .. }
            | E::Optimization(_) => CliError::Numerical(msg),
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
