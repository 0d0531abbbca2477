use std::fmt;
use std::process::ExitCode;

/// Failure classes with stable exit codes.
#[derive(Debug)]
pub enum Failure {
    BadInput(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::BadInput(_) => ExitCode::from(2),
            Failure::Numerical(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::BadInput(m) => write!(f, "bad input: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<wstate::Error> for Failure {
    fn from(e: wstate::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::BadInput(e.to_string())
        }
    }
}

pub fn bad(msg: impl Into<String>) -> Failure {
    Failure::BadInput(msg.into())
}
