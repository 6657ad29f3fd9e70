use std::fmt;
use std::path::Path;
use std::process::ExitCode;

/// Failure of a subcommand. Exit 1 means the inputs were read but rejected
/// (violations, infeasible targets, dangling references); exit 2 means
/// they could not be read or written at all.
#[derive(Debug)]
pub enum Failure {
    Rejected(String),
    Io(String),
}

impl Failure {
    pub fn rejected(msg: impl fmt::Display) -> Self {
        Failure::Rejected(msg.to_string())
    }

    pub fn io(msg: impl fmt::Display) -> Self {
        Failure::Io(msg.to_string())
    }

    /// I/O or format error tied to a file.
    pub fn file(path: &Path, err: impl fmt::Display) -> Self {
        Failure::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Rejected(_) => ExitCode::from(1),
            Failure::Io(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Rejected(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;
