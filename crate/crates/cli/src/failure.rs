use serde::Serialize;

/// Error reported as a JSON record on stderr, with a matching exit code.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub const CONFIG: u8 = 2;
    pub const SOLVER: u8 = 3;
    pub const INFEASIBLE: u8 = 4;

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: Self::CONFIG,
            kind: "config",
            message: message.into(),
        }
    }

    pub fn config_from(e: ambiform::Error) -> Self {
        Self::config(e.to_string())
    }

    pub fn solver(message: impl Into<String>) -> Self {
        Self {
            code: Self::SOLVER,
            kind: "solver",
            message: message.into(),
        }
    }

    pub fn infeasible(message: impl Into<String>) -> Self {
        Self {
            code: Self::INFEASIBLE,
            kind: "infeasible",
            message: message.into(),
        }
    }

    pub fn io(e: impl std::fmt::Display) -> Self {
        Self::config(format!("output error: {e}"))
    }
}

impl From<ambiform::Error> for Failure {
    fn from(e: ambiform::Error) -> Self {
        use ambiform::Error as E;
        match e {
            E::InvalidArray(_)
            | E::InvalidTarget { .. }
            | E::InvalidScene(_)
            | E::GraphSize { .. }
            | E::TimeBandwidth(_)
            | E::LongRunRequired { .. }
            | E::GridTooLarge { .. }
            | E::InvalidParameter(_) => Self::config_from(e),
            other => Self::solver(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::io(e)
    }
}
