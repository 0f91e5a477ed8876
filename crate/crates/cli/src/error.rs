use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Convergence(_) => 4,
            CliError::Io(_) => 5,
            CliError::ValidationFailed(_) => 6,
        }
    }
}

impl From<sqzengine_core::Error> for CliError {
    fn from(e: sqzengine_core::Error) -> Self {
        if e.is_infeasibility() {
            CliError::Infeasible(e.to_string())
        } else if e.is_convergence() {
            CliError::Convergence(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sqzengine_core::Error;

    #[test]
    fn core_errors_map_to_exit_classes() {
        let cases = [
            (Error::AmbiguousBracket { grid: vec![(0.0, 1.0)] }, 4),
            (Error::Quadrature { tol: 1e-12, diff: 1e-3 }, 4),
            (Error::TruncationInfeasible { what: "x".into(), required: 16, dim: 8 }, 3),
            (Error::Divergence { t: 1.0 }, 3),
            (Error::InvalidBath("gamma".into()), 2),
        ];
        for (e, want) in cases {
            assert_eq!(CliError::from(e).exit_code(), want);
        }
        let io = std::io::Error::new(std::io::ErrorKind::Other, "disk");
        assert_eq!(CliError::from(io).exit_code(), 5);
        assert_eq!(CliError::ValidationFailed(String::new()).exit_code(), 6);
    }
}
