use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const VALIDATION: u8 = 2;
    pub const NUMERICAL: u8 = 3;
    pub const DISAGREEMENT: u8 = 4;
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Validation(String),

    #[error("{message}")]
    Numerical { code: &'static str, message: String },

    #[error("{0}")]
    Disagreement(String),

    #[error(transparent)]
    Core(#[from] apsis_core::Error),

    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn code(&self) -> &'static str {
        match self {
            RunError::Validation(_) => "VALIDATION",
            RunError::Numerical { code, .. } => code,
            RunError::Disagreement(_) => "ROUTE_DISAGREEMENT",
            RunError::Core(e) => e.code(),
            RunError::Io(_) => "IO",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Validation(_) => exit::VALIDATION,
            RunError::Disagreement(_) => exit::DISAGREEMENT,
            RunError::Core(e) => match e.code() {
                "INVALID_PARAMETER" | "ORBIT_RANGE" | "UNSUPPORTED" | "NO_BOUND_ORBIT" | "CIRCULAR_DEGENERATE"
                | "TARGET_OUT_OF_RANGE" => exit::VALIDATION,
                "ROUTE_DISAGREEMENT" => exit::DISAGREEMENT,
                _ => exit::NUMERICAL,
            },
            RunError::Numerical { .. } | RunError::Io(_) => exit::NUMERICAL,
        }
    }
}
