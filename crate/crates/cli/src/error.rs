use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fockcx_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use fockcx_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(E::Capacity(_)) => EXIT_CAPACITY,
            CliError::Core(E::InvalidArgument(_) | E::InvalidFilling(_) | E::SectorMismatch(_)) => EXIT_CONFIG,
            CliError::Core(_) => EXIT_NUMERICAL,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => EXIT_OTHER,
        }
    }
}
