use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    /// A required input (such as a sieved table) is missing and building it was disabled.
    #[error("missing dependency: {0}")]
    Dependency(String),

    #[error(transparent)]
    Core(#[from] zeta_ratios::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn io_context(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// Exit status for verification failures.
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use zeta_ratios::Error as E;
        match self {
            CliError::Config(_) | CliError::Dependency(_) | CliError::Json(_) => EXIT_CONFIG,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Pool(_) => EXIT_RESOURCE,
            CliError::Core(e) => match e {
                E::Resource { .. } | E::Io(_) => EXIT_RESOURCE,
                E::Numerical(_) | E::Truncation(_) => EXIT_VERIFICATION,
                _ => EXIT_CONFIG,
            },
        }
    }
}
