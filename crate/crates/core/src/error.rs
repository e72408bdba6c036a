use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("no feasible path")]
    NoFeasiblePath,
    #[error("timing error: period {period_ms} ms is shorter than active time {active_ms} ms")]
    Timing { period_ms: f64, active_ms: f64 },
    #[error("load error: {0}")]
    Load(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    /// I/O failure on `path`, keeping the error kind.
    pub(crate) fn io_at(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
        move |e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        }
    }

    /// Reads a configuration file; failures count as configuration errors.
    pub(crate) fn read_config(path: &std::path::Path) -> Result<String> {
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// True for errors caused by how the caller configured or invoked an
    /// operation, as opposed to problems with the data itself.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::Usage(_) | Error::Config(_) | Error::Timing { .. }
        )
    }
}
