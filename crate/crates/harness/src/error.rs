use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },
    #[error("instance: {0}")]
    Instance(pdbundle::Error),
    #[error("solver: {0}")]
    Solver(#[from] pdbundle::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config { line: None, msg: msg.into() }
    }

    pub fn config_at(line: usize, msg: impl Into<String>) -> Self {
        HarnessError::Config { line: Some(line), msg: msg.into() }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), source }
    }
}
