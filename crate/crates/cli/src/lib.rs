//! Experiment harness around `vwlb-core`: config parsing, coverage grids,
//! seed manifests and CSV/SVG reports.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{ConfigError, ExperimentConfig, GridPoint, ModelKind, RawConfig};
pub use experiment::{run_experiment, ArtifactManifest, PointStatus};
pub use report::{emit_report, ReportFormat};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(ConfigError),
    #[error(transparent)]
    Core(#[from] vwlb_core::Error),
    #[error("{}: {err}", path.display())]
    Io { path: PathBuf, err: std::io::Error },
    #[error("file not found; expected {}", list_paths(expected))]
    MissingInputs { expected: Vec<PathBuf> },
}

fn list_paths(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::Config(e)
    }
}

impl Error {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), err }
    }
}

/// Writes `contents` to a sibling temporary file and renames it into place,
/// so readers never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Error> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
