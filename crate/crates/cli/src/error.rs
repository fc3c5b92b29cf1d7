use std::fmt;
use std::path::Path;

use graphmem::kv::KvError;
use graphmem::numerics::CheckpointError;
use graphmem::training::TrainError;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Other = 1,
    Config = 2,
    Data = 3,
    Numeric = 4,
    Checkpoint = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Config, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Data, message)
    }

    pub fn other(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Other, message)
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<KvError> for CliError {
    fn from(e: KvError) -> Self {
        Self::config(format!("config: {e}"))
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        let kind = match &e {
            _ if e.is_numeric() => ExitKind::Numeric,
            TrainError::Config(_) => ExitKind::Config,
            TrainError::Pool(_) => ExitKind::Other,
            _ => ExitKind::Data,
        };
        Self::new(kind, e.to_string())
    }
}

pub fn checkpoint_error(path: &Path, e: CheckpointError) -> CliError {
    let kind = match e {
        CheckpointError::Io(_) => ExitKind::Data,
        _ => ExitKind::Checkpoint,
    };
    CliError::new(kind, format!("{}: {e}", path.display()))
}

pub fn read_input(path: &Path, kind: ExitKind) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::new(kind, format!("{}: {e}", path.display())))
}

pub fn write_output(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::other(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::other(format!("{}: {e}", path.display())))
}
