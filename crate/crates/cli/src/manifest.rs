use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::DatasetRecord;
use crate::error::{read_input, write_output, CliError, ExitKind};

/// Everything needed to repeat a training run: `train --manifest` reloads the
/// config from here and refuses to run if any dataset file changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub library_version: String,
    /// Resolved config in `key=value` form.
    pub config: String,
    pub seed: u64,
    pub datasets: Vec<DatasetRecord>,
    /// Artifact kind to path.
    pub artifacts: BTreeMap<String, String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = read_input(path, ExitKind::Config)?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_output(path, json + "\n")
    }

    /// Fails unless `loaded` names the same files with the same contents.
    pub fn check_datasets(&self, loaded: &[DatasetRecord]) -> Result<(), CliError> {
        let expected = self.datasets.iter().flat_map(|d| &d.files);
        let found: Vec<_> = loaded.iter().flat_map(|d| &d.files).collect();
        if self.datasets.len() != loaded.len() || expected.clone().count() != found.len() {
            return Err(CliError::data("dataset roster differs from the manifest"));
        }
        for (a, b) in expected.zip(found) {
            if a.path != b.path {
                return Err(CliError::data(format!("dataset file {} differs from manifest entry {}", b.path, a.path)));
            }
            if a.sha256 != b.sha256 {
                return Err(CliError::data(format!("{}: contents differ from the manifest checksum", a.path)));
            }
        }
        Ok(())
    }
}
