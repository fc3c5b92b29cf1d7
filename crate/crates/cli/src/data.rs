//! Dataset resolution. A task named `t` is read from `<data_dir>/t/molecules.sdf`
//! with labels in `<data_dir>/t/labels.csv`, or generated from `<data_dir>/t.spec`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use graphmem::fingerprint::fnv1a64;
use graphmem::molgraph::{featurize, parse_labels_csv, parse_sdf, generate_synthetic, LabeledExample, SyntheticSpec, Vocabulary};
use graphmem::training::{balance_classes, ExperimentConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{read_input, CliError, ExitKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChecksum {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub task: String,
    pub files: Vec<FileChecksum>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn checksum(path: &Path, text: &str) -> FileChecksum {
    FileChecksum {
        path: path.display().to_string(),
        sha256: sha256_hex(text.as_bytes()),
    }
}

fn data_dir(config: &ExperimentConfig) -> PathBuf {
    PathBuf::from(config.data_dir.as_deref().unwrap_or("."))
}

/// Loads every task of the roster; task ids follow roster order.
pub fn load_roster(config: &ExperimentConfig) -> Result<(Vec<LabeledExample>, Vec<DatasetRecord>), CliError> {
    if config.tasks.is_empty() {
        return Err(CliError::config("no tasks given (set `tasks` or pass --task)"));
    }
    let root = data_dir(config);
    let mut examples = Vec::new();
    let mut records = Vec::new();
    for (id, name) in config.tasks.iter().enumerate() {
        let dir = root.join(name);
        let spec = root.join(format!("{name}.spec"));
        let (mut task, files) = if dir.is_dir() {
            let (task, files) = load_sdf_task(&dir, name)?;
            if config.balance {
                (balance_classes(task, config.seed), files)
            } else {
                (task, files)
            }
        } else if spec.is_file() {
            load_spec_task(&spec, fnv1a64(&[config.seed, id as u64]))?
        } else {
            return Err(CliError::data(format!(
                "task `{name}`: neither {} nor {} exists",
                dir.display(),
                spec.display()
            )));
        };
        for e in &mut task {
            e.task_id = id;
        }
        log::info!("task {id} `{name}`: {} examples, {} active", task.len(), task.iter().filter(|e| e.label == 1).count());
        examples.extend(task);
        records.push(DatasetRecord { task: name.clone(), files });
    }
    Ok((examples, records))
}

fn load_sdf_task(dir: &Path, name: &str) -> Result<(Vec<LabeledExample>, Vec<FileChecksum>), CliError> {
    let sdf_path = dir.join("molecules.sdf");
    let labels_path = dir.join("labels.csv");
    let sdf = read_input(&sdf_path, ExitKind::Data)?;
    let labels = read_input(&labels_path, ExitKind::Data)?;
    let records = parse_sdf(&sdf).map_err(|e| CliError::data(format!("{}: {e}", sdf_path.display())))?;
    let rows = parse_labels_csv(&labels).map_err(|e| CliError::data(format!("{}: {e}", labels_path.display())))?;

    // Records are matched by title, or by 0-based position when titles are blank.
    let mut by_id = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        let key = if r.title.is_empty() { i.to_string() } else { r.title.clone() };
        by_id.insert(key, i);
    }
    let vocab = Vocabulary::default();
    let mut out = Vec::new();
    for row in rows.iter().filter(|r| r.task == name) {
        let &i = by_id.get(&row.id).ok_or_else(|| {
            CliError::data(format!("{}: no molecule with id `{}` in {}", labels_path.display(), row.id, sdf_path.display()))
        })?;
        out.push(LabeledExample {
            graph: featurize(&records[i].graph, &vocab),
            task_id: 0,
            label: row.label,
        });
    }
    if out.is_empty() {
        return Err(CliError::data(format!("{}: no labels for task `{name}`", labels_path.display())));
    }
    Ok((out, vec![checksum(&sdf_path, &sdf), checksum(&labels_path, &labels)]))
}

fn load_spec_task(path: &Path, seed: u64) -> Result<(Vec<LabeledExample>, Vec<FileChecksum>), CliError> {
    let text = read_input(path, ExitKind::Data)?;
    let spec = SyntheticSpec::parse(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let examples = generate_synthetic(&spec, seed).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok((examples, vec![checksum(path, &text)]))
}
