use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::MolecularGraph;

/// A graph with its task and binary activity label (`1` = active).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub graph: MolecularGraph,
    pub task_id: usize,
    pub label: u8,
}

/// One row of a label file `id,task,label`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub id: String,
    pub task: String,
    pub label: u8,
}

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("label file: {0}")]
    Csv(#[from] csv::Error),
    #[error("label file header must be `id,task,label`, found `{0}`")]
    Header(String),
    #[error("label file row {row}: label {label} is not 0 or 1")]
    Label { row: usize, label: u8 },
}

pub fn parse_labels_csv(text: &str) -> Result<Vec<LabelRow>, LabelError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != ["id", "task", "label"] {
        return Err(LabelError::Header(header.join(",")));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<LabelRow>().enumerate() {
        let row = rec?;
        if row.label > 1 {
            return Err(LabelError::Label { row: i + 2, label: row.label });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_labels_csv(rows: &[LabelRow]) -> Result<String, LabelError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| LabelError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_rows() {
        let rows = parse_labels_csv("id,task,label\n0,aids,1\n1, aids ,0\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].task, "aids");
        assert_eq!(write_labels_csv(&rows).unwrap(), "id,task,label\n0,aids,1\n1,aids,0\n");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_labels_csv("a,b,c\n"), Err(LabelError::Header(_))));
        assert!(matches!(parse_labels_csv("id,task,label\n0,t,2\n"), Err(LabelError::Label { row: 2, label: 2 })));
        assert!(parse_labels_csv("id,task,label\n0,t,x\n").is_err());
    }
}
