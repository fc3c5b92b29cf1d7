use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::PROB_CLAMP;

/// Scores at or above this are predicted active.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("{scores} scores, {labels} labels and {tasks} task ids")]
    Length { scores: usize, labels: usize, tasks: usize },
    #[error("task {0} has no examples")]
    EmptyTask(usize),
    #[error("task id {task} outside 0..{tasks}")]
    TaskId { task: usize, tasks: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    fn merge(&mut self, o: &Confusion) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.tn += o.tn;
    }

    /// `2TP / (2TP + FP + FN)`, 0 when there are no positives either way.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 || self.tp == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.tp + self.fp + self.fn_ + self.tn;
        if n == 0 {
            0.0
        } else {
            (self.tp + self.tn) as f64 / n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task: usize,
    pub examples: usize,
    pub positives: usize,
    pub confusion: Confusion,
    pub f1: f64,
    pub accuracy: f64,
    /// Absent when only one class is present.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_task: Vec<TaskMetrics>,
    pub micro_f1: f64,
    pub macro_f1: f64,
    /// Mean over tasks with a defined AUC.
    pub average_auc: Option<f64>,
}

impl MetricsReport {
    pub fn min_accuracy(&self) -> f64 {
        self.per_task.iter().map(|t| t.accuracy).fold(f64::INFINITY, f64::min)
    }
}

/// Twice the number of correctly ordered (positive, negative) pairs plus the
/// number of tied pairs, and the pair count.
pub fn auc_counts(scores: &[f64], labels: &[u8]) -> (u64, u64) {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let (mut half_units, mut negatives_below) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let pos = order[i..j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        let neg = (j - i) as u64 - pos;
        half_units += pos * (2 * negatives_below + neg);
        negatives_below += neg;
        i = j;
    }
    let positives = labels.iter().filter(|&&l| l == 1).count() as u64;
    let negatives = labels.len() as u64 - positives;
    (half_units, positives * negatives)
}

/// Rank-statistic AUC with ties counted one half; `None` for a single class.
pub fn auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let (half_units, pairs) = auc_counts(scores, labels);
    (pairs > 0).then(|| half_units as f64 / (2 * pairs) as f64)
}

pub fn compute_metrics(scores: &[f64], labels: &[u8], task_ids: &[usize], num_tasks: usize) -> Result<MetricsReport, MetricsError> {
    if scores.len() != labels.len() || labels.len() != task_ids.len() {
        return Err(MetricsError::Length {
            scores: scores.len(),
            labels: labels.len(),
            tasks: task_ids.len(),
        });
    }
    if let Some(&task) = task_ids.iter().find(|&&t| t >= num_tasks) {
        return Err(MetricsError::TaskId { task, tasks: num_tasks });
    }
    let mut pooled = Confusion::default();
    let mut per_task = Vec::with_capacity(num_tasks);
    for task in 0..num_tasks {
        let idx: Vec<usize> = (0..scores.len()).filter(|&i| task_ids[i] == task).collect();
        if idx.is_empty() {
            return Err(MetricsError::EmptyTask(task));
        }
        let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
        let l: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
        let mut confusion = Confusion::default();
        for (&p, &y) in s.iter().zip(&l) {
            confusion.add(p >= THRESHOLD, y == 1);
        }
        pooled.merge(&confusion);
        let auc = auc(&s, &l);
        if auc.is_none() {
            log::warn!("task {task}: only one class present, AUC undefined");
        }
        per_task.push(TaskMetrics {
            task,
            examples: idx.len(),
            positives: l.iter().filter(|&&y| y == 1).count(),
            f1: confusion.f1(),
            accuracy: confusion.accuracy(),
            confusion,
            auc,
        });
    }
    let macro_f1 = per_task.iter().map(|t| t.f1).sum::<f64>() / num_tasks as f64;
    let aucs: Vec<f64> = per_task.iter().filter_map(|t| t.auc).collect();
    let average_auc = (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64);
    Ok(MetricsReport {
        per_task,
        micro_f1: pooled.f1(),
        macro_f1,
        average_auc,
    })
}

/// Batch-mean cross-entropy with probabilities clamped to `[1e-12, 1 − 1e-12]`.
pub fn mean_cross_entropy(probs: &[f64], labels: &[u8]) -> f64 {
    assert_eq!(probs.len(), labels.len(), "one label per probability");
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| crate::numerics::cross_entropy(p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP), f64::from(y)))
        .sum();
    total / probs.len() as f64
}
