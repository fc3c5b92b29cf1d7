use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::{compute_metrics, epoch_order, Adam, Example, ExperimentConfig, MetricsError, MetricsReport, Mode, OptimError, Splits};
use crate::fingerprint::fnv1a64;
use crate::graphmem::{GraphMem, ModelDims, ModelError, ModelParams, Query};
use crate::kv::KvError;
use crate::numerics::Tensor;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] KvError),
    #[error("empty split: {0}")]
    EmptySplit(String),
    #[error("task id {task} outside the roster of {tasks} tasks")]
    TaskId { task: usize, tasks: usize },
    #[error("inconsistent datasets: {0}")]
    Dims(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("non-finite training loss in epoch {0}")]
    NonFiniteLoss(usize),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl TrainError {
    /// Numeric failures (as opposed to bad input or configuration).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Self::NonFiniteLoss(_) | Self::Optim(OptimError::NonFinite { .. }))
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub average_auc: Option<f64>,
}

impl fmt::Display for EpochRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{:.6}\t{:.4}\t{:.4}\t",
            self.epoch, self.train_loss, self.micro_f1, self.macro_f1
        )?;
        match self.average_auc {
            Some(a) => write!(f, "{a:.4}"),
            None => f.write_str("NA"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GraphMem<f64>,
    /// Epoch (1-based) whose parameters were kept.
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub validation: MetricsReport,
    pub test: MetricsReport,
}

pub fn query_for(mode: Mode, task: usize, num_tasks: usize) -> Query<f64> {
    match mode {
        Mode::Single => Query::constant(1),
        Mode::Multi => Query::one_hot(task, num_tasks),
    }
}

/// Model dimensions implied by the data and the hidden sizes in `config`.
pub fn infer_dims(examples: &[&Example], config: &ExperimentConfig, num_tasks: usize) -> Result<ModelDims, TrainError> {
    let first = examples.first().ok_or_else(|| TrainError::EmptySplit("no examples".into()))?;
    let node = first.input.node_dim();
    let relations = examples.iter().map(|e| e.input.num_relations()).max().unwrap_or(0);
    let mut link = None;
    for e in examples {
        if e.input.node_dim() != node {
            return Err(TrainError::Dims(format!("node feature widths {node} and {}", e.input.node_dim())));
        }
        if (0..e.input.num_relations()).any(|r| e.input.relation(r).is_some()) {
            match link {
                None => link = Some(e.input.link_dim),
                Some(l) if l != e.input.link_dim => {
                    return Err(TrainError::Dims(format!("link feature widths {l} and {}", e.input.link_dim)))
                }
                Some(_) => {}
            }
        }
    }
    Ok(ModelDims {
        query: match config.mode {
            Mode::Single => 1,
            Mode::Multi => num_tasks,
        },
        node,
        link: link.unwrap_or(0),
        relations,
        memory: config.memory_size,
        controller: config.controller_size,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, TrainError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| TrainError::Pool(e.to_string()))
}

/// Inference-mode probabilities, in input order.
pub fn predict_all(model: &GraphMem<f64>, examples: &[Example], mode: Mode, num_tasks: usize, workers: usize) -> Result<Vec<f64>, TrainError> {
    let run = || {
        examples
            .par_iter()
            .map(|e| model.predict(&e.input, &query_for(mode, e.task, num_tasks)))
            .collect::<Result<Vec<_>, _>>()
    };
    Ok(pool(workers)?.install(run)?)
}

pub fn evaluate(model: &GraphMem<f64>, examples: &[Example], mode: Mode, num_tasks: usize, workers: usize) -> Result<(Vec<f64>, MetricsReport), TrainError> {
    let probs = predict_all(model, examples, mode, num_tasks, workers)?;
    let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
    let tasks: Vec<usize> = examples.iter().map(|e| e.task).collect();
    let report = compute_metrics(&probs, &labels, &tasks, num_tasks)?;
    Ok((probs, report))
}

/// Trains with Adam on per-example gradients averaged over each batch, keeping
/// the parameters with the best validation average AUC. `on_epoch` sees every
/// epoch's record as soon as it is computed.
pub fn train(
    splits: &Splits,
    num_tasks: usize,
    config: &ExperimentConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    for (name, part) in [("train", &splits.train), ("validation", &splits.validation), ("test", &splits.test)] {
        if part.is_empty() {
            return Err(TrainError::EmptySplit(name.into()));
        }
        if let Some(e) = part.iter().find(|e| e.task >= num_tasks) {
            return Err(TrainError::TaskId {
                task: e.task,
                tasks: num_tasks,
            });
        }
    }
    let all: Vec<&Example> = splits.train.iter().chain(&splits.validation).chain(&splits.test).collect();
    let dims = infer_dims(&all, config, num_tasks)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = GraphMem::new(ModelParams::init(dims, &mut init_rng), config.model_config());
    let mut opt = Adam::new(config.optimizer, model.params.names(), model.params.tensors());
    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0f0e_d0c5);
    let train_tasks: Vec<usize> = splits.train.iter().map(|e| e.task).collect();
    let pool = pool(config.workers)?;

    let mut best: Option<(f64, usize, ModelParams<f64>)> = None;
    let mut history = Vec::new();
    for epoch in 1..=config.max_epochs {
        let order = epoch_order(&train_tasks, num_tasks, &mut order_rng);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let results = pool.install(|| {
                batch
                    .par_iter()
                    .enumerate()
                    .map(|(k, &i)| {
                        let e = &splits.train[i];
                        let salt = [config.seed, epoch as u64, (b * config.batch_size + k) as u64];
                        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(&salt));
                        model.loss_and_gradients(&e.input, &query_for(config.mode, e.task, num_tasks), e.label, Some(&mut rng))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })?;
            let mut grads: Vec<Tensor<f64>> = model.params.tensors().iter().map(|t| Tensor::zeros(t.rows(), t.cols())).collect();
            for (loss, _, g) in &results {
                loss_sum += loss;
                for (acc, gi) in grads.iter_mut().zip(g) {
                    acc.add_assign(gi).expect("gradient shapes match parameters");
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grads {
                *g = g.scale(scale);
            }
            opt.step(model.params.tensors_mut(), &grads)?;
        }
        let train_loss = loss_sum / order.len() as f64;
        if !train_loss.is_finite() {
            return Err(TrainError::NonFiniteLoss(epoch));
        }

        let (_, val) = evaluate(&model, &splits.validation, config.mode, num_tasks, config.workers)?;
        let record = EpochRecord {
            epoch,
            train_loss,
            micro_f1: val.micro_f1,
            macro_f1: val.macro_f1,
            average_auc: val.average_auc,
        };
        on_epoch(&record);
        history.push(record);

        let score = val.average_auc.unwrap_or(f64::NEG_INFINITY);
        match &best {
            Some((s, _, _)) if score <= *s => {}
            _ => best = Some((score, epoch, model.params.clone())),
        }
        let best_epoch = best.as_ref().map_or(epoch, |b| b.1);
        if epoch - best_epoch >= config.patience {
            break;
        }
    }

    let (_, best_epoch, params) = best.ok_or_else(|| TrainError::EmptySplit("max_epochs is 0".into()))?;
    model.params = params;
    let (_, validation) = evaluate(&model, &splits.validation, config.mode, num_tasks, config.workers)?;
    let (_, test) = evaluate(&model, &splits.test, config.mode, num_tasks, config.workers)?;
    Ok(TrainOutcome {
        model,
        best_epoch,
        history,
        validation,
        test,
    })
}
