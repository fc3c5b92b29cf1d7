use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TrainError;
use crate::graphmem::GraphInput;
use crate::molgraph::LabeledExample;

/// A labeled graph with its precomputed model input.
#[derive(Debug, Clone)]
pub struct Example {
    /// Position in the source dataset, kept for dumps.
    pub id: usize,
    pub task: usize,
    pub label: u8,
    pub input: GraphInput<f64>,
}

impl Example {
    pub fn new(id: usize, example: &LabeledExample) -> Self {
        Self {
            id,
            task: example.task_id,
            label: example.label,
            input: GraphInput::new(&example.graph),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Splits {
    pub train: Vec<Example>,
    pub validation: Vec<Example>,
    pub test: Vec<Example>,
}

impl Splits {
    pub fn from_parts(train: &[LabeledExample], validation: &[LabeledExample], test: &[LabeledExample]) -> Self {
        let wrap = |xs: &[LabeledExample]| xs.iter().enumerate().map(|(i, e)| Example::new(i, e)).collect();
        Self {
            train: wrap(train),
            validation: wrap(validation),
            test: wrap(test),
        }
    }
}

/// Per-task seeded 80/10/10 split. Validation and test get `⌊n/10⌋` examples
/// each and training the rest; ids are positions in `examples`.
pub fn split_examples(examples: &[LabeledExample], num_tasks: usize, seed: u64) -> Result<Splits, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = Splits::default();
    for task in 0..num_tasks {
        let mut idx: Vec<usize> = (0..examples.len()).filter(|&i| examples[i].task_id == task).collect();
        idx.shuffle(&mut rng);
        let held = idx.len() / 10;
        if held == 0 {
            return Err(TrainError::EmptySplit(format!("task {task} has {} examples, too few to split", idx.len())));
        }
        let (val, rest) = idx.split_at(held);
        let (test, train) = rest.split_at(held);
        let take = |part: &[usize]| part.iter().map(|&i| Example::new(i, &examples[i])).collect::<Vec<_>>();
        splits.validation.extend(take(val));
        splits.test.extend(take(test));
        splits.train.extend(take(train));
    }
    if let Some(e) = examples.iter().find(|e| e.task_id >= num_tasks) {
        return Err(TrainError::TaskId {
            task: e.task_id,
            tasks: num_tasks,
        });
    }
    Ok(splits)
}

/// Drops majority-class examples at random until both classes are equal in size.
pub fn balance_classes(examples: Vec<LabeledExample>, seed: u64) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut neg): (Vec<_>, Vec<_>) = examples.into_iter().enumerate().partition(|(_, e)| e.label == 1);
    let keep = pos.len().min(neg.len());
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    pos.truncate(keep);
    neg.truncate(keep);
    let mut kept: Vec<_> = pos.into_iter().chain(neg).collect();
    kept.sort_by_key(|(i, _)| *i);
    kept.into_iter().map(|(_, e)| e).collect()
}

/// Order of training examples for one epoch, as indices into `tasks`.
///
/// Each task's examples are shuffled without replacement, and the slot each
/// task occupies is drawn by shuffling a multiset holding task `t` exactly
/// `|task t|` times, so batches mix tasks while per-epoch counts stay exact.
pub fn epoch_order<R: rand::Rng + ?Sized>(tasks: &[usize], num_tasks: usize, rng: &mut R) -> Vec<usize> {
    let mut queues: Vec<Vec<usize>> = vec![Vec::new(); num_tasks];
    for (i, &t) in tasks.iter().enumerate() {
        queues[t].push(i);
    }
    for q in &mut queues {
        q.shuffle(rng);
    }
    let mut tags: Vec<usize> = tasks.to_vec();
    tags.shuffle(rng);
    let mut next = vec![0; num_tasks];
    tags.into_iter()
        .map(|t| {
            next[t] += 1;
            queues[t][next[t] - 1]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::MolecularGraph;

    fn ex(task: usize, label: u8) -> LabeledExample {
        let g = MolecularGraph::new(vec!["C".into()], 1, &[]).unwrap();
        LabeledExample { graph: g, task_id: task, label }
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let data: Vec<_> = (0..50).map(|i| ex(i % 2, (i % 3 == 0) as u8)).collect();
        let s = split_examples(&data, 2, 3).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (42, 4, 4));
        let mut ids: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).map(|e| e.id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn tiny_task_cannot_be_split() {
        let data: Vec<_> = (0..5).map(|_| ex(0, 1)).collect();
        assert!(matches!(split_examples(&data, 1, 0), Err(TrainError::EmptySplit(_))));
    }

    #[test]
    fn balancing_keeps_minority() {
        let data: Vec<_> = (0..10).map(|i| ex(0, (i < 3) as u8)).collect();
        let b = balance_classes(data, 1);
        assert_eq!(b.len(), 6);
        assert_eq!(b.iter().filter(|e| e.label == 1).count(), 3);
    }

    #[test]
    fn epoch_order_is_a_permutation() {
        let tasks = [0, 0, 1, 2, 2, 2, 1];
        let order = epoch_order(&tasks, 3, &mut ChaCha8Rng::seed_from_u64(4));
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..7).collect::<Vec<_>>());
    }
}
