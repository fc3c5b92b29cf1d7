use std::sync::Arc;

use crate::molgraph::MolecularGraph;
use crate::numerics::{Scalar, Tensor};

/// Task-indicator vector fed to the controller at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query<S> {
    values: Vec<S>,
}

impl<S: Scalar> Query<S> {
    /// Constant query for single-task training: all ones.
    pub fn constant(len: usize) -> Self {
        Self {
            values: vec![S::one(); len],
        }
    }

    /// One-hot query selecting `task` among `tasks`.
    pub fn one_hot(task: usize, tasks: usize) -> Self {
        assert!(task < tasks, "task {task} outside 0..{tasks}");
        let mut values = vec![S::zero(); tasks];
        values[task] = S::one();
        Self { values }
    }

    pub fn from_values(values: Vec<S>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn as_row(&self) -> Tensor<S> {
        Tensor::row(self.values.clone())
    }
}

/// Neighbors under one relation in compressed-row form: the entries of node
/// `i` are `offsets[i]..offsets[i + 1]`, one per `j ∈ N_r(i)`, ascending in `j`.
#[derive(Debug, Clone)]
pub struct RelationIndex<S> {
    pub offsets: Arc<[usize]>,
    pub neighbors: Arc<[usize]>,
    /// `1 / |N_r(i)|` per entry.
    pub uniform: Tensor<S>,
    /// `b^{ij}` per entry.
    pub links: Tensor<S>,
}

/// Per-graph constants consumed by the model, computed once per example.
#[derive(Debug, Clone)]
pub struct GraphInput<S> {
    pub(crate) features: Tensor<S>,
    pub(crate) relations: Vec<Option<RelationIndex<S>>>,
    pub(crate) link_dim: usize,
}

impl<S: Scalar> GraphInput<S> {
    pub fn new(graph: &MolecularGraph) -> Self {
        let m = graph.num_nodes();
        let link_dim = graph.link_dim();
        let relations = (1..=graph.num_relations())
            .map(|r| {
                let mut offsets = Vec::with_capacity(m + 1);
                let mut neighbors = Vec::new();
                let mut uniform = Vec::new();
                let mut links = Vec::new();
                offsets.push(0);
                for i in 0..m {
                    let list = graph.neighbors_by_relation(r, i);
                    let w = if list.is_empty() { S::zero() } else { S::one() / S::of(list.len() as f64) };
                    for &(j, e) in list {
                        neighbors.push(j);
                        uniform.push(w);
                        links.extend(graph.edges()[e].features.iter().map(|&v| S::of(v)));
                    }
                    offsets.push(neighbors.len());
                }
                if neighbors.is_empty() {
                    return None;
                }
                let nnz = neighbors.len();
                Some(RelationIndex {
                    offsets: offsets.into(),
                    neighbors: neighbors.into(),
                    uniform: Tensor::column(uniform),
                    links: Tensor::from_vec(nnz, link_dim, links).expect("uniform link width"),
                })
            })
            .collect();
        Self {
            features: graph.node_features().cast(),
            relations,
            link_dim,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn node_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn relation(&self, r: usize) -> Option<&RelationIndex<S>> {
        self.relations.get(r).and_then(Option::as_ref)
    }
}
