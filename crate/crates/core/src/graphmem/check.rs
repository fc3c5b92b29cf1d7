//! Certifies tape gradients of the full model against central differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GraphInput, GraphMem, ModelConfig, ModelDims, ModelError, ModelParams, NeighborWeights, Query};
use crate::molgraph::MolecularGraph;
use crate::numerics::{finite_difference_gradient, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub graphs: usize,
    pub max_nodes: usize,
    pub relations: usize,
    pub hops: usize,
    pub hidden: usize,
    pub eps: f64,
    pub neighbor_weights: NeighborWeights,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            graphs: 5,
            max_nodes: 8,
            relations: 3,
            hops: 3,
            hidden: 8,
            eps: 1e-5,
            neighbor_weights: NeighborWeights::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Parameter holding the worst coordinate.
    pub worst_parameter: String,
    pub parameters: usize,
}

const NODE_DIM: usize = 4;
const LINK_DIM: usize = 2;
const TASKS: usize = 2;

/// Connected random graph with real-valued node and link features.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, nodes: usize, relations: usize, node_dim: usize, link_dim: usize) -> MolecularGraph {
    let mut pairs = std::collections::BTreeMap::new();
    for i in 1..nodes {
        pairs.insert((rng.gen_range(0..i), i), rng.gen_range(1..=relations));
    }
    for _ in 0..nodes / 2 {
        let (a, b) = (rng.gen_range(0..nodes), rng.gen_range(0..nodes));
        if a != b {
            pairs.entry((a.min(b), a.max(b))).or_insert_with(|| rng.gen_range(1..=relations));
        }
    }
    let bonds: Vec<_> = pairs.into_iter().map(|((i, j), r)| (i, j, r)).collect();
    let x: Vec<f64> = (0..nodes * node_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let links = (0..bonds.len())
        .map(|_| (0..link_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    MolecularGraph::new(vec!["C".into(); nodes], relations, &bonds)
        .and_then(|g| g.with_features(Tensor::from_vec(nodes, node_dim, x).expect("sized"), links))
        .expect("generated graph is valid")
}

/// Compares exact and finite-difference gradients of the cross-entropy loss on
/// `graphs` seeded random graphs, each with fresh random parameters.
pub fn gradient_check(seed: u64, options: &GradCheckOptions) -> Result<GradCheckReport, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = ModelDims {
        query: TASKS,
        node: NODE_DIM,
        link: LINK_DIM,
        relations: options.relations,
        memory: options.hidden,
        controller: options.hidden,
    };
    let config = ModelConfig {
        hops: options.hops,
        neighbor_weights: options.neighbor_weights,
        dropout: 0.0,
        ..ModelConfig::default()
    };
    let mut worst = (0.0, String::new());
    for _ in 0..options.graphs {
        let nodes = rng.gen_range(2..=options.max_nodes.max(2));
        let graph = random_graph(&mut rng, nodes, options.relations, NODE_DIM, LINK_DIM);
        let input = GraphInput::<f64>::new(&graph);
        let mut params = ModelParams::init(dims, &mut rng);
        // Nonzero biases so every bias gradient is exercised away from zero.
        for t in params.tensors_mut() {
            for v in t.as_mut_slice() {
                *v += rng.gen_range(-0.2..0.2);
            }
        }
        let query = Query::one_hot(rng.gen_range(0..TASKS), TASKS);
        let label = rng.gen_range(0..=1u8);

        let model = GraphMem::new(params, config);
        let (_, _, exact) = model.loss_and_gradients(&input, &query, label, None)?;
        let mut failure = None;
        let estimate = finite_difference_gradient(model.params.tensors(), options.eps, |probe| {
            let p = ModelParams::from_tensors(dims, probe.to_vec()).expect("same shapes");
            GraphMem::new(p, config).loss(&input, &query, label).unwrap_or_else(|e| {
                failure = Some(e);
                f64::NAN
            })
        });
        if let Some(e) = failure {
            return Err(e);
        }
        for ((name, a), b) in model.params.names().into_iter().zip(&exact).zip(&estimate) {
            for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
                let err = (x - y).abs() / y.abs().max(1.0);
                if err > worst.0 || err.is_nan() {
                    worst = (err, name.clone());
                }
            }
        }
    }
    Ok(GradCheckReport {
        max_relative_error: worst.0,
        worst_parameter: worst.1,
        parameters: dims.param_count(),
    })
}
