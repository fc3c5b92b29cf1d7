mod common;

use graphmem::graphmem::{
    random_graph, Embedding, GraphInput, GraphMem, ModelConfig, ModelDims, ModelParams, NeighborWeights, Query, Slot,
};
use graphmem::molgraph::MolecularGraph;
use graphmem::numerics::Tensor;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OPEN: f64 = 1e4;

fn dims(relations: usize) -> ModelDims {
    ModelDims {
        query: 2,
        node: 4,
        link: 2,
        relations,
        memory: 5,
        controller: 6,
    }
}

fn random_model(seed: u64, relations: usize, hops: usize, weights: NeighborWeights) -> GraphMem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ModelParams::init(dims(relations), &mut rng);
    for t in p.tensors_mut() {
        for v in t.as_mut_slice() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    GraphMem::new(
        p,
        ModelConfig {
            hops,
            neighbor_weights: weights,
            ..ModelConfig::default()
        },
    )
}

fn weights_strategy() -> impl Strategy<Value = NeighborWeights> {
    prop_oneof![Just(NeighborWeights::Uniform), Just(NeighborWeights::Learned)]
}

/// Parameters under which one hop is a uniform mean over neighbors.
fn mean_aggregation_model(k: usize, hops: usize) -> GraphMem<f64> {
    let d = ModelDims {
        query: 1,
        node: k,
        link: 2,
        relations: 1,
        memory: k,
        controller: 3,
    };
    let mut p = ModelParams::init(d, &mut ChaCha8Rng::seed_from_u64(99));
    for s in [Slot::MemW, Slot::MemU, Slot::MemB, Slot::MemGateW, Slot::MemGateU, Slot::MemGateRel(0)] {
        let (r, c) = d.shape(s);
        *p.get_mut(s) = Tensor::zeros(r, c);
    }
    *p.get_mut(Slot::MemGateB) = Tensor::filled(1, k, OPEN);
    let mut v = Tensor::zeros(k, k + 2);
    for i in 0..k {
        v[(i, i)] = 1.0;
    }
    *p.get_mut(Slot::MemRel(0)) = v;
    GraphMem::new(
        p,
        ModelConfig {
            hops,
            embedding: Embedding::Raw,
            ..ModelConfig::default()
        },
    )
}

fn nonnegative(graph: &MolecularGraph, seed: u64) -> MolecularGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..graph.num_nodes() * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
    let x = Tensor::from_vec(graph.num_nodes(), 3, values).unwrap();
    let links = vec![vec![0.0; 2]; graph.num_edges()];
    graph.clone().with_features(x, links).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn attention_sums_to_one(seed in any::<u64>(), m in 1usize..9, w in weights_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, m, 3, 4, 2);
        let model = random_model(seed, 3, 3, w);
        let trace = model.trace(&GraphInput::new(&g), &Query::one_hot(1, 2)).unwrap();
        for p in trace.attention() {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(p.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn read_vector_lies_in_cell_range(seed in any::<u64>(), m in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, m, 3, 4, 2);
        let trace = random_model(seed, 3, 3, NeighborWeights::Uniform).trace(&GraphInput::new(&g), &Query::one_hot(0, 2)).unwrap();
        for pair in trace.states.windows(2) {
            let (cells, read) = (&pair[0].memory, pair[1].read.as_ref().unwrap());
            for k in 0..cells.cols() {
                let col: Vec<f64> = (0..cells.rows()).map(|i| cells[(i, k)]).collect();
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(read[(0, k)] >= lo - 1e-12 && read[(0, k)] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn relabeling_permutes_cells(
        (seed, perm) in (any::<u64>(), 2usize..9).prop_flat_map(|(s, m)| (Just(s), common::permutation_strategy(m))),
        w in weights_strategy(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, perm.len(), 3, 4, 2);
        let model = random_model(seed, 3, 3, w);
        let q = Query::one_hot(0, 2);
        let a = model.trace(&GraphInput::new(&g), &q).unwrap();
        let b = model.trace(&GraphInput::new(&g.permuted(&perm)), &q).unwrap();
        prop_assert!((a.probability - b.probability).abs() <= 1e-9);
        for (sa, sb) in a.states.iter().zip(&b.states) {
            prop_assert!(sa.controller.sub(&sb.controller).unwrap().max_abs() <= 1e-9);
            for (i, &pi) in perm.iter().enumerate() {
                for k in 0..sa.memory.cols() {
                    prop_assert!((sa.memory[(i, k)] - sb.memory[(pi, k)]).abs() <= 1e-9);
                }
                if let (Some(pa), Some(pb)) = (&sa.attention, &sb.attention) {
                    prop_assert!((pa[i] - pb[pi]).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn hops_reduce_to_mean_message_passing(g in common::graph_strategy(6, 10, 1), seed in any::<u64>(), hops in 1usize..4) {
        let g = nonnegative(&g, seed);
        let model = mean_aggregation_model(3, hops);
        let trace = model.trace(&GraphInput::new(&g), &Query::constant(1)).unwrap();
        for t in 1..=hops {
            let expected = common::mean_message_passing(&g, g.node_features(), t);
            prop_assert!(trace.states[t].memory.sub(&expected).unwrap().max_abs() <= 1e-12, "hop {}", t);
        }
    }

    #[test]
    fn perturbations_travel_one_hop_per_step(seed in any::<u64>(), m in 2usize..9, j_pick in any::<usize>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, m, 3, 4, 2);
        let mut model = random_model(seed, 3, 4, NeighborWeights::Uniform);
        let d = model.params.dims();
        *model.params.get_mut(Slot::MemU) = Tensor::zeros(d.memory, d.controller);
        *model.params.get_mut(Slot::MemGateU) = Tensor::zeros(d.memory, d.controller);
        let j = j_pick % m;
        let mut x = g.node_features().clone();
        for v in x.row_slice_mut(j) {
            *v += 0.5;
        }
        let links = g.edges().iter().map(|e| e.features.clone()).collect();
        let h = g.clone().with_features(x, links).unwrap();
        let q = Query::one_hot(0, 2);
        let a = model.trace(&GraphInput::new(&g), &q).unwrap();
        let b = model.trace(&GraphInput::new(&h), &q).unwrap();
        let dist = common::distances(&g, j);
        for (t, (sa, sb)) in a.states.iter().zip(&b.states).enumerate() {
            for (i, d) in dist.iter().enumerate() {
                if d.is_none_or(|d| d > t) {
                    prop_assert_eq!(sa.memory.row_slice(i), sb.memory.row_slice(i), "hop {} cell {}", t, i);
                }
            }
        }
    }
}
