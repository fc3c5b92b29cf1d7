//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use graphmem::fingerprint::{circular_fingerprint, train_logistic, LogisticConfig};
use graphmem::graphmem::{
    gradient_check, random_graph, Embedding, GradCheckOptions, GraphInput, GraphMem, ModelConfig, ModelDims, ModelParams,
    NeighborWeights, Query, Slot,
};
use graphmem::molgraph::{detect_ring_edges, featurize, generate_synthetic, parse_molfile, LabeledExample, MolecularGraph, SyntheticSpec, Vocabulary};
use graphmem::numerics::Tensor;
use graphmem::training::{auc, compute_metrics, train, AdamConfig, ExperimentConfig, Mode, Splits};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_model(rng: &mut ChaCha8Rng, dims: ModelDims, hops: usize, weights: NeighborWeights) -> GraphMem<f64> {
    let mut p = ModelParams::init(dims, rng);
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

fn small_dims(relations: usize) -> ModelDims {
    ModelDims {
        query: 2,
        node: 4,
        link: 2,
        relations,
        memory: 6,
        controller: 5,
    }
}

fn gradient_certification() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut graphs = 0;
    for (seed, weights) in [(7, NeighborWeights::Uniform), (8, NeighborWeights::Learned)] {
        let opts = GradCheckOptions {
            neighbor_weights: weights,
            ..GradCheckOptions::default()
        };
        match gradient_check(seed, &opts) {
            Ok(r) => worst = worst.max(r.max_relative_error),
            Err(e) => return outcome(false, format!("model error: {e}")),
        }
        graphs += opts.graphs;
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-4 && elapsed <= Duration::from_secs(60),
        format!("{graphs} graphs, max relative error {worst:.2e} (<= 1e-4), {:.1}s (<= 60s)", elapsed.as_secs_f64()),
    )
}

fn attention_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let m = rng.gen_range(1..=12);
        let g = random_graph(&mut rng, m, 3, 4, 2);
        let weights = if k % 2 == 0 { NeighborWeights::Uniform } else { NeighborWeights::Learned };
        let hops = rng.gen_range(1..=5);
        let model = random_model(&mut rng, small_dims(3), hops, weights);
        let trace = model.trace(&GraphInput::new(&g), &Query::one_hot(k % 2, 2)).unwrap();
        for p in trace.attention() {
            worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
        }
    }
    outcome(worst <= 1e-9, format!("100 forwards, max |sum p - 1| = {worst:.1e} (<= 1e-9)"))
}

fn permutation_equivariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let m = rng.gen_range(2..=12);
        let g = random_graph(&mut rng, m, 3, 4, 2);
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut rng);
        let weights = if k % 2 == 0 { NeighborWeights::Uniform } else { NeighborWeights::Learned };
        let model = random_model(&mut rng, small_dims(3), 4, weights);
        let q = Query::one_hot(1, 2);
        let a = model.predict(&GraphInput::new(&g), &q).unwrap();
        let b = model.predict(&GraphInput::new(&g.permuted(&perm)), &q).unwrap();
        worst = worst.max((a - b).abs());
    }
    outcome(worst <= 1e-9, format!("50 pairs, max |delta p| = {worst:.1e} (<= 1e-9)"))
}

fn message_passing_reduction() -> Outcome {
    let k = 3;
    let dims = ModelDims {
        query: 1,
        node: k,
        link: 2,
        relations: 1,
        memory: k,
        controller: 4,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut p = ModelParams::init(dims, &mut rng);
    for s in [Slot::MemW, Slot::MemU, Slot::MemB, Slot::MemGateW, Slot::MemGateU, Slot::MemGateRel(0)] {
        let (r, c) = dims.shape(s);
        *p.get_mut(s) = Tensor::zeros(r, c);
    }
    *p.get_mut(Slot::MemGateB) = Tensor::filled(1, k, 1e4);
    let mut v = Tensor::zeros(k, k + 2);
    for i in 0..k {
        v[(i, i)] = 1.0;
    }
    *p.get_mut(Slot::MemRel(0)) = v;

    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..60 {
        let g = common::random_simple_graph(&mut rng, 6, 10, 1);
        let x = Tensor::from_vec(g.num_nodes(), k, (0..g.num_nodes() * k).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let g = g.clone().with_features(x, vec![vec![0.0; 2]; g.num_edges()]).unwrap();
        for hops in 1..=3 {
            let model = GraphMem::new(
                p.clone(),
                ModelConfig {
                    hops,
                    embedding: Embedding::Raw,
                    ..ModelConfig::default()
                },
            );
            let trace = model.trace(&GraphInput::new(&g), &Query::constant(1)).unwrap();
            let expected = common::mean_message_passing(&g, g.node_features(), hops);
            worst = worst.max(trace.states[hops].memory.sub(&expected).unwrap().max_abs());
            cases += 1;
        }
    }
    outcome(worst <= 1e-12, format!("{cases} (graph, T) cases, max deviation {worst:.1e} (<= 1e-12)"))
}

fn synthetic_single_task() -> Outcome {
    let spec = SyntheticSpec::parse("nodes_min=8\nnodes_max=16\nrelations=3\nmotif=triangle:2\ncount=2750\n").unwrap();
    let data = generate_synthetic(&spec, 2024).unwrap();
    let (train_set, val_set, test_set) = (&data[..2000], &data[2000..2250], &data[2250..]);
    let splits = Splits::from_parts(train_set, val_set, test_set);
    let config = ExperimentConfig {
        hops: 4,
        memory_size: 32,
        controller_size: 32,
        dropout: 0.1,
        batch_size: 32,
        max_epochs: 200,
        patience: 5,
        workers: 1,
        seed: 1,
        optimizer: AdamConfig {
            step_size: 2e-3,
            ..AdamConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let out = match train(&splits, 1, &config, |_| {}) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("training failed: {e}")),
    };
    let elapsed = start.elapsed();
    let test_auc = out.test.average_auc.unwrap_or(0.0);

    let vocab = spec.vocabulary();
    let fps = |xs: &[LabeledExample]| -> Vec<_> {
        xs.iter().map(|e| circular_fingerprint(&e.graph, &vocab, 2, 1024).unwrap()).collect()
    };
    let labels = |xs: &[LabeledExample]| -> Vec<u8> { xs.iter().map(|e| e.label).collect() };
    let baseline = train_logistic(&fps(train_set), &labels(train_set), &LogisticConfig::default()).unwrap();
    let scores: Vec<f64> = fps(test_set).iter().map(|f| baseline.predict(f)).collect();
    let base = compute_metrics(&scores, &labels(test_set), &vec![0; scores.len()], 1).unwrap();

    outcome(
        test_auc >= 0.95 && out.history.len() <= 200 && elapsed <= Duration::from_secs(300),
        format!(
            "test AUC {test_auc:.4} (>= 0.95) after {} epochs (best {}), {:.0}s on 1 worker (<= 300s); \
             fingerprint+logistic baseline: AUC {:.4}, F1 {:.4}",
            out.history.len(),
            out.best_epoch,
            elapsed.as_secs_f64(),
            base.average_auc.unwrap_or(f64::NAN),
            base.micro_f1
        ),
    )
}

/// Every graph appears once per task; task 1's label is the complement of task 0's.
fn complementary(graphs: &[LabeledExample]) -> Vec<LabeledExample> {
    graphs
        .iter()
        .flat_map(|e| {
            [0, 1].map(|task| LabeledExample {
                graph: e.graph.clone(),
                task_id: task,
                label: if task == 0 { e.label } else { 1 - e.label },
            })
        })
        .collect()
}

fn query_routing() -> Outcome {
    let spec = SyntheticSpec::parse("nodes_min=6\nnodes_max=10\nrelations=3\nmotif=triangle:2\ncount=600\n").unwrap();
    let data = generate_synthetic(&spec, 31).unwrap();
    let splits = Splits::from_parts(&complementary(&data[..400]), &complementary(&data[400..500]), &complementary(&data[500..]));
    let base = ExperimentConfig {
        hops: 3,
        memory_size: 16,
        controller_size: 16,
        dropout: 0.0,
        batch_size: 32,
        max_epochs: 80,
        patience: 8,
        seed: 3,
        workers: 4,
        optimizer: AdamConfig {
            step_size: 3e-3,
            ..AdamConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let routed = train(&splits, 2, &ExperimentConfig { mode: Mode::Multi, ..base.clone() }, |_| {});
    let ablated = train(&splits, 2, &ExperimentConfig { mode: Mode::Single, ..base }, |_| {});
    let (routed, ablated) = match (routed, ablated) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("training failed: {e}")),
    };
    let aucs: Vec<f64> = routed.test.per_task.iter().map(|t| t.auc.unwrap_or(0.0)).collect();
    let min_auc = aucs.iter().copied().fold(f64::INFINITY, f64::min);
    let min_acc = ablated.test.min_accuracy();
    outcome(
        min_auc >= 0.9 && min_acc <= 0.55,
        format!(
            "one-hot query: test AUC {:.4} / {:.4} (>= 0.9); constant query: min test accuracy {min_acc:.4} (<= 0.55)",
            aucs[0], aucs[1]
        ),
    )
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut mismatches = 0;
    for _ in 0..200 {
        let tasks = rng.gen_range(1..=3);
        let n = rng.gen_range(tasks..=50);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..=10u32)) / 10.0).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let ids: Vec<usize> = (0..n).map(|i| if i < tasks { i } else { rng.gen_range(0..tasks) }).collect();
        let r = compute_metrics(&scores, &labels, &ids, tasks).unwrap();
        let mut f1s = Vec::new();
        for t in 0..tasks {
            let idx: Vec<usize> = (0..n).filter(|&i| ids[i] == t).collect();
            let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
            let l: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
            let (num, den) = common::auc_pairs(&s, &l);
            let expected = (den > 0).then(|| num as f64 / den as f64);
            let f1 = common::f1_counts(&s, &l);
            if r.per_task[t].auc != expected || auc(&s, &l) != expected || r.per_task[t].f1 != f1 {
                mismatches += 1;
            }
            f1s.push(f1);
        }
        if r.macro_f1 != f1s.iter().sum::<f64>() / tasks as f64 || r.micro_f1 != common::f1_counts(&scores, &labels) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("200 instances, {mismatches} mismatches against enumeration"))
}

const BENZENE: &str = "benzene\n\n\n  6  6  0  0  0  0  0  0  0  0999 V2000
    1.3970    0.0000    0.0000 C   0  0
    0.6985    1.2099    0.0000 C   0  0
   -0.6985    1.2099    0.0000 C   0  0
   -1.3970    0.0000    0.0000 C   0  0
   -0.6985   -1.2099    0.0000 C   0  0
    0.6985   -1.2099    0.0000 C   0  0
  1  2  4  0
  2  3  4  0
  3  4  4  0
  4  5  4  0
  5  6  4  0
  6  1  4  0
M  END
";

const ACID: &str = "acid\n\n\n  5  4  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0
    1.5000    0.0000    0.0000 C   0  0
    2.2000    1.2000    0.0000 O   0  0
    2.2000   -1.2000    0.0000 O   0  0
    3.1000   -1.2000    0.0000 H   0  0
  1  2  1  0
  2  3  2  0
  2  4  1  0
  4  5  1  0
M  END
";

fn fingerprint_determinism() -> Outcome {
    let vocab = Vocabulary::default();
    // Bit positions computed independently from the hash definition.
    let references: [(&str, Vec<usize>); 2] = [
        (BENZENE, vec![137, 349, 903]),
        (ACID, vec![128, 292, 470, 501, 564, 595, 677, 708, 722, 789, 838, 865, 902, 951, 1005]),
    ];
    let reproducible = references.iter().all(|(text, bits)| {
        let fp = || circular_fingerprint(&featurize(&parse_molfile(text).unwrap(), &vocab), &vocab, 2, 1024).unwrap();
        let (a, b) = (fp(), fp());
        a.to_hex() == b.to_hex() && &a.ones() == bits
    });

    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let elements = ["C", "N", "O", "S", "Cl", "H", "Se"];
    let mut broken = 0;
    for _ in 0..50 {
        let g = common::random_simple_graph(&mut rng, 14, 18, 4);
        let el = (0..g.num_nodes()).map(|_| elements[rng.gen_range(0..elements.len())].to_string()).collect();
        let bonds: Vec<_> = g.edges().iter().map(|e| (e.source, e.target, e.relation)).collect();
        let g = featurize(&MolecularGraph::new(el, 4, &bonds).unwrap(), &vocab);
        let mut perm: Vec<usize> = (0..g.num_nodes()).collect();
        perm.shuffle(&mut rng);
        let x = circular_fingerprint(&g, &vocab, 2, 1024).unwrap();
        let y = circular_fingerprint(&g.permuted(&perm), &vocab, 2, 1024).unwrap();
        if x.to_hex() != y.to_hex() {
            broken += 1;
        }
    }
    outcome(
        reproducible && broken == 0,
        format!("reference bits reproduced: {reproducible}; relabeling changed {broken}/50 fingerprints"),
    )
}

fn ring_detection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut mismatches = 0;
    for _ in 0..500 {
        let g = common::random_simple_graph(&mut rng, 10, 12, 3);
        if detect_ring_edges(&g) != common::ring_oracle(&g) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("500 graphs, {mismatches} disagreements with remove-edge oracle"))
}

/// Three tasks detecting the same motif on graphs of different sizes and element alphabets.
fn task_family() -> Vec<(Vec<LabeledExample>, Vec<LabeledExample>, Vec<LabeledExample>)> {
    let ranges = [(6, 10), (8, 12), (10, 14)];
    ranges
        .iter()
        .enumerate()
        .map(|(t, &(lo, hi))| {
            let spec = SyntheticSpec::parse(&format!(
                "nodes_min={lo}\nnodes_max={hi}\nrelations=3\nmotif=triangle:2\ncount=600\nalphabet=4\n"
            ))
            .unwrap();
            let mut data = generate_synthetic(&spec, 40 + t as u64).unwrap();
            for e in &mut data {
                e.task_id = t;
            }
            (data[..300].to_vec(), data[300..400].to_vec(), data[400..].to_vec())
        })
        .collect()
}

fn joint_vs_separate() -> Outcome {
    let family = task_family();
    let config = ExperimentConfig {
        hops: 3,
        memory_size: 16,
        controller_size: 16,
        dropout: 0.0,
        batch_size: 32,
        max_epochs: 60,
        patience: 8,
        seed: 5,
        workers: 4,
        optimizer: AdamConfig {
            step_size: 3e-3,
            ..AdamConfig::default()
        },
        ..ExperimentConfig::default()
    };

    let mut separate = Vec::new();
    for (train_set, val, test) in &family {
        let relabel = |xs: &[LabeledExample]| -> Vec<LabeledExample> {
            xs.iter().cloned().map(|e| LabeledExample { task_id: 0, ..e }).collect()
        };
        let splits = Splits::from_parts(&relabel(train_set), &relabel(val), &relabel(test));
        match train(&splits, 1, &config, |_| {}) {
            Ok(o) => separate.push(o.test.per_task[0].f1),
            Err(e) => return outcome(false, format!("separate training failed: {e}")),
        }
    }

    let concat = |k: usize| -> Vec<LabeledExample> {
        family
            .iter()
            .flat_map(|parts| match k {
                0 => parts.0.clone(),
                1 => parts.1.clone(),
                _ => parts.2.clone(),
            })
            .collect()
    };
    let splits = Splits::from_parts(&concat(0), &concat(1), &concat(2));
    let joint = match train(&splits, 3, &ExperimentConfig { mode: Mode::Multi, ..config }, |_| {}) {
        Ok(o) => o.test.per_task.iter().map(|t| t.f1).collect::<Vec<_>>(),
        Err(e) => return outcome(false, format!("joint training failed: {e}")),
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (j, s) = (mean(&joint), mean(&separate));
    outcome(
        j >= s,
        format!("mean per-task test F1: joint {j:.4} {joint:.3?} vs separate {s:.4} {separate:.3?}"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("gradient certification", gradient_certification),
        ("attention normalization", attention_normalization),
        ("permutation equivariance", permutation_equivariance),
        ("message-passing reduction", message_passing_reduction),
        ("synthetic single-task learning", synthetic_single_task),
        ("multi-task query routing", query_routing),
        ("metric oracle equivalence", metric_oracle),
        ("fingerprint determinism and invariance", fingerprint_determinism),
        ("ring detection", ring_detection),
        ("joint beats separate", joint_vs_separate),
    ];
    let only = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, run) in criteria {
        if only.as_deref().is_some_and(|o| !name.contains(o)) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        println!(
            "{} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
