//! Deterministic motif-detection datasets.
//!
//! Positives get a planted cycle of one relation type; negatives are random
//! graphs rejection-sampled until they contain no such cycle.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{featurize, LabeledExample, MolecularGraph, Vocabulary};
use crate::kv::{parse_key_values, KvError, KvReader};

/// Element symbols used for synthetic nodes, in vocabulary order.
pub const SYNTHETIC_ALPHABET: [&str; 10] = ["C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B"];

const MAX_REJECTIONS: usize = 10_000;

/// A simple cycle of `length` nodes whose edges all carry `relation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Motif {
    pub length: usize,
    pub relation: usize,
}

impl FromStr for Motif {
    type Err = String;

    /// `triangle:R`, `square:R` or `cycleK:R`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rel) = s.split_once(':').ok_or_else(|| format!("motif `{s}` is not `<shape>:<relation>`"))?;
        let length = match kind.trim() {
            "triangle" => 3,
            "square" => 4,
            other => other
                .strip_prefix("cycle")
                .and_then(|k| k.parse().ok())
                .filter(|&k: &usize| k >= 3)
                .ok_or_else(|| format!("unknown motif shape `{other}`"))?,
        };
        let relation = rel.trim().parse().map_err(|_| format!("bad motif relation `{rel}`"))?;
        Ok(Self { length, relation })
    }
}

impl fmt::Display for Motif {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.length {
            3 => write!(f, "triangle:{}", self.relation),
            4 => write!(f, "square:{}", self.relation),
            k => write!(f, "cycle{k}:{}", self.relation),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub nodes_min: usize,
    pub nodes_max: usize,
    pub relations: usize,
    pub motif: Motif,
    /// Fraction of positives; `round(balance · count)` examples are positive.
    pub balance: f64,
    pub count: usize,
    /// Number of element symbols drawn from [`SYNTHETIC_ALPHABET`].
    pub alphabet: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntheticError {
    #[error(transparent)]
    Spec(#[from] KvError),
    #[error("motif of {motif} nodes cannot fit in at most {max} nodes")]
    MotifTooLarge { motif: usize, max: usize },
    #[error("invalid spec: {0}")]
    Invalid(String),
    #[error("could not sample a motif-free graph after {0} attempts")]
    Rejection(usize),
}

impl SyntheticSpec {
    pub fn parse(text: &str) -> Result<Self, SyntheticError> {
        let map = parse_key_values(text)?;
        let r = KvReader::new(
            &map,
            &["nodes_min", "nodes_max", "relations", "motif", "balance", "count", "alphabet"],
        )?;
        let motif = r.required::<String>("motif")?;
        let motif = motif.parse().map_err(|reason| KvError::Invalid {
            key: "motif".into(),
            reason,
        })?;
        let spec = Self {
            nodes_min: r.required("nodes_min")?,
            nodes_max: r.required("nodes_max")?,
            relations: r.required("relations")?,
            motif,
            balance: r.or("balance", 0.5)?,
            count: r.required("count")?,
            alphabet: r.or("alphabet", 4)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        format!(
            "nodes_min={}\nnodes_max={}\nrelations={}\nmotif={}\nbalance={}\ncount={}\nalphabet={}\n",
            self.nodes_min, self.nodes_max, self.relations, self.motif, self.balance, self.count, self.alphabet
        )
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.motif.length > self.nodes_max {
            return Err(SyntheticError::MotifTooLarge {
                motif: self.motif.length,
                max: self.nodes_max,
            });
        }
        let bad = |m: &str| Err(SyntheticError::Invalid(m.to_string()));
        if self.nodes_min == 0 || self.nodes_min > self.nodes_max {
            return bad("need 1 <= nodes_min <= nodes_max");
        }
        if self.relations == 0 || self.motif.relation == 0 || self.motif.relation > self.relations {
            return bad("motif relation must lie in 1..=relations");
        }
        if !(0.0..=1.0).contains(&self.balance) {
            return bad("balance must lie in [0, 1]");
        }
        if self.alphabet == 0 || self.alphabet > SYNTHETIC_ALPHABET.len() {
            return bad("alphabet must lie in 1..=10");
        }
        Ok(())
    }

    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::new(SYNTHETIC_ALPHABET[..self.alphabet].iter().copied())
    }

    pub fn positives(&self) -> usize {
        (self.balance * self.count as f64).round() as usize
    }
}

/// Random connected graph: a random spanning tree plus `m / 4` extra edges.
fn random_base<R: Rng>(spec: &SyntheticSpec, m: usize, rng: &mut R) -> (Vec<String>, BTreeMap<(usize, usize), usize>) {
    let elements = (0..m)
        .map(|_| SYNTHETIC_ALPHABET[rng.gen_range(0..spec.alphabet)].to_string())
        .collect();
    let mut edges = BTreeMap::new();
    for i in 1..m {
        let parent = rng.gen_range(0..i);
        edges.insert((parent, i), rng.gen_range(1..=spec.relations));
    }
    if m >= 3 {
        for _ in 0..m / 4 {
            let a = rng.gen_range(0..m);
            let b = rng.gen_range(0..m);
            if a != b {
                edges.entry((a.min(b), a.max(b))).or_insert_with(|| rng.gen_range(1..=spec.relations));
            }
        }
    }
    (elements, edges)
}

fn build(spec: &SyntheticSpec, elements: Vec<String>, edges: &BTreeMap<(usize, usize), usize>) -> MolecularGraph {
    let bonds: Vec<_> = edges.iter().map(|(&(i, j), &r)| (i, j, r)).collect();
    MolecularGraph::new(elements, spec.relations, &bonds).expect("generator emits valid edges")
}

/// Generates `spec.count` featurized examples (task 0), reproducible for a fixed seed.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Vec<LabeledExample>, SyntheticError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = spec.vocabulary();
    let n_pos = spec.positives();
    let mut labels: Vec<u8> = (0..spec.count).map(|i| u8::from(i < n_pos)).collect();
    labels.shuffle(&mut rng);

    let k = spec.motif.length;
    let mut out = Vec::with_capacity(spec.count);
    for label in labels {
        let graph = if label == 1 {
            let m = rng.gen_range(spec.nodes_min.max(k)..=spec.nodes_max);
            let (elements, mut edges) = random_base(spec, m, &mut rng);
            let mut cycle: Vec<usize> = (0..m).collect();
            cycle.shuffle(&mut rng);
            cycle.truncate(k);
            for t in 0..k {
                let (a, b) = (cycle[t], cycle[(t + 1) % k]);
                edges.insert((a.min(b), a.max(b)), spec.motif.relation);
            }
            build(spec, elements, &edges)
        } else {
            let mut attempt = 0;
            loop {
                let m = rng.gen_range(spec.nodes_min..=spec.nodes_max);
                let (elements, edges) = random_base(spec, m, &mut rng);
                let g = build(spec, elements, &edges);
                if !contains_motif(&g, spec.motif) {
                    break g;
                }
                attempt += 1;
                if attempt == MAX_REJECTIONS {
                    return Err(SyntheticError::Rejection(MAX_REJECTIONS));
                }
            }
        };
        out.push(LabeledExample {
            graph: featurize(&graph, &vocab),
            task_id: 0,
            label,
        });
    }
    Ok(out)
}

/// Whether `graph` has a simple cycle of exactly `motif.length` nodes using only
/// edges of `motif.relation`.
pub fn contains_motif(graph: &MolecularGraph, motif: Motif) -> bool {
    if motif.relation == 0 || motif.relation > graph.num_relations() {
        return false;
    }
    let m = graph.num_nodes();
    let mut path = Vec::with_capacity(motif.length);
    let mut on_path = vec![false; m];
    // Canonical start: the smallest node on the cycle.
    (0..m).any(|start| {
        path.clear();
        path.push(start);
        on_path[start] = true;
        let found = extend(graph, motif, start, &mut path, &mut on_path);
        on_path[start] = false;
        found
    })
}

fn extend(graph: &MolecularGraph, motif: Motif, start: usize, path: &mut Vec<usize>, on_path: &mut [bool]) -> bool {
    let last = *path.last().expect("path starts non-empty");
    let nbrs = graph.neighbors_by_relation(motif.relation, last);
    if path.len() == motif.length {
        return nbrs.iter().any(|&(j, _)| j == start);
    }
    for &(j, _) in nbrs {
        if j <= start || on_path[j] {
            continue;
        }
        path.push(j);
        on_path[j] = true;
        let found = extend(graph, motif, start, path, on_path);
        on_path[j] = false;
        path.pop();
        if found {
            return true;
        }
    }
    false
}
