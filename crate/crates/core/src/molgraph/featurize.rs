use crate::numerics::Tensor;

use super::{detect_ring_edges, MolecularGraph};

/// Number of one-hot slots for degree and for H count (values ≥ 4 clamp to the last).
pub const COUNT_SLOTS: usize = 5;

/// Ordered element vocabulary. Symbols outside it share the trailing OTHER slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new(["C", "N", "O", "S", "F", "Cl", "Br", "I", "P", "H"])
    }
}

impl Vocabulary {
    pub fn new<I, T>(symbols: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        Self {
            symbols: symbols.into_iter().map(Into::into).collect(),
        }
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Slot of `symbol`; `len()` is the OTHER slot.
    pub fn slot(&self, symbol: &str) -> usize {
        self.symbols
            .iter()
            .position(|s| s == symbol)
            .unwrap_or(self.symbols.len())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// `K_x = |vocab| + 1 + 5 + 5`.
    pub fn node_dim(&self) -> usize {
        self.symbols.len() + 1 + 2 * COUNT_SLOTS
    }
}

/// Atom invariant slots `(element, degree, H count)` shared with the fingerprint.
pub fn atom_slots(graph: &MolecularGraph, vocab: &Vocabulary) -> Vec<(usize, usize, usize)> {
    graph
        .nodes()
        .iter()
        .map(|n| {
            (
                vocab.slot(&n.element),
                n.degree.min(COUNT_SLOTS - 1),
                n.h_count.min(COUNT_SLOTS - 1),
            )
        })
        .collect()
}

/// Node features: one-hot element ++ one-hot degree ++ one-hot H count.
/// Edge features: one-hot relation (`R` slots) ++ in-ring bit.
pub fn featurize(graph: &MolecularGraph, vocab: &Vocabulary) -> MolecularGraph {
    let m = graph.num_nodes();
    let width = vocab.node_dim();
    let degree_at = vocab.len() + 1;
    let h_at = degree_at + COUNT_SLOTS;
    let mut x = Tensor::zeros(m, width);
    for (i, (el, deg, h)) in atom_slots(graph, vocab).into_iter().enumerate() {
        x[(i, el)] = 1.0;
        x[(i, degree_at + deg)] = 1.0;
        x[(i, h_at + h)] = 1.0;
    }

    let rings = detect_ring_edges(graph);
    let r = graph.num_relations();
    let links = graph
        .edges()
        .iter()
        .zip(rings)
        .map(|(e, ring)| {
            let mut f = vec![0.0; r + 1];
            f[e.relation - 1] = 1.0;
            f[r] = if ring { 1.0 } else { 0.0 };
            f
        })
        .collect();
    graph
        .clone()
        .with_features(x, links)
        .expect("featurizer produces consistent shapes")
}
