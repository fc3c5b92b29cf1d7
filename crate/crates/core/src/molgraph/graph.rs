use thiserror::Error;

use crate::numerics::Tensor;

/// One atom (or synthetic node).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomNode {
    pub element: String,
    /// Number of neighbors whose element is `H`.
    pub h_count: usize,
    pub degree: usize,
}

/// Undirected typed edge. `relation` is 1-based (`1..=R`).
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub relation: usize,
    /// Link features `b^{ij}`; identical for both directions.
    pub features: Vec<f64>,
}

impl Edge {
    /// The endpoint opposite `node`.
    pub fn other(&self, node: usize) -> usize {
        if self.source == node {
            self.target
        } else {
            self.source
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("relation {relation} outside 1..={max}")]
    Relation { relation: usize, max: usize },
    #[error("duplicate edge between {0} and {1}")]
    Duplicate(usize, usize),
    #[error("node feature matrix has {found} rows for {nodes} nodes")]
    FeatureRows { found: usize, nodes: usize },
    #[error("edge features have inconsistent dimensionality")]
    LinkDim,
}

/// Multi-relational graph `{A, R, X}` with per-relation neighbor lists.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularGraph {
    nodes: Vec<AtomNode>,
    edges: Vec<Edge>,
    num_relations: usize,
    node_features: Tensor<f64>,
    /// `adjacency[r - 1][i]` holds `(j, edge index)` for `j ∈ N_r(i)`, ascending in `j`.
    adjacency: Vec<Vec<Vec<(usize, usize)>>>,
}

impl MolecularGraph {
    /// Builds an unfeaturized graph from element symbols and `(i, j, relation)` bonds.
    pub fn new(
        elements: Vec<String>,
        num_relations: usize,
        bonds: &[(usize, usize, usize)],
    ) -> Result<Self, GraphError> {
        let m = elements.len();
        let mut adjacency = vec![vec![Vec::new(); m]; num_relations];
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::with_capacity(bonds.len());
        for (e, &(i, j, r)) in bonds.iter().enumerate() {
            if i >= m || j >= m {
                return Err(GraphError::NodeOutOfRange(i, j, m));
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if r == 0 || r > num_relations {
                return Err(GraphError::Relation {
                    relation: r,
                    max: num_relations,
                });
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(GraphError::Duplicate(i, j));
            }
            adjacency[r - 1][i].push((j, e));
            adjacency[r - 1][j].push((i, e));
            edges.push(Edge {
                source: i,
                target: j,
                relation: r,
                features: Vec::new(),
            });
        }
        for rel in &mut adjacency {
            for list in rel.iter_mut() {
                list.sort_unstable();
            }
        }
        let mut nodes: Vec<AtomNode> = elements
            .into_iter()
            .map(|element| AtomNode {
                element,
                h_count: 0,
                degree: 0,
            })
            .collect();
        for e in &edges {
            nodes[e.source].degree += 1;
            nodes[e.target].degree += 1;
        }
        let is_h: Vec<bool> = nodes.iter().map(|n| n.element == "H").collect();
        for e in &edges {
            if is_h[e.target] {
                nodes[e.source].h_count += 1;
            }
            if is_h[e.source] {
                nodes[e.target].h_count += 1;
            }
        }
        Ok(Self {
            nodes,
            edges,
            num_relations,
            node_features: Tensor::zeros(m, 0),
            adjacency,
        })
    }

    /// Attaches a node feature matrix and per-edge link features.
    pub fn with_features(mut self, node_features: Tensor<f64>, link_features: Vec<Vec<f64>>) -> Result<Self, GraphError> {
        if node_features.rows() != self.nodes.len() {
            return Err(GraphError::FeatureRows {
                found: node_features.rows(),
                nodes: self.nodes.len(),
            });
        }
        if link_features.len() != self.edges.len() {
            return Err(GraphError::LinkDim);
        }
        if let Some(first) = link_features.first() {
            if link_features.iter().any(|f| f.len() != first.len()) {
                return Err(GraphError::LinkDim);
            }
        }
        for (e, f) in self.edges.iter_mut().zip(link_features) {
            e.features = f;
        }
        self.node_features = node_features;
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn nodes(&self) -> &[AtomNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Node feature matrix `X` (`M x K_x`; zero columns before featurization).
    pub fn node_features(&self) -> &Tensor<f64> {
        &self.node_features
    }

    pub fn node_dim(&self) -> usize {
        self.node_features.cols()
    }

    /// Link-feature dimensionality (0 for an unfeaturized or edgeless graph).
    pub fn link_dim(&self) -> usize {
        self.edges.first().map_or(0, |e| e.features.len())
    }

    /// `N_r(i)` as `(neighbor, edge index)` pairs; `relation` is 1-based.
    pub fn neighbors_by_relation(&self, relation: usize, node: usize) -> &[(usize, usize)] {
        &self.adjacency[relation - 1][node]
    }

    /// `N(i) = ∪_r N_r(i)`, ascending.
    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .adjacency
            .iter()
            .flat_map(|rel| rel[node].iter().map(|&(j, _)| j))
            .collect();
        all.sort_unstable();
        all
    }

    /// Relabels nodes so that old node `i` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let m = self.nodes.len();
        assert_eq!(perm.len(), m, "permutation length");
        let mut elements = vec![String::new(); m];
        for (i, n) in self.nodes.iter().enumerate() {
            elements[perm[i]] = n.element.clone();
        }
        let bonds: Vec<_> = self
            .edges
            .iter()
            .map(|e| (perm[e.source], perm[e.target], e.relation))
            .collect();
        let g = Self::new(elements, self.num_relations, &bonds).expect("permutation preserves validity");
        let mut x = Tensor::zeros(m, self.node_features.cols());
        for (i, &p) in perm.iter().enumerate() {
            x.row_slice_mut(p).copy_from_slice(self.node_features.row_slice(i));
        }
        let links = self.edges.iter().map(|e| e.features.clone()).collect();
        g.with_features(x, links).expect("same shapes")
    }
}
