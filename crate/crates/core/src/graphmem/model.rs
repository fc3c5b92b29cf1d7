use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{GraphInput, ModelDims, ModelParams, Query, Slot};
use crate::numerics::{NumericsError, Scalar, ShapeError, Tape, Tensor, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("graph has no nodes; memory would be empty")]
    EmptyMemory,
    #[error("hop count must be at least 1")]
    ZeroHops,
    #[error("node features have width {found}, model expects {expected}")]
    NodeDim { expected: usize, found: usize },
    #[error("link features have width {found}, model expects {expected}")]
    LinkDim { expected: usize, found: usize },
    #[error("graph uses {found} relations, model has {expected}")]
    Relations { expected: usize, found: usize },
    #[error("query has length {found}, model expects {expected}")]
    QueryDim { expected: usize, found: usize },
    #[error("raw (un-embedded) memory needs node width {node} equal to memory width {memory}")]
    RawEmbedding { node: usize, memory: usize },
}

impl From<ShapeError> for ModelError {
    fn from(e: ShapeError) -> Self {
        Self::Numerics(e.into())
    }
}

/// How `p^j` in the neighbor context is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborWeights {
    /// `1 / |N_r(i)|`.
    Uniform,
    /// Softmax over `N_r(i)` of the read-attention scores `vᵀ a_t^j`.
    Learned,
}

/// How memory cells are initialized from node features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Embedding {
    /// `m_0^i = relu(E x^i + b)`.
    Learned,
    /// `m_0^i = relu(x^i)`; needs `K_x == K_m`.
    Raw,
}

impl std::str::FromStr for NeighborWeights {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "learned" => Ok(Self::Learned),
            _ => Err(format!("expected `uniform` or `learned`, got `{s}`")),
        }
    }
}

impl std::str::FromStr for Embedding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "learned" => Ok(Self::Learned),
            "raw" => Ok(Self::Raw),
            _ => Err(format!("expected `learned` or `raw`, got `{s}`")),
        }
    }
}

impl std::fmt::Display for NeighborWeights {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::Learned => "learned",
        })
    }
}

impl std::fmt::Display for Embedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Learned => "learned",
            Self::Raw => "raw",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hops: usize,
    pub neighbor_weights: NeighborWeights,
    pub embedding: Embedding,
    /// Dropout rate at the first and last steps (training only).
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hops: 10,
            neighbor_weights: NeighborWeights::Uniform,
            embedding: Embedding::Learned,
            dropout: 0.0,
        }
    }
}

/// Controller and memory after `t` hops, as tape handles.
#[derive(Debug, Clone, Copy)]
pub struct HopVars {
    pub t: usize,
    pub controller: Var,
    pub memory: Var,
}

/// Result of one attentive read.
#[derive(Debug, Clone, Copy)]
pub struct ReadVars {
    /// `m_t = Σ_i p_t^i m_{t-1}^i` (`1 x K_m`).
    pub vector: Var,
    /// `p_t` (`M x 1`).
    pub weights: Var,
    /// `vᵀ a_t^i` (`M x 1`).
    pub scores: Var,
    /// `a_t^i` (`M x K_m`).
    pub features: Var,
}

/// Materialized state of one hop, for inspection and attention dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct HopState<S> {
    pub t: usize,
    /// `h_t` (`1 x K_h`).
    pub controller: Tensor<S>,
    /// Row `i` is `m_t^i`.
    pub memory: Tensor<S>,
    /// `m_t`; absent at `t = 0`.
    pub read: Option<Tensor<S>>,
    /// `p_t^i`; absent at `t = 0`.
    pub attention: Option<Vec<S>>,
    /// `a_t^i`; absent at `t = 0`.
    pub attention_features: Option<Tensor<S>>,
    /// `c_tr^i` per relation (row `i`); `None` when the relation has no edges.
    pub contexts: Vec<Option<Tensor<S>>>,
}

struct BoundRelation {
    offsets: std::sync::Arc<[usize]>,
    neighbors: std::sync::Arc<[usize]>,
    uniform: Var,
    links: Var,
}

/// One recorded forward pass over a single graph.
pub struct Pass<'a, 'r, S: Scalar> {
    pub tape: Tape<S>,
    config: &'a ModelConfig,
    dims: ModelDims,
    input: &'a GraphInput<S>,
    params: Vec<Var>,
    relations: Vec<Option<BoundRelation>>,
    rng: Option<&'r mut dyn RngCore>,
}

impl<'a, 'r, S: Scalar> Pass<'a, 'r, S> {
    /// Starts a pass. With `rng` present the pass is in training mode and
    /// applies dropout at the first and last steps.
    pub fn new(
        params: &'a ModelParams<S>,
        config: &'a ModelConfig,
        input: &'a GraphInput<S>,
        rng: Option<&'r mut dyn RngCore>,
    ) -> Result<Self, ModelError> {
        let dims = params.dims();
        if config.hops == 0 {
            return Err(ModelError::ZeroHops);
        }
        if input.num_nodes() == 0 {
            return Err(ModelError::EmptyMemory);
        }
        if input.node_dim() != dims.node {
            return Err(ModelError::NodeDim {
                expected: dims.node,
                found: input.node_dim(),
            });
        }
        if config.embedding == Embedding::Raw && dims.node != dims.memory {
            return Err(ModelError::RawEmbedding {
                node: dims.node,
                memory: dims.memory,
            });
        }
        if input.num_relations() > dims.relations {
            return Err(ModelError::Relations {
                expected: dims.relations,
                found: input.num_relations(),
            });
        }
        let has_edges = input.relations.iter().any(Option::is_some);
        if has_edges && input.link_dim != dims.link {
            return Err(ModelError::LinkDim {
                expected: dims.link,
                found: input.link_dim,
            });
        }

        let mut tape = Tape::new();
        let params: Vec<Var> = params
            .tensors()
            .iter()
            .enumerate()
            .map(|(i, t)| tape.param(i, t))
            .collect();
        let relations = input
            .relations
            .iter()
            .map(|rel| {
                rel.as_ref().map(|r| BoundRelation {
                    offsets: r.offsets.clone(),
                    neighbors: r.neighbors.clone(),
                    uniform: tape.constant(r.uniform.clone()),
                    links: tape.constant(r.links.clone()),
                })
            })
            .collect();
        Ok(Self {
            tape,
            config,
            dims,
            input,
            params,
            relations,
            rng,
        })
    }

    fn p(&self, slot: Slot) -> Var {
        self.params[self.dims.index(slot)]
    }

    fn maybe_dropout(&mut self, v: Var) -> Result<Var, ModelError> {
        match self.rng.as_deref_mut() {
            Some(rng) => Ok(self.tape.dropout(v, self.config.dropout, rng)?),
            None => Ok(v),
        }
    }

    /// `x · Wᵀ + b` with `b` broadcast over rows.
    fn linear(&mut self, x: Var, w: Slot, b: Slot) -> Result<Var, ModelError> {
        let xw = self.tape.matmul_t(x, self.p(w))?;
        Ok(self.tape.add_row(xw, self.p(b))?)
    }

    /// `h_0 = relu(W_q q + b)` and `m_0^i = relu(E x^i + b)` (or `relu(x^i)`),
    /// followed by first-step dropout in training mode.
    pub fn init_state(&mut self, query: &Query<S>) -> Result<HopVars, ModelError> {
        if query.len() != self.dims.query {
            return Err(ModelError::QueryDim {
                expected: self.dims.query,
                found: query.len(),
            });
        }
        let q = self.tape.constant(query.as_row());
        let h = self.linear(q, Slot::QueryW, Slot::QueryB)?;
        let h = self.tape.relu(h);

        let x = self.tape.constant(self.input.features.clone());
        let m = match self.config.embedding {
            Embedding::Learned => self.linear(x, Slot::EmbedW, Slot::EmbedB)?,
            Embedding::Raw => x,
        };
        let m = self.tape.relu(m);

        let controller = self.maybe_dropout(h)?;
        let memory = self.maybe_dropout(m)?;
        Ok(HopVars { t: 0, controller, memory })
    }

    /// Soft attention over the cells of `prev`:
    /// `a^i = tanh(W_a m^i + U_a h)`, `p = softmax(vᵀ a^i)`, `m_t = Σ p^i m^i`.
    pub fn attentive_read(&mut self, prev: &HopVars) -> Result<ReadVars, ModelError> {
        let pm = self.tape.matmul_t(prev.memory, self.p(Slot::AttnW))?;
        let ph = self.linear(prev.controller, Slot::AttnU, Slot::AttnB)?;
        let pre = self.tape.add_row(pm, ph)?;
        let features = self.tape.tanh(pre);
        let scores = self.tape.matmul_t(features, self.p(Slot::AttnV))?;
        let weights = self.tape.softmax(scores)?;
        let vector = self.tape.t_matmul(weights, prev.memory)?;
        Ok(ReadVars {
            vector,
            weights,
            scores,
            features,
        })
    }

    fn is_last(&self, prev: &HopVars) -> bool {
        prev.t + 1 == self.config.hops
    }

    /// `h_t = α ∘ relu(W_h h_{t-1} + U_h m_t + b) + (1 − α) ∘ h_{t-1}` with
    /// `α = sigmoid(G_h h_{t-1} + G_m m_t + g)`.
    pub fn controller_step(&mut self, prev: &HopVars, read: &ReadVars) -> Result<Var, ModelError> {
        let a = self.tape.matmul_t(prev.controller, self.p(Slot::CtrlW))?;
        let b = self.linear(read.vector, Slot::CtrlU, Slot::CtrlB)?;
        let pre = self.tape.add(a, b)?;
        let proposal = self.tape.relu(pre);

        let ga = self.tape.matmul_t(prev.controller, self.p(Slot::CtrlGateW))?;
        let gb = self.linear(read.vector, Slot::CtrlGateU, Slot::CtrlGateB)?;
        let gpre = self.tape.add(ga, gb)?;
        let gate = self.tape.sigmoid(gpre);

        let h = self.tape.lerp(gate, proposal, prev.controller)?;
        if self.is_last(prev) {
            self.maybe_dropout(h)
        } else {
            Ok(h)
        }
    }

    /// Neighbor contexts `c_r^i = Σ_{j ∈ N_r(i)} p^j [m_{t-1}^j, b^{ij}]`, one
    /// `M x (K_m + link)` matrix per relation with edges.
    pub fn neighbor_contexts(&mut self, prev: &HopVars, read: &ReadVars) -> Result<Vec<Option<Var>>, ModelError> {
        let mut out = Vec::with_capacity(self.relations.len());
        for r in 0..self.relations.len() {
            let Some(rel) = &self.relations[r] else {
                out.push(None);
                continue;
            };
            let (offsets, neighbors, uniform, links) =
                (rel.offsets.clone(), rel.neighbors.clone(), rel.uniform, rel.links);
            let weights = match self.config.neighbor_weights {
                NeighborWeights::Uniform => uniform,
                NeighborWeights::Learned => {
                    let s = self.tape.gather_rows(read.scores, neighbors.clone())?;
                    self.tape.segment_softmax(s, offsets.clone())?
                }
            };
            let cells = self.tape.gather_rows(prev.memory, neighbors)?;
            let values = self.tape.concat_cols(cells, links)?;
            out.push(Some(self.tape.segment_weighted_sum(values, weights, offsets)?));
        }
        Ok(out)
    }

    /// `m_t^i = α^i ∘ relu(W_m m_{t-1}^i + U_m h_t + Σ_r V_r c_r^i + b) + (1 − α^i) ∘ m_{t-1}^i`,
    /// with the cell gate an affine function of the same inputs.
    pub fn memory_step(&mut self, prev: &HopVars, contexts: &[Option<Var>], controller: Var) -> Result<Var, ModelError> {
        let proposal = self.cell_affine(prev.memory, controller, contexts, Slot::MemW, Slot::MemU, Slot::MemB, Slot::MemRel)?;
        let proposal = self.tape.relu(proposal);
        let gate = self.cell_affine(
            prev.memory,
            controller,
            contexts,
            Slot::MemGateW,
            Slot::MemGateU,
            Slot::MemGateB,
            Slot::MemGateRel,
        )?;
        let gate = self.tape.sigmoid(gate);
        let m = self.tape.lerp(gate, proposal, prev.memory)?;
        if self.is_last(prev) {
            self.maybe_dropout(m)
        } else {
            Ok(m)
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn cell_affine(
        &mut self,
        memory: Var,
        controller: Var,
        contexts: &[Option<Var>],
        w: Slot,
        u: Slot,
        b: Slot,
        rel: fn(usize) -> Slot,
    ) -> Result<Var, ModelError> {
        let mut acc = self.tape.matmul_t(memory, self.p(w))?;
        for (r, c) in contexts.iter().enumerate() {
            if let Some(c) = c {
                let term = self.tape.matmul_t(*c, self.p(rel(r)))?;
                acc = self.tape.add(acc, term)?;
            }
        }
        let row = self.linear(controller, u, b)?;
        Ok(self.tape.add_row(acc, row)?)
    }

    /// One hop: read, controller update, memory update.
    pub fn hop(&mut self, prev: &HopVars) -> Result<(HopVars, ReadVars, Vec<Option<Var>>), ModelError> {
        let read = self.attentive_read(prev)?;
        let contexts = self.neighbor_contexts(prev, &read)?;
        let controller = self.controller_step(prev, &read)?;
        let memory = self.memory_step(prev, &contexts, controller)?;
        Ok((
            HopVars {
                t: prev.t + 1,
                controller,
                memory,
            },
            read,
            contexts,
        ))
    }

    /// `sigmoid(wᵀ h + b)` as a `1 x 1` node.
    pub fn output(&mut self, controller: Var) -> Result<Var, ModelError> {
        let z = self.linear(controller, Slot::OutW, Slot::OutB)?;
        Ok(self.tape.sigmoid(z))
    }

    /// Full forward: init, `config.hops` hops, output probability.
    /// With `record`, every hop is materialized into a [`HopState`].
    pub fn run(&mut self, query: &Query<S>, record: bool) -> Result<(Var, Vec<HopState<S>>), ModelError> {
        let mut hop = self.init_state(query)?;
        let mut states = Vec::new();
        if record {
            states.push(self.snapshot(&hop, None, &[]));
        }
        for _ in 0..self.config.hops {
            let (next, read, contexts) = self.hop(&hop)?;
            if record {
                states.push(self.snapshot(&next, Some(&read), &contexts));
            }
            hop = next;
        }
        let prob = self.output(hop.controller)?;
        Ok((prob, states))
    }

    pub fn snapshot(&self, hop: &HopVars, read: Option<&ReadVars>, contexts: &[Option<Var>]) -> HopState<S> {
        let v = |x: Var| self.tape.value(x).clone();
        HopState {
            t: hop.t,
            controller: v(hop.controller),
            memory: v(hop.memory),
            read: read.map(|r| v(r.vector)),
            attention: read.map(|r| self.tape.value(r.weights).as_slice().to_vec()),
            attention_features: read.map(|r| v(r.features)),
            contexts: contexts.iter().map(|c| c.map(v)).collect(),
        }
    }
}

/// Probability and per-hop states of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<S> {
    pub probability: S,
    pub states: Vec<HopState<S>>,
}

impl<S: Scalar> Trace<S> {
    /// Attention weights for hops `1..=T`.
    pub fn attention(&self) -> Vec<Vec<S>> {
        self.states.iter().filter_map(|s| s.attention.clone()).collect()
    }
}

/// A GraphMem model: parameters plus architecture configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMem<S> {
    pub params: ModelParams<S>,
    pub config: ModelConfig,
}

impl<S: Scalar> GraphMem<S> {
    pub fn new(params: ModelParams<S>, config: ModelConfig) -> Self {
        Self { params, config }
    }

    /// Inference-mode probability of "active".
    pub fn predict(&self, input: &GraphInput<S>, query: &Query<S>) -> Result<S, ModelError> {
        let mut pass = Pass::new(&self.params, &self.config, input, None)?;
        let (prob, _) = pass.run(query, false)?;
        Ok(pass.tape.value(prob).as_slice()[0])
    }

    /// Inference-mode forward with every hop materialized.
    pub fn trace(&self, input: &GraphInput<S>, query: &Query<S>) -> Result<Trace<S>, ModelError> {
        let mut pass = Pass::new(&self.params, &self.config, input, None)?;
        let (prob, states) = pass.run(query, true)?;
        Ok(Trace {
            probability: pass.tape.value(prob).as_slice()[0],
            states,
        })
    }

    /// Cross-entropy loss of one example and its exact parameter gradients.
    /// Passing `rng` enables training-mode dropout.
    pub fn loss_and_gradients(
        &self,
        input: &GraphInput<S>,
        query: &Query<S>,
        label: u8,
        rng: Option<&mut dyn RngCore>,
    ) -> Result<(S, S, Vec<Tensor<S>>), ModelError> {
        let mut pass = Pass::new(&self.params, &self.config, input, rng)?;
        let (prob, _) = pass.run(query, false)?;
        let loss = pass.tape.bce(prob, S::of(f64::from(label)))?;
        let grads = pass.tape.backward(loss).dense(self.params.tensors());
        Ok((
            pass.tape.value(loss).as_slice()[0],
            pass.tape.value(prob).as_slice()[0],
            grads,
        ))
    }

    /// Inference-mode loss; the finite-difference oracle evaluates this.
    pub fn loss(&self, input: &GraphInput<S>, query: &Query<S>, label: u8) -> Result<S, ModelError> {
        let p = self.predict(input, query)?;
        Ok(crate::numerics::cross_entropy(p, S::of(f64::from(label))))
    }
}
