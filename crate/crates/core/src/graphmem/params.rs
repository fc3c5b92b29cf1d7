use std::io::{Read, Write};

use rand::Rng;

use crate::numerics::{glorot_uniform, read_checkpoint, write_checkpoint, CheckpointError, Scalar, Tensor};

/// Sizes that fix every parameter shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ModelDims {
    /// Query length: task count in multi-task mode, 1 in single-task mode.
    pub query: usize,
    /// Node feature width `K_x`.
    pub node: usize,
    /// Link feature width (dimension of `b^{ij}`).
    pub link: usize,
    /// Relation count `R`.
    pub relations: usize,
    /// Memory cell width `K_m`.
    pub memory: usize,
    /// Controller width `K_h`.
    pub controller: usize,
}

/// Named position of a parameter tensor. Weights are stored `out x in`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    QueryW,
    QueryB,
    EmbedW,
    EmbedB,
    CtrlW,
    CtrlU,
    CtrlB,
    CtrlGateW,
    CtrlGateU,
    CtrlGateB,
    AttnW,
    AttnU,
    AttnB,
    AttnV,
    MemW,
    MemU,
    MemB,
    MemGateW,
    MemGateU,
    MemGateB,
    OutW,
    OutB,
    /// `V_r` for relation `r` (0-based), width `K_m + link`.
    MemRel(usize),
    /// Gate counterpart of `V_r`.
    MemGateRel(usize),
}

const FIXED: [Slot; 22] = [
    Slot::QueryW,
    Slot::QueryB,
    Slot::EmbedW,
    Slot::EmbedB,
    Slot::CtrlW,
    Slot::CtrlU,
    Slot::CtrlB,
    Slot::CtrlGateW,
    Slot::CtrlGateU,
    Slot::CtrlGateB,
    Slot::AttnW,
    Slot::AttnU,
    Slot::AttnB,
    Slot::AttnV,
    Slot::MemW,
    Slot::MemU,
    Slot::MemB,
    Slot::MemGateW,
    Slot::MemGateU,
    Slot::MemGateB,
    Slot::OutW,
    Slot::OutB,
];

impl Slot {
    pub fn name(self) -> String {
        match self {
            Slot::QueryW => "query.w".into(),
            Slot::QueryB => "query.b".into(),
            Slot::EmbedW => "embed.w".into(),
            Slot::EmbedB => "embed.b".into(),
            Slot::CtrlW => "controller.w".into(),
            Slot::CtrlU => "controller.u".into(),
            Slot::CtrlB => "controller.b".into(),
            Slot::CtrlGateW => "controller.gate.w".into(),
            Slot::CtrlGateU => "controller.gate.u".into(),
            Slot::CtrlGateB => "controller.gate.b".into(),
            Slot::AttnW => "attention.w".into(),
            Slot::AttnU => "attention.u".into(),
            Slot::AttnB => "attention.b".into(),
            Slot::AttnV => "attention.v".into(),
            Slot::MemW => "memory.w".into(),
            Slot::MemU => "memory.u".into(),
            Slot::MemB => "memory.b".into(),
            Slot::MemGateW => "memory.gate.w".into(),
            Slot::MemGateU => "memory.gate.u".into(),
            Slot::MemGateB => "memory.gate.b".into(),
            Slot::OutW => "output.w".into(),
            Slot::OutB => "output.b".into(),
            Slot::MemRel(r) => format!("memory.rel{}", r + 1),
            Slot::MemGateRel(r) => format!("memory.gate.rel{}", r + 1),
        }
    }

    fn is_bias(self) -> bool {
        matches!(
            self,
            Slot::QueryB | Slot::EmbedB | Slot::CtrlB | Slot::CtrlGateB | Slot::AttnB | Slot::MemB | Slot::MemGateB | Slot::OutB
        )
    }
}

impl ModelDims {
    pub fn slots(&self) -> Vec<Slot> {
        let mut v = FIXED.to_vec();
        v.extend((0..self.relations).map(Slot::MemRel));
        v.extend((0..self.relations).map(Slot::MemGateRel));
        v
    }

    pub fn index(&self, slot: Slot) -> usize {
        match slot {
            Slot::MemRel(r) => {
                assert!(r < self.relations, "relation {r} out of range");
                FIXED.len() + r
            }
            Slot::MemGateRel(r) => {
                assert!(r < self.relations, "relation {r} out of range");
                FIXED.len() + self.relations + r
            }
            s => FIXED.iter().position(|&f| f == s).expect("fixed slot"),
        }
    }

    pub fn shape(&self, slot: Slot) -> (usize, usize) {
        let (q, x, h, m) = (self.query, self.node, self.controller, self.memory);
        match slot {
            Slot::QueryW => (h, q),
            Slot::EmbedW => (m, x),
            Slot::CtrlW | Slot::CtrlGateW => (h, h),
            Slot::CtrlU | Slot::CtrlGateU => (h, m),
            Slot::QueryB | Slot::CtrlB | Slot::CtrlGateB | Slot::OutW => (1, h),
            Slot::AttnW | Slot::MemW | Slot::MemGateW => (m, m),
            Slot::AttnU | Slot::MemU | Slot::MemGateU => (m, h),
            Slot::EmbedB | Slot::AttnB | Slot::AttnV | Slot::MemB | Slot::MemGateB => (1, m),
            Slot::OutB => (1, 1),
            Slot::MemRel(_) | Slot::MemGateRel(_) => (m, m + self.link),
        }
    }

    pub fn param_count(&self) -> usize {
        self.slots()
            .into_iter()
            .map(|s| {
                let (r, c) = self.shape(s);
                r * c
            })
            .sum()
    }
}

/// All learned tensors of a GraphMem model, shared across hops.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    dims: ModelDims,
    tensors: Vec<Tensor<S>>,
}

impl<S: Scalar> ModelParams<S> {
    /// Glorot-uniform weights (and attention vector `v`), zero biases.
    pub fn init<R: Rng + ?Sized>(dims: ModelDims, rng: &mut R) -> Self {
        let tensors = dims
            .slots()
            .into_iter()
            .map(|s| {
                let (r, c) = dims.shape(s);
                if s.is_bias() {
                    Tensor::zeros(r, c)
                } else {
                    glorot_uniform(r, c, rng)
                }
            })
            .collect();
        Self { dims, tensors }
    }

    pub fn zeros(dims: ModelDims) -> Self {
        let tensors = dims
            .slots()
            .into_iter()
            .map(|s| {
                let (r, c) = dims.shape(s);
                Tensor::zeros(r, c)
            })
            .collect();
        Self { dims, tensors }
    }

    pub fn from_tensors(dims: ModelDims, tensors: Vec<Tensor<S>>) -> Result<Self, CheckpointError> {
        let slots = dims.slots();
        if tensors.len() != slots.len() {
            return Err(CheckpointError::Missing(format!("{} tensors for {} slots", tensors.len(), slots.len())));
        }
        for (s, t) in slots.iter().zip(&tensors) {
            if t.shape() != dims.shape(*s) {
                return Err(CheckpointError::Shape {
                    name: s.name(),
                    found: t.shape(),
                    expected: dims.shape(*s),
                });
            }
        }
        Ok(Self { dims, tensors })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn get(&self, slot: Slot) -> &Tensor<S> {
        &self.tensors[self.dims.index(slot)]
    }

    pub fn get_mut(&mut self, slot: Slot) -> &mut Tensor<S> {
        let i = self.dims.index(slot);
        &mut self.tensors[i]
    }

    pub fn tensors(&self) -> &[Tensor<S>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<S>] {
        &mut self.tensors
    }

    pub fn names(&self) -> Vec<String> {
        self.dims.slots().into_iter().map(Slot::name).collect()
    }

    pub fn cast<T: Scalar>(&self) -> ModelParams<T> {
        ModelParams {
            dims: self.dims,
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }
}

impl ModelParams<f64> {
    pub fn write_checkpoint<W: Write>(&self, w: W) -> Result<(), CheckpointError> {
        let names = self.names();
        let entries: Vec<_> = names.into_iter().zip(self.tensors.iter()).collect();
        write_checkpoint(w, &entries)
    }

    /// Reads a checkpoint, inferring the model dimensions from tensor shapes.
    pub fn read_checkpoint<R: Read>(r: R) -> Result<Self, CheckpointError> {
        let entries = read_checkpoint(r)?;
        let find = |name: &str| {
            entries
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t)
                .ok_or_else(|| CheckpointError::Missing(name.to_string()))
        };
        let query_w = find("query.w")?;
        let embed_w = find("embed.w")?;
        let relations = (0..).take_while(|r| find(&Slot::MemRel(*r).name()).is_ok()).count();
        let memory = embed_w.rows();
        let link = match relations {
            0 => 0,
            _ => find("memory.rel1")?.cols().saturating_sub(memory),
        };
        let dims = ModelDims {
            query: query_w.cols(),
            node: embed_w.cols(),
            link,
            relations,
            memory,
            controller: query_w.rows(),
        };
        let tensors = dims
            .slots()
            .into_iter()
            .map(|s| find(&s.name()).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_tensors(dims, tensors)
    }
}
