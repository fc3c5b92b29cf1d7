//! The GraphMem architecture: a query-conditioned controller that attends over
//! a graph-structured memory whose cells exchange messages along typed edges.

mod check;
mod input;
mod model;
mod params;

pub use check::{gradient_check, random_graph, GradCheckOptions, GradCheckReport};
pub use input::{GraphInput, Query, RelationIndex};
pub use model::{
    Embedding, GraphMem, HopState, HopVars, ModelConfig, ModelError, NeighborWeights, Pass, ReadVars, Trace,
};
pub use params::{ModelDims, ModelParams, Slot};
