//! Graph memory networks for molecular activity classification.
//!
//! The numeric core is generic over [`numerics::Scalar`] (`f32` or `f64`);
//! training, checkpoints and the CLI use the `f64` aliases below.

pub mod fingerprint;
pub mod graphmem;
pub mod kv;
pub mod molgraph;
pub mod numerics;
pub mod training;

pub type Tensor64 = numerics::Tensor<f64>;
pub type Tensor32 = numerics::Tensor<f32>;
pub type Tape64 = numerics::Tape<f64>;
pub type ModelParams64 = graphmem::ModelParams<f64>;
pub type ModelParams32 = graphmem::ModelParams<f32>;
pub type GraphMem64 = graphmem::GraphMem<f64>;
pub type GraphMem32 = graphmem::GraphMem<f32>;
pub type GraphInput64 = graphmem::GraphInput<f64>;
pub type Query64 = graphmem::Query<f64>;
