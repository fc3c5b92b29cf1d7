//! Dense linear algebra, activations, dropout, reverse-mode gradients and the
//! finite-difference oracle that certifies them.

mod checkpoint;
mod gradcheck;
mod init;
mod ops;
mod scalar;
mod tape;
mod tensor;

use thiserror::Error;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{finite_difference_gradient, max_relative_error};
pub use init::glorot_uniform;
pub use ops::{
    affine, concat, cross_entropy, dropout, dropout_mask, relu, relu_scalar, sigmoid, sigmoid_scalar, softmax, tanh,
};
pub use scalar::Scalar;
pub use tape::{Gradients, Tape, Var, PROB_CLAMP};
pub use tensor::{ShapeError, Tensor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("softmax of an empty vector")]
    EmptySoftmax,
    #[error("dropout rate {0} outside [0, 1)")]
    DropoutRate(f64),
}
