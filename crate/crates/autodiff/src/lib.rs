//! Reverse-mode automatic differentiation over dense row-major 2-D tensors.
//!
//! Operations are recorded on a [`Tape`] as they are evaluated. Calling
//! [`Tape::backward`] on a scalar output walks the tape in reverse and
//! accumulates gradients into every tensor that requires them.
//!
//! The operator set is deliberately small: it covers what graph-attention
//! message passing over edge lists needs (gathers, segment softmax,
//! weighted segment sums) plus the usual dense layers, a GRU cell and causal
//! single-head self-attention built on top of those primitives.
//!
//! ```
//! use sharecast_autodiff::{Tape, Tensor};
//!
//! let mut tape = Tape::<f64>::new();
//! let x = tape.param(Tensor::from_vec([1, 2], vec![0.0, 0.0]).unwrap());
//! let y = tape.sigmoid(x);
//! let loss = tape.sum_all(y);
//! tape.backward(loss).unwrap();
//! assert_eq!(tape.grad(x).unwrap(), &[0.25, 0.25]);
//! ```

mod adam;
mod checkpoint;
mod error;
mod gradcheck;
pub mod nn;
mod params;
mod scalar;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CheckpointEntry, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use error::{AutodiffError, Result};
pub use gradcheck::{grad_check, grad_check_many, relative_error};
pub use params::{Bindings, ParamId, ParamStore};
pub use scalar::{DType, Scalar};
pub use tape::{Tape, Var, BCE_EPS};
pub use tensor::{Shape, Tensor};
