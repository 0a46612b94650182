//! Tape-based reverse-mode automatic differentiation.
//!
//! Forward computations are recorded on a [`Tape`] as they execute; each
//! call returns a [`Var`] handle. [`Tape::backward`] then walks the tape
//! once in reverse and returns [`Gradients`] for every node that requires
//! one. Gradients reaching a node along several paths are summed.
//!
//! ```
//! use heatcast::autograd::{Tape, Tensor};
//!
//! let mut tape = Tape::new();
//! let x = tape.param(&Tensor::new(&[3], vec![1.0, 2.0, 3.0]).unwrap());
//! let twice = tape.add(x, x).unwrap();
//! let loss = tape.sum(twice);
//! let grads = tape.backward(loss).unwrap();
//! assert_eq!(grads.get(x).unwrap(), &[2.0, 2.0, 2.0]);
//! ```

mod adam;
mod functional;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use functional::{attention_weights, dense, scaled_dot_product_attention};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
