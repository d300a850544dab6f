//! Dense `f64` tensors, a tape-based reverse-mode autodiff graph, named
//! parameter storage with a JSON + binary checkpoint format, and Adam.

mod adam;
mod error;
mod graph;
mod params;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use error::{Result, TensorError};
pub use graph::{Graph, Var};
pub use params::{decode_checkpoint, CheckpointManifest, ParamEntry, ParamId, ParamStore, CHECKPOINT_FORMAT};
pub use tensor::{cross_entropy, gelu, gelu_grad, log_softmax_rows, sigmoid, softmax_rows, Tensor};
