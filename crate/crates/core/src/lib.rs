//! Hard-Concrete gated attention heads on a toy transformer encoder:
//! multi-task training with loss balancing, static and dynamic head pruning,
//! parameter-free head probing, and utilization analytics.

pub mod analysis;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod gates;
pub mod heads;
pub mod model;
pub mod probes;
pub mod rng;
pub mod task;
pub mod trainer;

pub use error::{LabError, Result};
pub use task::Task;
