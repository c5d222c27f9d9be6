//! Dense matrices, reverse-mode differentiation and the Adam update.

mod adam;
mod graph;
mod mat;
mod store;

pub use adam::Adam;
pub use graph::{Gradients, Graph, NodeId, Reduction};
pub use mat::Mat;
pub use store::{ParamStore, Parameters, CHECKPOINT_EXT, MAGIC};
