//! Two-stage motion prediction with privileged-knowledge distillation.
//!
//! Stage one trains an interpolation network that sees observed poses and a
//! short window of poses *after* the prediction horizon; its privileged
//! encoder yields a latent representation. Stage two trains a prediction
//! network from observations alone, with an extra encoder (the simulator)
//! pulled towards that frozen representation.

pub mod cli;
pub mod dataset;
pub mod dct;
pub mod error;
pub mod evaluation;
pub mod gcn;
pub mod losses;
pub mod networks;
pub mod preprocess;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
