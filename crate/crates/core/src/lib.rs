//! Classical, coined quantum and two-boson walks on graphs, and the
//! quantum-walk diffusion networks built on their measurement statistics.

pub mod bosonic;
pub mod dataset;
pub mod diffusion;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod registry;
pub mod training;
pub mod walk;

pub use error::{Error, Result};
