pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod linops;
pub mod rng;
pub mod sampling;
pub mod solver;
pub mod transforms;

pub use error::{Error, Result};
pub use linops::{DenseOperator, FrameBundle, C64};
