pub mod ablation;
pub mod augment;
pub mod checks;
pub mod cli;
pub mod data;
pub mod diffcore;
pub mod error;
pub mod losses;
pub mod model;
pub mod preprocess;
pub mod trainer;

pub use error::{Error, Result};
