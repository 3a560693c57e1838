pub mod channel;
pub mod dof;
pub mod entropy;
pub mod error;
pub mod extractor;
pub mod gf;
pub mod hash;
pub mod lattice;
pub mod leakage;
pub mod seed;

pub use error::{Error, Result};
