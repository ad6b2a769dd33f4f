pub mod body;
pub mod error;
pub mod harness;
pub mod solver;
pub mod sphere;
pub mod verifier;

pub use error::{Error, Result};
