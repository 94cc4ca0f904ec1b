pub mod error;
pub mod control;
pub mod diffusion;
pub mod evolution;
pub mod function_space;
pub mod harness;
pub mod linear;
pub mod resolvent;
pub mod semilinear;

pub use error::{Error, Result};
