//! Local-unitary stabilizer analysis of multipartite quantum states.

pub mod analysis;
pub mod catalog;
pub mod error;
pub mod io;
pub mod linalg;
pub mod separable;
pub mod stabilizer;
pub mod tensor;

pub use error::{Error, Result};
