pub mod coeffs;
pub mod error;
pub mod fd;
pub mod kinetic;
pub mod potentials;
pub mod symtensor;
pub mod verify;

pub use error::{Error, Result};
