pub mod cli;
pub mod config;
pub mod error;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod position;
pub mod states;
pub mod symmetry;
pub mod verify;

pub use error::{Error, Result};
