pub mod config;
pub mod error;
pub mod family;
pub mod grid;
pub mod hartree;
pub mod hermite;
pub mod io;
pub mod modspace;
pub mod solver;
pub mod symbols;
pub mod verify;

pub use error::{Error, Result};
