//! Madelung decomposition, quantum potential, and exact, semiclassical and
//! eigenbasis propagation of 1D wave functions.
pub mod eigenbasis;
pub mod error;
pub mod grid;
pub mod interp;
pub mod madelung;
pub mod scenarios;
pub mod schrodinger;
pub mod semiclassical;
pub mod states;

pub use error::{Error, Result};
