pub mod beam;
pub mod cgan;
pub mod dataset;
pub mod distributions;
pub mod error;
pub mod field;
pub mod rng;
pub mod sfem;

pub use error::{Error, Result};
