pub mod error;
pub mod numerics;

pub use error::{Error, Result};
pub mod bound;
pub mod np;
pub mod awgn;
pub mod expnoise;
pub mod dispersion;
pub mod mimo;
