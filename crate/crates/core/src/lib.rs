pub mod error;
pub mod imaging;
pub mod rng;
pub mod scalar;
pub use error::{Error, Result};
