pub mod arith;
pub mod cover;
pub mod error;
pub mod poly;
pub mod ramify;
pub mod stats;

pub use error::{Error, Result};
