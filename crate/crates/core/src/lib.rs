pub mod bench;
pub mod black;
pub mod data;
pub mod error;
pub mod explain;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod train;
pub mod white;

pub use error::{Error, Result};
