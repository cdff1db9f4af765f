pub mod demand;
pub mod des;
pub mod epi;
pub mod error;
pub mod io;
pub mod network;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
