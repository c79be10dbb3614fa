pub mod counts;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod metrics;
pub mod protocols;
pub mod sources;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};
