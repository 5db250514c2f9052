pub mod covariance;
pub mod ensemble;
pub mod error;
pub mod exterior;
pub mod linalg;
pub mod par;
pub mod poly;
pub mod probability;
pub mod quad;
pub mod ring;
pub mod super_calculus;

pub use error::{Error, Result};
