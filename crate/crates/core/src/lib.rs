//! Sum-rate bounds and information-inequality verification for binary-input
//! two-receiver broadcast channels.

pub mod cli;
pub mod error;
pub mod info;
pub mod marton;
pub mod sampling;
pub mod search;
pub mod stationarity;
pub mod theorem;

pub use error::{Error, Result};
