//! Joint adaptive signal control and automated-vehicle trajectory
//! optimization for an isolated signalized intersection with mixed automated
//! (AV) and conventional (CV) traffic.

pub mod error;
pub mod scenario;
pub mod follower;
pub mod lto;
pub mod metrics;
pub mod signal;
pub mod sim;
pub mod trajectory;

pub use error::{Error, Result};
