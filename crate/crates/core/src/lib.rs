//! Downlink power control for integrated sensing and communication in
//! cell-free massive MIMO networks.
//!
//! A drop is described by a [`Scenario`]; [`Network`] derives every
//! long-term statistic from it (spatial correlation, MMSE estimation,
//! sensing-beam covariances, SINR coefficients and the effective-SNR
//! matrices). The [`power`] module allocates per-AP power between data
//! streams and sensing beams, and [`harness`] runs multi-drop experiments.

pub mod channels;
pub mod comm;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod network;
pub mod power;
pub mod rng;
pub mod scenario;
pub mod sensing;
pub mod socp;

pub use comm::{PowerAllocation, SinrCoefficients};
pub use error::{Error, Result};
pub use network::Network;
pub use scenario::{Scenario, ScenarioConfig};
pub use sensing::SensingQuadratic;
