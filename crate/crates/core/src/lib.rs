//! Link budget, detector noise and range solving for direct time-of-flight
//! Lidars whose receiver is either a linear-mode APD or a SiPM.
//!
//! The pipeline runs scene geometry → optical powers ([`scene`]) → detector
//! trigger SNR ([`apd`], [`sipm`]) → threshold policy ([`tdc`]) → maximum
//! detectable range ([`range`]). [`scenario`] and [`sweep`] wrap that in
//! config files and batch sweeps.

// Validation uses `!(x >= lo)` so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod apd;
pub mod constants;
mod error;
pub mod optimize;
pub mod range;
pub mod scenario;
pub mod scene;
pub mod sipm;
pub mod sweep;
pub mod tdc;

pub use error::{Error, Result};
pub use range::{DetectorChoice, RangeMethod, RangeResult, SipmSnrMode};
pub use scenario::ScenarioConfig;
