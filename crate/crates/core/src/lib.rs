//! Pitch-autopilot simulation toolkit for a subsonic tail-controlled
//! missile: sizing calculators, loop blocks, a fixed-step loop simulator,
//! step-response metrics and gain tuning.

pub mod aero_sizing;
pub mod blocks;
pub mod dynamics;
pub mod error;

pub use error::{Error, Result};
pub mod metrics;
pub mod sim;
pub mod config;
pub mod tuner;
