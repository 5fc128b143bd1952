//! Design, drive and aiming tools for speaker-driven air vortex ring
//! generators, with models of hit accuracy and notification outcomes.

pub mod accuracy;
pub mod data;
pub mod device;
pub mod error;
pub mod physics;
pub mod planner;
pub mod service;
pub mod sim;
pub mod targeting;
pub mod vision;
pub mod waveform;

pub use error::{Error, Result};
