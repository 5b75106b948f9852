//! Simulation and analysis of threefold coincidences between two heralded
//! photon-pair sources whose telecom photons meet in a sum-frequency
//! waveguide.

pub mod analysis;
pub mod calibration;
pub mod clock;
pub mod commands;
pub mod config;
pub mod detector;
pub mod error;
pub mod optics;
pub mod rates;
pub mod report;
pub mod rng;
pub mod sim;
pub mod slot_law;
pub mod source;
pub mod timetag;

pub use error::{Error, Result};
