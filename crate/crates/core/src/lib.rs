//! Physical-layer simulation of over-the-air computation (AirComp).
//!
//! Nodes transmit simultaneously so that the multiple access channel adds
//! their signals, and the receiver turns the superposition into a function of
//! the distributed readings. The crate covers function decompositions,
//! channel and impairment models, the modulation schemes, constellation
//! design, OFDM synchronization, power control, MIMO beamforming and a
//! deterministic Monte Carlo engine.

pub mod channel;
pub mod constellation;
pub mod domain;
pub mod error;
pub mod mimo;
pub mod modem;
pub mod ofdm;
pub mod power;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use num_complex::Complex64;
