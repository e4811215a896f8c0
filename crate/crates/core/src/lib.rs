//! Measurement-feedback control of noisy quantum trajectories.
//!
//! A noisy system is measured periodically with unsharp (weak) Kraus
//! measurements. After each measurement a unitary is applied that would map
//! the noiseless reference state's post-measurement branch back onto the
//! reference state. Repeating measurement and feedback pulls the noisy
//! trajectory onto the noiseless one.

pub mod dynamics;
pub mod error;
pub mod feedback;
pub mod harness;
pub mod measurement;
pub mod qmath;
pub mod streams;
pub mod systems;

pub use error::{Error, Result};
