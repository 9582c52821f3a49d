//! Steady-state short-circuit equilibria of networks with current-limited
//! voltage-source converters.
//!
//! The passive network is modelled in symmetrical components; every
//! converter is a set of constraint equations whose form depends on its
//! control mode and current-saturation state. [`saturation::run_algorithm`]
//! searches the saturation states for a consistent equilibrium and
//! [`saturation::exhaustive_oracle`] enumerates them all.

pub mod converter;
pub mod elements;
pub mod error;
pub mod network;
pub mod phasor;
pub mod random;
pub mod saturation;
pub mod solver;
pub mod system;
pub mod io;

pub use error::ModelError;
