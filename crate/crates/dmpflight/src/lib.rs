//! Dynamic movement primitives with contraction-based coupling.
//!
//! The crate learns trajectory primitives from demonstrations, retargets
//! them in space and time, couples them through partial contraction, and
//! validates the result on a simulated 3DOF helicopter tracking the
//! generated reference.
//!
//! Modules:
//! - [`dmp`]: discrete, rhythmic and filtered primitive dynamics
//! - [`learning`]: weight extraction and demonstration segmentation
//! - [`coupling`]: one-way/two-way coupling, concatenation, weight blending
//! - [`contraction`]: numerical contraction certificates along trajectories
//! - [`heli`]: 3DOF helicopter dynamics and tracking controller
//! - [`io`]: CSV trajectories, parameter files, scenario configs
//! - [`pipeline`]: the end-to-end obstacle-maneuver pipeline

pub mod contraction;
pub mod coupling;
pub mod dmp;
pub mod error;
pub mod heli;
pub mod integrate;
pub mod io;
pub mod learning;
pub mod pipeline;
pub mod synth;
pub mod trajectory;

pub use error::{Error, Result};
pub use trajectory::Trajectory;
