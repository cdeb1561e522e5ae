//! Time-optimal speed profiles for differential-drive robots along a fixed path.
//!
//! The pipeline fits a clamped B-spline through waypoints, samples it at a fixed
//! parameter resolution, turns the samples into a second-order cone program over
//! node speeds, and rebuilds a timed trajectory from the optimal speeds.
//!
//! Constraints handled: linear speed, linear acceleration, normal (centripetal)
//! acceleration, piecewise-constant angular rate, and per-wheel speed limits.

pub mod discretize;
pub mod error;
pub mod format;
pub mod kinematics;
mod linalg;
pub mod lissajous;
pub mod pipeline;
pub mod solver;
pub mod spline;
pub mod trajectory;

pub use error::{Error, Result};
