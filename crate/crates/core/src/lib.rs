//! Simulation and calibration of time-interleaved ADCs whose offset, gain
//! and timing mismatches drift over time.
//!
//! A pilot tone replaces the input at every `M_h`-th sample. One extended
//! Kalman filter per sub-ADC tracks the mismatches from those pilot
//! samples; the desired signal is then corrected and its missing samples are
//! rebuilt by Gauss–Seidel iteration.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod comm;
pub mod compensation;
pub mod ekf;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod experiments;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Execution;
