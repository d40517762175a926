//! Front end for the TI-ADC tracking, reconstruction and BER experiments.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod grid;
pub mod selftest;
