//! QPSK link used to measure bit error rates through calibrated TI-ADCs.

pub mod chain;
pub mod channel;
pub mod conv;
pub mod qpsk;
pub mod shaping;

pub use chain::{run_ber_point, run_block, BerPoint, BlockOutcome, Calibration, ChainConfig, CodingMode, StopRule};
pub use channel::{noise_variance, q_function, qpsk_ber_theory};
pub use conv::ConvCode;
pub use qpsk::{qpsk_demap, qpsk_map};
pub use shaping::{matched_filter, PamWaveform, Pulse, PulseConfig};
