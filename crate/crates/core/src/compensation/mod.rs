//! Mismatch compensation and missing-sample reconstruction.
//!
//! Offset and gain are undone sample by sample. Timing mismatch and the
//! missing pilot-instant samples are handled together: every sample becomes
//! one row of a banded system (a fractional-delay filter on ordinary rows,
//! a high-pass filter on pilot rows, whose output for a band-limited input
//! is ~0) that Gauss–Seidel sweeps solve without a matrix inverse.

pub mod filters;
pub mod gsi;

use serde::{Deserialize, Serialize};

pub use filters::{
    design_fractional_delay, design_highpass, design_lowpass, ideal_highpass_tap, sinc, CutoffPlacement, FirFilter,
    HighpassDesign, Window,
};
pub use gsi::{gsi_reconstruct, gsi_reconstruct_traced, residual_norm, RowSystem};

use crate::error::{Error, Result};
use crate::model::{MismatchSchedule, TiAdcConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    /// `N_g`: fractional-delay half-length.
    pub delay_half_length: usize,
    /// `N_w`: high-pass half-length.
    pub highpass_half_length: usize,
    pub iterations: usize,
    pub highpass: HighpassDesign,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            delay_half_length: 20,
            highpass_half_length: 51,
            iterations: 4,
            highpass: HighpassDesign::default(),
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::invalid("gsi_iterations", "need at least one iteration"));
        }
        if self.highpass_half_length == 0 {
            return Err(Error::invalid("N_w", "must be positive"));
        }
        Ok(())
    }
}

/// Minimum usable `|1 + beta_hat|`.
pub const MIN_GAIN: f64 = 1e-6;

/// `(x_tilde[n] - alpha_hat) / (1 + beta_hat)` off pilot instants, zero on them.
pub fn compensate_offset_gain(x_tilde: &[f64], estimates: &MismatchSchedule) -> Result<Vec<f64>> {
    let period = estimates.pilot_period();
    x_tilde
        .iter()
        .enumerate()
        .map(|(n, &v)| {
            if n % period == 0 {
                return Ok(0.0);
            }
            let est = estimates.for_sample(n);
            let gain = est.gain();
            if !(gain.abs() >= MIN_GAIN) {
                return Err(Error::GainDegeneracy {
                    sample: n,
                    gain: gain.abs(),
                });
            }
            Ok((v - est.alpha) / gain)
        })
        .collect()
}

/// Row filter of sample `n`: the high-pass on pilot instants, otherwise the
/// fractional delay of the sub-ADC's current timing estimate.
pub fn combined_filter(
    n: usize,
    estimates: &MismatchSchedule,
    adc: &TiAdcConfig,
    cfg: &ReconstructionConfig,
) -> Result<FirFilter> {
    if adc.is_pilot_instant(n) {
        design_highpass(adc.tau, cfg.highpass_half_length, cfg.highpass)
    } else {
        Ok(design_fractional_delay(
            estimates.for_sample(n).phi,
            cfg.delay_half_length,
        ))
    }
}

/// Row system for a `len`-sample block. Delay filters are shared by all
/// samples of one sub-ADC between two pilot instants.
pub fn build_row_system(
    len: usize,
    estimates: &MismatchSchedule,
    adc: &TiAdcConfig,
    cfg: &ReconstructionConfig,
) -> Result<RowSystem> {
    let mut rows = RowSystem::new();
    let hp = rows.add_filter(design_highpass(adc.tau, cfg.highpass_half_length, cfg.highpass)?);
    let m = estimates.sub_adcs();
    let mut cache: Vec<Option<u32>> = vec![None; estimates.instants() * m];
    let last = estimates.instants().saturating_sub(1);
    for n in 0..len {
        if adc.is_pilot_instant(n) {
            rows.push_row(hp);
            continue;
        }
        let r = (n / adc.pilot_period).min(last);
        let slot = r * m + n % m;
        let handle = match cache[slot] {
            Some(h) => h,
            None => {
                let h = rows.add_filter(design_fractional_delay(
                    estimates.at(r, n % m).phi,
                    cfg.delay_half_length,
                ));
                cache[slot] = Some(h);
                h
            }
        };
        rows.push_row(handle);
    }
    Ok(rows)
}

/// Full compensation of a zero-filled stream `x_tilde`.
pub fn reconstruct(
    x_tilde: &[f64],
    estimates: &MismatchSchedule,
    adc: &TiAdcConfig,
    cfg: &ReconstructionConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let x_comp = compensate_offset_gain(x_tilde, estimates)?;
    let rows = build_row_system(x_tilde.len(), estimates, adc, cfg)?;
    gsi_reconstruct(&x_comp, &rows, cfg.iterations)
}
