//! TI-ADC sampling model.
//!
//! `M` sub-ADCs sample in rotation; sample `n` is taken by sub-ADC `n mod M`.
//! Every `M_h`-th sampling instant the converter ignores the desired input
//! and samples a receiver-generated pilot tone instead, which leaves a
//! missing sample in the desired stream. All times are normalized to the
//! aggregate sample period (`T = 1`).

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset, gain deviation and timing mismatch of one sub-ADC.
///
/// `phi` is a fraction of the sample period; the effective gain is `1 + beta`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MismatchState {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
}

impl MismatchState {
    pub const ZERO: MismatchState = MismatchState {
        alpha: 0.0,
        beta: 0.0,
        phi: 0.0,
    };

    pub const fn new(alpha: f64, beta: f64, phi: f64) -> Self {
        Self { alpha, beta, phi }
    }

    pub fn gain(&self) -> f64 {
        1.0 + self.beta
    }

    /// `alpha + (1 + beta) * value`, the amplitude part of the mismatch.
    pub fn apply(&self, value: f64) -> f64 {
        self.alpha + self.gain() * value
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.alpha, self.beta, self.phi)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn component(&self, index: usize) -> f64 {
        match index {
            0 => self.alpha,
            1 => self.beta,
            2 => self.phi,
            _ => panic!("mismatch component index {index} out of range"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi.abs() < 0.5) {
            return Err(Error::invalid(
                "phi",
                format!("|phi| = {} must be < 0.5", self.phi.abs()),
            ));
        }
        if self.gain() == 0.0 {
            return Err(Error::invalid("beta", "1 + beta must be nonzero"));
        }
        Ok(())
    }
}

/// Initial mismatch of the four-sub-ADC reference setup.
pub const DEFAULT_INITIAL_MISMATCH: [MismatchState; 4] = [
    MismatchState::new(-0.03, 0.05, -0.01),
    MismatchState::new(0.05, -0.04, -0.05),
    MismatchState::new(-0.08, 0.02, 0.04),
    MismatchState::new(-0.02, -0.09, -0.03),
];

/// Geometry of the interleaved converter and its pilot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiAdcConfig {
    /// Number of sub-ADCs `M`.
    pub sub_adcs: usize,
    /// Pilot period `M_h` in TI-ADC samples.
    pub pilot_period: usize,
    /// Band-limiting parameter: the desired signal occupies `|omega| < tau * pi`.
    pub tau: f64,
    /// Number of pilot instants `N`.
    pub pilot_count: usize,
    /// Normalized pilot angular frequency `omega_h` (rad/sample).
    pub pilot_omega: f64,
    pub pilot_amplitude: f64,
}

impl Default for TiAdcConfig {
    fn default() -> Self {
        Self::with_default_pilot(4, 17, 0.8, 10_000)
    }
}

impl TiAdcConfig {
    /// Pilot placed at `0.8 * pi / (M * M_h)`, inside its band limit.
    pub fn with_default_pilot(sub_adcs: usize, pilot_period: usize, tau: f64, pilot_count: usize) -> Self {
        Self {
            sub_adcs,
            pilot_period,
            tau,
            pilot_count,
            pilot_omega: default_pilot_omega(sub_adcs, pilot_period),
            pilot_amplitude: 1.0,
        }
    }

    /// Total number of TI-ADC samples spanned by the pilot instants.
    pub fn sample_count(&self) -> usize {
        self.pilot_count * self.pilot_period
    }

    pub fn is_pilot_instant(&self, n: usize) -> bool {
        n.is_multiple_of(self.pilot_period)
    }

    /// Zero-based sub-ADC that takes TI-ADC sample `n`.
    pub fn sub_adc_of_sample(&self, n: usize) -> usize {
        n % self.sub_adcs
    }

    /// Zero-based sub-ADC that samples the pilot at pilot instant `r`.
    pub fn sub_adc_of_pilot(&self, r: usize) -> usize {
        (r * self.pilot_period) % self.sub_adcs
    }

    pub fn pilot_band_limit(&self) -> f64 {
        PI / (self.sub_adcs * self.pilot_period) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.sub_adcs < 2 {
            return Err(Error::invalid("M", format!("need M >= 2, got {}", self.sub_adcs)));
        }
        if self.pilot_period < 2 {
            return Err(Error::invalid(
                "M_h",
                format!("need M_h >= 2, got {}", self.pilot_period),
            ));
        }
        if self.pilot_count < 1 {
            return Err(Error::invalid("N", "need N >= 1"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::invalid("tau", format!("need 0 < tau < 1, got {}", self.tau)));
        }
        check_feasibility_strict(self.tau, self.pilot_period)?;
        let limit = self.pilot_band_limit();
        if !(self.pilot_omega > 0.0) || self.pilot_omega > limit * (1.0 + 1e-12) {
            return Err(Error::PilotBandLimit {
                omega: self.pilot_omega,
                limit,
            });
        }
        if gcd(self.sub_adcs, self.pilot_period) != 1 {
            return Err(Error::PilotCoverage {
                sub_adcs: self.sub_adcs,
                pilot_period: self.pilot_period,
            });
        }
        if !(self.pilot_amplitude > 0.0) {
            return Err(Error::invalid("pilot_amplitude", "must be positive"));
        }
        Ok(())
    }

    /// Continuous-time pilot `h(t) = A cos(omega_h t)`.
    pub fn pilot_at(&self, t: f64) -> f64 {
        self.pilot_amplitude * (self.pilot_omega * t).cos()
    }
}

pub fn default_pilot_omega(sub_adcs: usize, pilot_period: usize) -> f64 {
    0.8 * PI / (sub_adcs * pilot_period) as f64
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// One-based sub-ADC index `mod(n, M) + 1`.
pub fn sub_adc_index(n: usize, sub_adcs: usize) -> usize {
    n % sub_adcs + 1
}

/// `1 - tau >= 1/M_h`: enough out-of-band room to recover the missing samples.
pub fn check_feasibility(tau: f64, pilot_period: usize) -> bool {
    check_feasibility_strict(tau, pilot_period).is_ok()
}

fn check_feasibility_strict(tau: f64, pilot_period: usize) -> Result<()> {
    let slack = 1.0 - tau;
    let bound = 1.0 / pilot_period as f64;
    // Equality must pass for exactly representable boundary cases (tau = 0.5, M_h = 2).
    if slack + 1e-12 >= bound {
        Ok(())
    } else {
        Err(Error::Infeasible {
            tau,
            pilot_period,
            slack,
            bound,
        })
    }
}

/// A continuous-time input that can be evaluated at any (fractional) instant.
pub trait AnalogSignal {
    fn value_at(&self, t: f64) -> f64;
}

/// Sum of cosines `sum_i a_i cos(omega_i t + p_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultitoneSignal {
    pub amplitudes: Vec<f64>,
    pub omegas: Vec<f64>,
    pub phases: Vec<f64>,
}

impl MultitoneSignal {
    pub fn new(amplitudes: Vec<f64>, omegas: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != omegas.len() || omegas.len() != phases.len() {
            return Err(Error::LengthMismatch {
                context: "multitone amplitudes/omegas/phases",
                left: amplitudes.len(),
                right: omegas.len(),
            });
        }
        Ok(Self {
            amplitudes,
            omegas,
            phases,
        })
    }

    pub fn single_tone(omega: f64) -> Self {
        Self {
            amplitudes: vec![1.0],
            omegas: vec![omega],
            phases: vec![0.0],
        }
    }

    /// Ten unit cosines at `omega_i = 2 i pi / 25`, `i = 1..=10`.
    pub fn reference() -> Self {
        let omegas = (1..=10).map(|i| 2.0 * i as f64 * PI / 25.0).collect::<Vec<_>>();
        Self {
            amplitudes: vec![1.0; omegas.len()],
            phases: vec![0.0; omegas.len()],
            omegas,
        }
    }

    pub fn max_omega(&self) -> f64 {
        self.omegas.iter().fold(0.0, |m: f64, w| m.max(w.abs()))
    }

    pub fn is_band_limited(&self, tau: f64) -> bool {
        self.max_omega() <= tau * PI * (1.0 + 1e-12)
    }

    pub fn samples(&self, len: usize) -> Vec<f64> {
        (0..len).map(|n| self.value_at(n as f64)).collect()
    }
}

impl AnalogSignal for MultitoneSignal {
    fn value_at(&self, t: f64) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.omegas)
            .zip(&self.phases)
            .map(|((a, w), p)| a * (w * t + p).cos())
            .sum()
    }
}

/// Mismatch state of every sub-ADC at every pilot instant.
///
/// The state is piecewise constant between pilot instants: sample `n`
/// sees the state of its sub-ADC at pilot instant `n / M_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchSchedule {
    sub_adcs: usize,
    pilot_period: usize,
    states: Vec<MismatchState>,
}

impl MismatchSchedule {
    pub fn new(sub_adcs: usize, pilot_period: usize) -> Self {
        Self {
            sub_adcs,
            pilot_period,
            states: Vec::new(),
        }
    }

    /// The same states held for `instants` pilot instants.
    pub fn constant(states: &[MismatchState], pilot_period: usize, instants: usize) -> Self {
        let mut s = Self::new(states.len(), pilot_period);
        for _ in 0..instants {
            s.push_instant(states);
        }
        s
    }

    pub fn push_instant(&mut self, states: &[MismatchState]) {
        assert_eq!(states.len(), self.sub_adcs, "one state per sub-ADC");
        self.states.extend_from_slice(states);
    }

    pub fn sub_adcs(&self) -> usize {
        self.sub_adcs
    }

    pub fn pilot_period(&self) -> usize {
        self.pilot_period
    }

    pub fn instants(&self) -> usize {
        self.states.len() / self.sub_adcs
    }

    pub fn at(&self, instant: usize, sub_adc: usize) -> MismatchState {
        self.states[instant * self.sub_adcs + sub_adc]
    }

    pub fn instant(&self, instant: usize) -> &[MismatchState] {
        &self.states[instant * self.sub_adcs..(instant + 1) * self.sub_adcs]
    }

    /// State in force for TI-ADC sample `n`.
    pub fn for_sample(&self, n: usize) -> MismatchState {
        let r = (n / self.pilot_period).min(self.instants().saturating_sub(1));
        self.at(r, n % self.sub_adcs)
    }
}

/// Pilot sample at pilot instant `r`: `alpha + (1 + beta) h(r M_h - phi)`.
pub fn sample_pilot(r: usize, theta: &MismatchState, cfg: &TiAdcConfig) -> f64 {
    theta.apply(cfg.pilot_at((r * cfg.pilot_period) as f64 - theta.phi))
}

/// Desired-signal sample at TI-ADC instant `n`: `alpha + (1 + beta) x(n - phi)`.
pub fn sample_desired<S: AnalogSignal + ?Sized>(n: usize, theta: &MismatchState, x: &S) -> f64 {
    theta.apply(x.value_at(n as f64 - theta.phi))
}

/// Mismatched TI-ADC output `x_bar[n]` for `n in 0..len`, optionally with an
/// additive input disturbance sampled alongside the signal.
pub fn capture<S: AnalogSignal + ?Sized>(
    x: &S,
    truth: &MismatchSchedule,
    len: usize,
    input_noise: Option<&[f64]>,
) -> Vec<f64> {
    (0..len)
        .map(|n| {
            let theta = truth.for_sample(n);
            let noise = input_noise.map_or(0.0, |v| v[n]);
            theta.apply(x.value_at(n as f64 - theta.phi) + noise)
        })
        .collect()
}

/// Zeroes every sample at `n = r M_h`.
pub fn insert_missing_samples(x_bar: &[f64], pilot_period: usize) -> Result<Vec<f64>> {
    if pilot_period < 2 {
        return Err(Error::invalid(
            "M_h",
            format!("pilot period {pilot_period} leaves no desired samples (need M_h >= 2)"),
        ));
    }
    Ok(x_bar
        .iter()
        .enumerate()
        .map(|(n, &v)| if n % pilot_period == 0 { 0.0 } else { v })
        .collect())
}
