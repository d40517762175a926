//! FIR filters used as rows of the reconstruction system.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Odd-length, non-causal FIR filter: `taps[k + L]` is the coefficient of lag `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.len().is_multiple_of(2) {
            return Err(Error::invalid("taps", format!("length {} is not odd", taps.len())));
        }
        Ok(Self { taps })
    }

    pub fn identity() -> Self {
        Self { taps: vec![1.0] }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn half_length(&self) -> usize {
        self.taps.len() / 2
    }

    pub fn center(&self) -> f64 {
        self.taps[self.half_length()]
    }

    /// Coefficient at lag `k`; zero outside the support.
    pub fn tap(&self, k: isize) -> f64 {
        let l = self.half_length() as isize;
        if k.abs() > l {
            0.0
        } else {
            self.taps[(k + l) as usize]
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.taps.len();
        (0..n / 2).all(|i| self.taps[i] == self.taps[n - 1 - i])
    }

    /// `y[n] = sum_k g[k] x[n - k]`, with `x` zero outside its range.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let l = self.half_length() as isize;
        let len = x.len() as isize;
        (0..len)
            .map(|n| {
                let mut acc = 0.0;
                for k in -l..=l {
                    let j = n - k;
                    if (0..len).contains(&j) {
                        acc += self.taps[(k + l) as usize] * x[j as usize];
                    }
                }
                acc
            })
            .collect()
    }

    /// Frequency response magnitude at `omega`.
    pub fn magnitude_at(&self, omega: f64) -> f64 {
        let l = self.half_length() as isize;
        let (mut re, mut im) = (0.0, 0.0);
        for k in -l..=l {
            let c = self.taps[(k + l) as usize];
            re += c * (omega * k as f64).cos();
            im -= c * (omega * k as f64).sin();
        }
        re.hypot(im)
    }

    /// CSV with header `k,tap`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "tap"])?;
        let l = self.half_length() as isize;
        for k in -l..=l {
            w.write_record([k.to_string(), format!("{:e}", self.tap(k))])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Truncated fractional-delay filter `g[k] = sinc(k - phi)`, `|k| <= half_length`.
pub fn design_fractional_delay(phi: f64, half_length: usize) -> FirFilter {
    let l = half_length as isize;
    FirFilter {
        taps: (-l..=l).map(|k| sinc(k as f64 - phi)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rectangular,
    Hann,
    Hamming,
    Blackman,
}

impl Window {
    /// Window value at lag `k` of a `2L + 1` tap filter.
    pub fn at(self, k: isize, half_length: usize) -> f64 {
        if half_length == 0 {
            return 1.0;
        }
        let x = PI * k as f64 / half_length as f64;
        match self {
            Window::Rectangular => 1.0,
            Window::Hann => 0.5 + 0.5 * x.cos(),
            Window::Hamming => 0.54 + 0.46 * x.cos(),
            Window::Blackman => 0.42 + 0.5 * x.cos() + 0.08 * (2.0 * x).cos(),
        }
    }

    /// Approximate transition width in units of `pi / (2L)` rad/sample.
    pub fn transition_factor(self) -> f64 {
        match self {
            Window::Rectangular => 1.8,
            Window::Hann => 6.2,
            Window::Hamming => 6.6,
            Window::Blackman => 11.0,
        }
    }

    /// Transition width as a fraction of `pi` for a `2L + 1` tap filter.
    pub fn transition_width(self, half_length: usize) -> f64 {
        self.transition_factor() / (2 * half_length) as f64
    }
}

/// How the high-pass cutoff is placed relative to `tau * pi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffPlacement {
    /// Ideal cutoff exactly at `tau * pi`; the window transition straddles it.
    AtBandEdge,
    /// Ideal cutoff raised by one window transition width so that the whole
    /// transition band lies above `tau * pi`.
    AboveBandEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighpassDesign {
    pub window: Window,
    pub placement: CutoffPlacement,
}

impl Default for HighpassDesign {
    fn default() -> Self {
        Self {
            window: Window::Hamming,
            placement: CutoffPlacement::AboveBandEdge,
        }
    }
}

impl HighpassDesign {
    /// Ideal cutoff as a fraction of `pi`.
    pub fn cutoff(&self, tau: f64, half_length: usize) -> f64 {
        match self.placement {
            CutoffPlacement::AtBandEdge => tau,
            CutoffPlacement::AboveBandEdge => tau + self.window.transition_width(half_length),
        }
    }
}

/// Ideal high-pass `delta[k] - c sinc(c k)` with cutoff `c * pi`.
pub fn ideal_highpass_tap(k: isize, cutoff: f64) -> f64 {
    let delta = if k == 0 { 1.0 } else { 0.0 };
    delta - cutoff * sinc(cutoff * k as f64)
}

/// Windowed type I linear-phase high-pass of length `2 half_length + 1`
/// whose stopband covers `|omega| < tau * pi`.
pub fn design_highpass(tau: f64, half_length: usize, design: HighpassDesign) -> Result<FirFilter> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid("tau", format!("need 0 < tau < 1, got {tau}")));
    }
    let cutoff = design.cutoff(tau, half_length);
    if cutoff >= 1.0 {
        return Err(Error::invalid(
            "N_w",
            format!("high-pass of half-length {half_length} leaves no passband above tau = {tau}"),
        ));
    }
    let l = half_length as isize;
    let taps: Vec<f64> = (-l..=l)
        .map(|k| ideal_highpass_tap(k, cutoff) * design.window.at(k, half_length))
        .collect();
    // exact symmetry, independent of rounding in the two halves
    let mut sym = taps.clone();
    for k in 1..=half_length {
        sym[half_length - k] = taps[half_length + k];
    }
    Ok(FirFilter { taps: sym })
}

/// Windowed type I low-pass `c sinc(c k) w[k]` with cutoff `cutoff * pi`,
/// scaled to unit DC gain.
pub fn design_lowpass(cutoff: f64, half_length: usize, window: Window) -> Result<FirFilter> {
    if !(cutoff > 0.0 && cutoff <= 1.0) {
        return Err(Error::invalid("cutoff", format!("need 0 < cutoff <= 1, got {cutoff}")));
    }
    let l = half_length as isize;
    let raw: Vec<f64> = (-l..=l)
        .map(|k| cutoff * sinc(cutoff * k as f64) * window.at(k, half_length))
        .collect();
    let dc: f64 = raw.iter().sum();
    let mut taps: Vec<f64> = raw.iter().map(|t| t / dc).collect();
    for k in 1..=half_length {
        taps[half_length - k] = taps[half_length + k];
    }
    Ok(FirFilter { taps })
}
