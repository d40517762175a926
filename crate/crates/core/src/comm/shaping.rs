//! Root-raised-cosine pulse shaping and matched filtering.
//!
//! Symbol `k` is centered at sample `k L`. The pulse is evaluated in
//! continuous time so a TI-ADC can sample the waveform at skewed instants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AnalogSignal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    /// Samples per symbol `L`.
    pub oversampling: usize,
    pub rolloff: f64,
    /// Truncation, in symbols on each side.
    pub span: usize,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            oversampling: 2,
            rolloff: 0.25,
            span: 24,
        }
    }
}

impl PulseConfig {
    /// Upper band edge of the shaped signal as a fraction of `pi`.
    pub fn band_edge(&self) -> f64 {
        (1.0 + self.rolloff) / self.oversampling as f64
    }
}

/// Unit-symbol-period root-raised-cosine impulse response at `t` symbols.
pub fn rrc(t: f64, rolloff: f64) -> f64 {
    let b = rolloff;
    if t == 0.0 {
        return 1.0 - b + 4.0 * b / PI;
    }
    if b > 0.0 {
        let u0 = 1.0 / (4.0 * b);
        let d = t.abs() - u0;
        if d.abs() < EDGE_BAND {
            // quadratic through the limit and two well-conditioned neighbours
            let a = PI / (4.0 * b);
            let f0 = b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
            let (fm, fp) = (rrc_raw(u0 - EDGE_BAND, b), rrc_raw(u0 + EDGE_BAND, b));
            let h = EDGE_BAND;
            return f0 + (fp - fm) / (2.0 * h) * d + (fp - 2.0 * f0 + fm) / (2.0 * h * h) * d * d;
        }
    }
    rrc_raw(t, b)
}

const EDGE_BAND: f64 = 1e-4;

fn rrc_raw(t: f64, b: f64) -> f64 {
    let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
    num / (PI * t * (1.0 - (4.0 * b * t).powi(2)))
}

/// Truncated RRC pulse scaled so that its `L`-spaced shifts sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    cfg: PulseConfig,
    scale: f64,
    /// `p(j)` for integer `j` in `-span L ..= span L`.
    table: Vec<f64>,
    energy: f64,
}

impl Pulse {
    pub fn new(cfg: PulseConfig) -> Result<Self> {
        if cfg.oversampling < 2 {
            return Err(Error::invalid(
                "oversampling",
                format!("need L >= 2, got {}", cfg.oversampling),
            ));
        }
        if !(0.0..=1.0).contains(&cfg.rolloff) {
            return Err(Error::invalid(
                "rolloff",
                format!("need 0 <= rolloff <= 1, got {}", cfg.rolloff),
            ));
        }
        if cfg.span == 0 {
            return Err(Error::invalid("span", "must be positive"));
        }
        let s = cfg.span as isize;
        let shifts: f64 = (-s..=s).map(|k| rrc(k as f64, cfg.rolloff)).sum();
        let mut pulse = Self {
            cfg,
            scale: 1.0 / shifts,
            table: Vec::new(),
            energy: 0.0,
        };
        let h = pulse.half_length() as isize;
        pulse.table = (-h..=h).map(|j| pulse.eval(j as f64)).collect();
        pulse.energy = pulse.table.iter().map(|p| p * p).sum();
        Ok(pulse)
    }

    pub fn config(&self) -> &PulseConfig {
        &self.cfg
    }

    /// Half-length in samples.
    pub fn half_length(&self) -> usize {
        self.cfg.span * self.cfg.oversampling
    }

    /// `E_p = sum_j p(j)^2`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn samples(&self) -> &[f64] {
        &self.table
    }

    fn eval(&self, t: f64) -> f64 {
        if t.abs() > self.half_length() as f64 {
            return 0.0;
        }
        self.scale * rrc(t / self.cfg.oversampling as f64, self.cfg.rolloff)
    }

    /// `p(t)`, `t` in samples.
    pub fn at(&self, t: f64) -> f64 {
        let h = self.half_length() as f64;
        if t.fract() == 0.0 && t.abs() <= h {
            return self.table[(t + h) as usize];
        }
        self.eval(t)
    }
}

/// `s(t) = sum_k a_k p(t - k L)`.
#[derive(Debug, Clone)]
pub struct PamWaveform<'a> {
    pub pulse: &'a Pulse,
    pub symbols: &'a [f64],
}

impl<'a> PamWaveform<'a> {
    pub fn new(pulse: &'a Pulse, symbols: &'a [f64]) -> Self {
        Self { pulse, symbols }
    }

    /// Waveform length in samples.
    pub fn len(&self) -> usize {
        self.symbols.len() * self.pulse.cfg.oversampling
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl AnalogSignal for PamWaveform<'_> {
    fn value_at(&self, t: f64) -> f64 {
        let l = self.pulse.cfg.oversampling as f64;
        let h = self.pulse.half_length() as f64;
        let lo = ((t - h) / l).ceil().max(0.0) as usize;
        let hi = ((t + h) / l).floor();
        if hi < 0.0 || self.symbols.is_empty() {
            return 0.0;
        }
        let hi = (hi as usize).min(self.symbols.len() - 1);
        if lo > hi {
            return 0.0;
        }
        if t.fract() == 0.0 {
            return (lo..=hi)
                .map(|k| self.symbols[k] * self.pulse.at(t - k as f64 * l))
                .sum();
        }
        // Off-grid: walk the symbols with x = t/L - k falling by one per step
        // and rotate the two trigonometric terms instead of re-evaluating them.
        // Near the zero and the removable singularities the rotated terms
        // lose digits, so `rrc` handles those terms.
        let b = self.pulse.cfg.rolloff;
        let (d1, d2) = (PI * (1.0 - b), PI * (1.0 + b));
        let (sd1, cd1) = d1.sin_cos();
        let (sd2, cd2) = d2.sin_cos();
        let x0 = t / l - lo as f64;
        let (mut s1, mut c1) = (PI * x0 * (1.0 - b)).sin_cos();
        let (mut s2, mut c2) = (PI * x0 * (1.0 + b)).sin_cos();
        let mut acc = 0.0;
        for (i, &a) in self.symbols[lo..=hi].iter().enumerate() {
            let x = x0 - i as f64;
            let edge = 4.0 * b * x;
            let v = if x.abs() < 1e-2 || (edge.abs() - 1.0).abs() < 1e-2 {
                rrc(x, b)
            } else {
                (s1 + edge * c2) / (PI * x * (1.0 - edge * edge))
            };
            acc += a * v;
            (s1, c1) = (s1 * cd1 - c1 * sd1, c1 * cd1 + s1 * sd1);
            (s2, c2) = (s2 * cd2 - c2 * sd2, c2 * cd2 + s2 * sd2);
        }
        self.pulse.scale * acc
    }
}

/// `y_k = sum_j x[k L + j] p(j) / E_p` for symbols `first..first + count`.
pub fn matched_filter(x: &[f64], pulse: &Pulse, first: usize, count: usize) -> Vec<f64> {
    let l = pulse.cfg.oversampling;
    let h = pulse.half_length() as isize;
    let p = pulse.samples();
    (first..first + count)
        .map(|k| {
            let c = (k * l) as isize;
            let acc: f64 = (-h..=h)
                .filter_map(|j| {
                    let n = c + j;
                    (n >= 0 && (n as usize) < x.len()).then(|| x[n as usize] * p[(j + h) as usize])
                })
                .sum();
            acc / pulse.energy()
        })
        .collect()
}
