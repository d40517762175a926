//! Run configuration: a flat JSON document whose every key is optional.
//! Missing keys take the reference parameter set; unknown keys are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tiadc_core::comm::{ChainConfig, ConvCode, PulseConfig, StopRule};
use tiadc_core::compensation::{CutoffPlacement, HighpassDesign, ReconstructionConfig, Window};
use tiadc_core::ekf::DEFAULT_SIGMA0;
use tiadc_core::evolution::{Ar1Model, QPrimeLevel};
use tiadc_core::experiments::{SweepSpec, TrialSetup};
use tiadc_core::model::{default_pilot_omega, MismatchState, MultitoneSignal, TiAdcConfig, DEFAULT_INITIAL_MISMATCH};
use tiadc_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "M_h")]
    pub m_h: usize,
    pub tau: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Pilot frequency; `None` places it at `0.8 pi / (M M_h)`.
    pub omega_h: Option<f64>,
    pub pilot_amplitude: f64,
    #[serde(rename = "N_g")]
    pub n_g: usize,
    #[serde(rename = "N_w")]
    pub n_w: usize,
    pub gsi_iterations: usize,
    pub highpass_window: Window,
    pub highpass_cutoff: CutoffPlacement,
    #[serde(rename = "R")]
    pub r: f64,
    pub sigma0: f64,
    pub psi2: f64,
    pub qprime_pct: u32,
    /// `[alpha, beta, phi]` per sub-ADC.
    pub initial_mismatch: Vec<[f64; 3]>,
    pub warmup_fraction: f64,
    pub trials: usize,
    pub seed: u64,
    pub psi2_grid: Vec<f64>,
    pub qprime_set: Vec<u32>,
    pub ebno_grid: Vec<f64>,
    pub oversampling: usize,
    pub rolloff: f64,
    pub pulse_span: usize,
    pub frame_symbols: usize,
    pub guard_symbols: usize,
    pub noise_filter_half_length: usize,
    pub code_block_length: usize,
    pub min_errors: u64,
    pub max_bits: u64,
    pub batch: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let chain = ChainConfig::default();
        let stop = StopRule::default();
        Self {
            m: 4,
            m_h: 17,
            tau: 0.8,
            n: 10_000,
            omega_h: None,
            pilot_amplitude: 1.0,
            n_g: 20,
            n_w: 51,
            gsi_iterations: 4,
            highpass_window: Window::Hamming,
            highpass_cutoff: CutoffPlacement::AboveBandEdge,
            r: 5e-5,
            sigma0: DEFAULT_SIGMA0,
            psi2: 0.99,
            qprime_pct: 5,
            initial_mismatch: DEFAULT_INITIAL_MISMATCH
                .iter()
                .map(|s| [s.alpha, s.beta, s.phi])
                .collect(),
            warmup_fraction: 0.1,
            trials: 20,
            seed: 0,
            psi2_grid: vec![0.9, 0.99, 0.999, 0.9999, 1.0],
            qprime_set: vec![5, 10, 15],
            ebno_grid: (0..=10).map(|i| 3.0 * i as f64).collect(),
            oversampling: chain.pulse.oversampling,
            rolloff: chain.pulse.rolloff,
            pulse_span: chain.pulse.span,
            frame_symbols: chain.frame_symbols,
            guard_symbols: chain.guard_symbols,
            noise_filter_half_length: chain.noise_filter_half_length,
            code_block_length: chain.code.block_length,
            min_errors: stop.min_errors,
            max_bits: stop.max_bits,
            batch: stop.batch,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Re-checks every component invariant.
    pub fn validate(&self) -> Result<()> {
        self.trial_setup().validate()?;
        self.model()?;
        self.sweep_spec()?.validate()?;
        self.chain()?.validate()?;
        if !(self.r > 0.0) {
            return Err(Error::invalid(
                "R",
                format!("observation variance must be > 0, got {}", self.r),
            ));
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::invalid("sigma0", format!("must be > 0, got {}", self.sigma0)));
        }
        if self.batch == 0 {
            return Err(Error::invalid("batch", "must be positive"));
        }
        Ok(())
    }

    pub fn adc(&self) -> TiAdcConfig {
        TiAdcConfig {
            sub_adcs: self.m,
            pilot_period: self.m_h,
            tau: self.tau,
            pilot_count: self.n,
            pilot_omega: self.omega_h.unwrap_or_else(|| default_pilot_omega(self.m, self.m_h)),
            pilot_amplitude: self.pilot_amplitude,
        }
    }

    pub fn recon(&self) -> ReconstructionConfig {
        ReconstructionConfig {
            delay_half_length: self.n_g,
            highpass_half_length: self.n_w,
            iterations: self.gsi_iterations,
            highpass: HighpassDesign {
                window: self.highpass_window,
                placement: self.highpass_cutoff,
            },
        }
    }

    pub fn initial(&self) -> Vec<MismatchState> {
        self.initial_mismatch
            .iter()
            .map(|v| MismatchState::new(v[0], v[1], v[2]))
            .collect()
    }

    pub fn qprime(&self) -> Result<QPrimeLevel> {
        QPrimeLevel::from_percent(self.qprime_pct)
    }

    pub fn model(&self) -> Result<Ar1Model> {
        Ar1Model::from_psi2(self.psi2, self.qprime()?.covariance())
    }

    pub fn trial_setup(&self) -> TrialSetup {
        TrialSetup {
            adc: self.adc(),
            recon: self.recon(),
            obs_var: self.r,
            sigma0: self.sigma0,
            initial: self.initial(),
            signal: MultitoneSignal::reference(),
            warmup_fraction: self.warmup_fraction,
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        Ok(SweepSpec {
            psi2_grid: self.psi2_grid.clone(),
            qprime_set: self
                .qprime_set
                .iter()
                .map(|&p| QPrimeLevel::from_percent(p))
                .collect::<Result<_>>()?,
            trials: self.trials,
            seed: self.seed,
        })
    }

    pub fn chain(&self) -> Result<ChainConfig> {
        Ok(ChainConfig {
            adc: self.adc(),
            pulse: PulseConfig {
                oversampling: self.oversampling,
                rolloff: self.rolloff,
                span: self.pulse_span,
            },
            code: ConvCode {
                block_length: self.code_block_length,
                ..ConvCode::default()
            },
            model: self.model()?,
            initial: self.initial(),
            obs_var: self.r,
            sigma0: self.sigma0,
            recon: self.recon(),
            frame_symbols: self.frame_symbols,
            guard_symbols: self.guard_symbols,
            noise_filter_half_length: self.noise_filter_half_length,
            ..ChainConfig::default()
        })
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule {
            min_errors: self.min_errors,
            max_bits: self.max_bits,
            batch: self.batch,
        }
    }
}
