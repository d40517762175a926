//! End-to-end QPSK link whose in-phase and quadrature rails are each
//! digitized by their own mismatched TI-ADC.
//!
//! A block carries `frame_symbols` payload symbols per rail between two runs
//! of guard symbols. The guards absorb pulse and filter edge effects and are
//! not counted. Every random quantity of block `b` comes from its own
//! stream, so a block's outcome depends only on `(seed, b)` and the
//! `E_b/N_0` point; runs at different points or with calibration on and off
//! share bits, noise shapes and mismatch trajectories.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::channel::{anti_alias_filter, noise_variance, white_noise};
use super::conv::ConvCode;
use super::qpsk::{qpsk_demap, qpsk_map};
use super::shaping::{matched_filter, PamWaveform, Pulse, PulseConfig};
use crate::compensation::{reconstruct, ReconstructionConfig};
use crate::ekf::{run_bank, simulate_observations, EkfConfig, GainMode, DEFAULT_SIGMA0};
use crate::error::{Error, Result};
use crate::evolution::{Ar1Model, QPrimeLevel};
use crate::exec::Execution;
use crate::model::{
    capture, insert_missing_samples, MismatchSchedule, MismatchState, TiAdcConfig, DEFAULT_INITIAL_MISMATCH,
};
use crate::rng::{stream_rng, trial_stream};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodingMode {
    Uncoded,
    Coded,
}

impl fmt::Display for CodingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodingMode::Uncoded => "uncoded",
            CodingMode::Coded => "coded",
        })
    }
}

/// `On`: pilots, EKF tracking, compensation and GSI reconstruction.
/// `Off`: the raw TI-ADC output, with no pilot inserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Calibration {
    On,
    Off,
}

impl fmt::Display for Calibration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Calibration::On => "on",
            Calibration::Off => "off",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Converter geometry shared by both rails; `pilot_count` is derived per block.
    pub adc: TiAdcConfig,
    pub pulse: PulseConfig,
    pub code: ConvCode,
    pub mode: CodingMode,
    pub calibration: Calibration,
    /// `false` gives ideal sub-ADCs.
    pub mismatch: bool,
    pub model: Ar1Model,
    pub initial: Vec<MismatchState>,
    pub obs_var: f64,
    pub sigma0: f64,
    pub recon: ReconstructionConfig,
    /// Payload symbols per rail and block (uncoded; coded blocks round down
    /// to whole code blocks).
    pub frame_symbols: usize,
    pub guard_symbols: usize,
    pub noise_filter_half_length: usize,
    /// Exchanges the random streams of the two rails.
    pub swap_rails: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            adc: TiAdcConfig::default(),
            pulse: PulseConfig::default(),
            code: ConvCode::default(),
            mode: CodingMode::Uncoded,
            calibration: Calibration::On,
            mismatch: true,
            model: Ar1Model {
                psi: 0.99f64.sqrt(),
                q_prime: QPrimeLevel::Pct5.covariance(),
            },
            initial: DEFAULT_INITIAL_MISMATCH.to_vec(),
            obs_var: 5e-5,
            sigma0: DEFAULT_SIGMA0,
            recon: ReconstructionConfig::default(),
            frame_symbols: 85_000,
            guard_symbols: 64,
            noise_filter_half_length: 51,
            swap_rails: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        let probe = TiAdcConfig {
            pilot_count: 1,
            ..self.adc.clone()
        };
        probe.validate()?;
        self.code.validate()?;
        self.model.validate()?;
        self.recon.validate()?;
        if self.pulse.band_edge() > self.adc.tau {
            return Err(Error::invalid(
                "oversampling",
                format!(
                    "shaped band edge {}*pi exceeds tau*pi = {}*pi",
                    self.pulse.band_edge(),
                    self.adc.tau
                ),
            ));
        }
        if self.initial.len() != self.adc.sub_adcs {
            return Err(Error::LengthMismatch {
                context: "initial mismatch vs sub-ADC count",
                left: self.initial.len(),
                right: self.adc.sub_adcs,
            });
        }
        if self.frame_symbols == 0 {
            return Err(Error::invalid("frame_symbols", "must be positive"));
        }
        if self.guard_symbols < self.pulse.span {
            return Err(Error::invalid("guard_symbols", "must cover at least the pulse span"));
        }
        Ok(())
    }

    pub fn code_rate(&self) -> f64 {
        match self.mode {
            CodingMode::Uncoded => 1.0,
            CodingMode::Coded => 0.5,
        }
    }

    /// Information bits carried by one block.
    pub fn info_bits_per_block(&self) -> usize {
        match self.mode {
            CodingMode::Uncoded => 2 * self.frame_symbols,
            CodingMode::Coded => self.code_blocks_per_frame() * self.code.block_length,
        }
    }

    fn code_blocks_per_frame(&self) -> usize {
        (2 * self.frame_symbols / self.code.coded_block_length()).max(1)
    }

    /// Payload symbols per rail actually transmitted in one block.
    pub fn payload_symbols(&self) -> usize {
        match self.mode {
            CodingMode::Uncoded => self.frame_symbols,
            CodingMode::Coded => self.code_blocks_per_frame() * self.code.coded_block_length() / 2,
        }
    }
}

mod purpose {
    pub const BITS: u64 = 0;
    pub const NOISE: [u64; 2] = [1, 2];
    pub const TRAJECTORY: [u64; 2] = [3, 4];
    pub const PILOT_NOISE: [u64; 2] = [5, 6];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockOutcome {
    pub bits: u64,
    pub errors: u64,
}

struct RailInput<'a> {
    symbols: &'a [f64],
    noise_var: f64,
    stream_index: usize,
}

/// Samples recovered on one rail: the calibrated reconstruction, or the raw
/// converter output when calibration is off.
fn receive_rail(cfg: &ChainConfig, pulse: &Pulse, input: RailInput<'_>, seed: u64, block: u64) -> Result<Vec<f64>> {
    let len = input.symbols.len() * cfg.pulse.oversampling;
    let wave = PamWaveform::new(pulse, input.symbols);
    let rail = input.stream_index;

    let mut noise_rng = stream_rng(seed, trial_stream(block, purpose::NOISE[rail]));
    let white = white_noise(input.noise_var, len, &mut noise_rng);
    let noise = anti_alias_filter(cfg.adc.tau, cfg.noise_filter_half_length)?.apply(&white);

    let period = cfg.adc.pilot_period;
    let instants = len.div_ceil(period);
    let adc = TiAdcConfig {
        pilot_count: instants,
        ..cfg.adc.clone()
    };
    let truth = if cfg.mismatch {
        let mut rng = stream_rng(seed, trial_stream(block, purpose::TRAJECTORY[rail]));
        cfg.model.simulate(&cfg.initial, period, instants, &mut rng)
    } else {
        MismatchSchedule::constant(&vec![MismatchState::ZERO; cfg.adc.sub_adcs], period, instants)
    };
    let x_bar = capture(&wave, &truth, len, Some(&noise));
    match cfg.calibration {
        Calibration::Off => Ok(x_bar),
        Calibration::On => {
            let mut rng = stream_rng(seed, trial_stream(block, purpose::PILOT_NOISE[rail]));
            let pilots = simulate_observations(&truth, &adc, cfg.obs_var, &mut rng);
            let ekf = EkfConfig::matched(&cfg.model, cfg.obs_var, cfg.sigma0);
            let run = run_bank(&pilots, &ekf, &adc, GainMode::Kalman)?;
            let x_tilde = insert_missing_samples(&x_bar, period)?;
            reconstruct(&x_tilde, &run.estimates, &adc, &cfg.recon)
        }
    }
}

/// Transmits and detects one block.
pub fn run_block(cfg: &ChainConfig, ebno_db: f64, seed: u64, block: u64) -> Result<BlockOutcome> {
    let pulse = Pulse::new(cfg.pulse)?;
    let noise_var = noise_variance(ebno_db, pulse.energy(), cfg.code_rate())?;
    let mut bit_rng = stream_rng(seed, trial_stream(block, purpose::BITS));
    let info: Vec<u8> = (0..cfg.info_bits_per_block())
        .map(|_| bit_rng.random::<bool>() as u8)
        .collect();
    let payload_bits = match cfg.mode {
        CodingMode::Uncoded => info.clone(),
        CodingMode::Coded => cfg.code.encode_blocks(&info)?,
    };
    let guard_bits = 2 * cfg.guard_symbols;
    let mut tx_bits: Vec<u8> = (0..guard_bits).map(|_| bit_rng.random::<bool>() as u8).collect();
    tx_bits.extend_from_slice(&payload_bits);
    tx_bits.extend((0..guard_bits).map(|_| bit_rng.random::<bool>() as u8));
    let (sym_i, sym_q) = qpsk_map(&tx_bits)?;

    let streams = if cfg.swap_rails { [1, 0] } else { [0, 1] };
    let payload = cfg.payload_symbols();
    let mut detected = Vec::with_capacity(2);
    for (symbols, stream_index) in [(&sym_i, streams[0]), (&sym_q, streams[1])] {
        let rx = receive_rail(
            cfg,
            &pulse,
            RailInput {
                symbols,
                noise_var,
                stream_index,
            },
            seed,
            block,
        )?;
        detected.push(matched_filter(&rx, &pulse, cfg.guard_symbols, payload));
    }
    let hard = qpsk_demap(&detected[0], &detected[1]);
    let decoded = match cfg.mode {
        CodingMode::Uncoded => hard,
        CodingMode::Coded => cfg.code.decode_blocks(&hard)?,
    };
    let errors = decoded.iter().zip(&info).filter(|(a, b)| a != b).count() as u64;
    Ok(BlockOutcome {
        bits: info.len() as u64,
        errors,
    })
}

/// Error-count stopping rule, checked after each batch of blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_bits: u64,
    /// Blocks per batch; fixed so the stopping point never depends on threads.
    pub batch: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_errors: 100,
            max_bits: 2_000_000,
            batch: 4,
        }
    }
}

impl StopRule {
    /// Exactly `bits` (rounded up to whole blocks), whatever the error count.
    pub fn fixed_bits(bits: u64) -> Self {
        Self {
            min_errors: u64::MAX,
            max_bits: bits,
            batch: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub ebno_db: f64,
    pub mode: CodingMode,
    pub calibration: Calibration,
    pub bits: u64,
    pub errors: u64,
    pub blocks: u64,
    pub seed: u64,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }
}

pub fn run_ber_point(cfg: &ChainConfig, ebno_db: f64, seed: u64, stop: &StopRule, exec: Execution) -> Result<BerPoint> {
    cfg.validate()?;
    if stop.batch == 0 {
        return Err(Error::invalid("batch", "must be positive"));
    }
    let mut point = BerPoint {
        ebno_db,
        mode: cfg.mode,
        calibration: cfg.calibration,
        bits: 0,
        errors: 0,
        blocks: 0,
        seed,
    };
    while point.errors < stop.min_errors && point.bits < stop.max_bits {
        let ids: Vec<u64> = (point.blocks..point.blocks + stop.batch as u64).collect();
        let outcomes = exec.map_collect(&ids, |&b| run_block(cfg, ebno_db, seed, b));
        for outcome in outcomes {
            let o = outcome?;
            point.bits += o.bits;
            point.errors += o.errors;
            point.blocks += 1;
        }
    }
    Ok(point)
}
