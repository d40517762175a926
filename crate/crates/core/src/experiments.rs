//! Monte Carlo sweeps over mismatch dynamics and `E_b/N_0`, their metrics
//! and their CSV / metadata output.
//!
//! Trial `t` of a sweep draws from streams keyed by `(seed, t)` only, so all
//! grid points of a sweep see the same random numbers (common random
//! numbers), and a trial's result never depends on scheduling.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::comm::{run_ber_point, BerPoint, Calibration, ChainConfig, CodingMode, StopRule};
use crate::compensation::{reconstruct, ReconstructionConfig};
use crate::ekf::{run_bank, simulate_observations, BankRun, EkfConfig, GainMode, DEFAULT_SIGMA0};
use crate::error::{Error, Result};
use crate::evolution::{Ar1Model, QPrimeLevel};
use crate::exec::Execution;
use crate::model::{
    capture, insert_missing_samples, MismatchSchedule, MismatchState, MultitoneSignal, TiAdcConfig,
    DEFAULT_INITIAL_MISMATCH,
};
use crate::rng::{stream_rng, trial_stream};

/// Value reported for an exactly zero error.
pub const DB_FLOOR: f64 = -150.0;

pub fn to_db(ratio: f64) -> f64 {
    if ratio > 0.0 {
        (10.0 * ratio.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Linear NMSE per parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterNmse {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
}

impl ParameterNmse {
    pub fn to_array(self) -> [f64; 3] {
        [self.alpha, self.beta, self.phi]
    }

    fn from_array(v: [f64; 3]) -> Self {
        Self {
            alpha: v[0],
            beta: v[1],
            phi: v[2],
        }
    }

    pub fn db(self) -> [f64; 3] {
        self.to_array().map(to_db)
    }
}

/// `sum (theta_hat - theta)^2 / sum theta^2` per parameter, pooled over
/// sub-ADCs and the pilot instants from `skip` on.
pub fn nmse_estimation(truth: &MismatchSchedule, estimate: &MismatchSchedule, skip: usize) -> Result<ParameterNmse> {
    if truth.instants() != estimate.instants() || truth.sub_adcs() != estimate.sub_adcs() {
        return Err(Error::LengthMismatch {
            context: "truth vs estimate trajectory",
            left: truth.instants() * truth.sub_adcs(),
            right: estimate.instants() * estimate.sub_adcs(),
        });
    }
    let mut err = [0.0; 3];
    let mut energy = [0.0; 3];
    for r in skip..truth.instants() {
        for m in 0..truth.sub_adcs() {
            let (t, e) = (truth.at(r, m), estimate.at(r, m));
            for p in 0..3 {
                err[p] += (e.component(p) - t.component(p)).powi(2);
                energy[p] += t.component(p).powi(2);
            }
        }
    }
    if energy.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::UndefinedNmse);
    }
    Ok(ParameterNmse::from_array([0, 1, 2].map(|p| err[p] / energy[p])))
}

/// `sum (x_hat - x)^2 / sum x^2` with `edge` samples dropped at each end.
pub fn nmse_reconstruction(x: &[f64], x_hat: &[f64], edge: usize) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::LengthMismatch {
            context: "reference vs reconstruction",
            left: x.len(),
            right: x_hat.len(),
        });
    }
    if x.len() <= 2 * edge {
        return Err(Error::invalid(
            "edge",
            format!("{} samples leave no interior after dropping {edge} per side", x.len()),
        ));
    }
    let range = edge..x.len() - edge;
    let err: f64 = x[range.clone()]
        .iter()
        .zip(&x_hat[range.clone()])
        .map(|(a, b)| (b - a).powi(2))
        .sum();
    let energy: f64 = x[range].iter().map(|a| a * a).sum();
    if !(energy > 0.0) {
        return Err(Error::UndefinedNmse);
    }
    Ok(err / energy)
}

/// Everything about a tracking trial except the mismatch dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSetup {
    pub adc: TiAdcConfig,
    pub recon: ReconstructionConfig,
    /// Observation noise variance `R`.
    pub obs_var: f64,
    pub sigma0: f64,
    pub initial: Vec<MismatchState>,
    pub signal: MultitoneSignal,
    /// Leading fraction of pilot instants left out of the estimation NMSE.
    pub warmup_fraction: f64,
}

impl Default for TrialSetup {
    fn default() -> Self {
        Self {
            adc: TiAdcConfig::default(),
            recon: ReconstructionConfig::default(),
            obs_var: 5e-5,
            sigma0: DEFAULT_SIGMA0,
            initial: DEFAULT_INITIAL_MISMATCH.to_vec(),
            signal: MultitoneSignal::reference(),
            warmup_fraction: 0.1,
        }
    }
}

impl TrialSetup {
    pub fn validate(&self) -> Result<()> {
        self.adc.validate()?;
        self.recon.validate()?;
        if self.initial.len() != self.adc.sub_adcs {
            return Err(Error::LengthMismatch {
                context: "initial mismatch vs sub-ADC count",
                left: self.initial.len(),
                right: self.adc.sub_adcs,
            });
        }
        for s in &self.initial {
            s.validate()?;
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::invalid("warmup_fraction", "need 0 <= fraction < 1"));
        }
        if !self.signal.is_band_limited(self.adc.tau) {
            return Err(Error::invalid(
                "signal",
                format!("highest tone {} exceeds tau*pi", self.signal.max_omega()),
            ));
        }
        Ok(())
    }

    pub fn warmup_instants(&self) -> usize {
        (self.adc.pilot_count as f64 * self.warmup_fraction).floor() as usize
    }
}

mod purpose {
    pub const TRAJECTORY: u64 = 0;
    pub const PILOT_NOISE: u64 = 1;
}

/// All intermediate signals of one trial.
#[derive(Debug, Clone)]
pub struct TrialArtifacts {
    pub truth: MismatchSchedule,
    pub pilots: Vec<f64>,
    pub bank: BankRun,
    /// Mismatch-free samples `x[n]`.
    pub reference: Vec<f64>,
    /// Converter output with zeros at pilot instants.
    pub x_tilde: Vec<f64>,
    pub x_hat: Vec<f64>,
}

pub fn simulate_trial(
    setup: &TrialSetup,
    model: &Ar1Model,
    seed: u64,
    trial: u64,
    gain: GainMode,
) -> Result<TrialArtifacts> {
    setup.validate()?;
    model.validate()?;
    let adc = &setup.adc;
    let mut traj_rng = stream_rng(seed, trial_stream(trial, purpose::TRAJECTORY));
    let truth = model.simulate(&setup.initial, adc.pilot_period, adc.pilot_count, &mut traj_rng);
    let mut obs_rng = stream_rng(seed, trial_stream(trial, purpose::PILOT_NOISE));
    let pilots = simulate_observations(&truth, adc, setup.obs_var, &mut obs_rng);
    let ekf = EkfConfig::matched(model, setup.obs_var, setup.sigma0);
    let bank = run_bank(&pilots, &ekf, adc, gain)?;

    let len = adc.sample_count();
    let reference = setup.signal.samples(len);
    let x_bar = capture(&setup.signal, &truth, len, None);
    let x_tilde = insert_missing_samples(&x_bar, adc.pilot_period)?;
    let x_hat = reconstruct(&x_tilde, &bank.estimates, adc, &setup.recon)?;
    Ok(TrialArtifacts {
        truth,
        pilots,
        bank,
        reference,
        x_tilde,
        x_hat,
    })
}

/// Linear metrics of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub estimation: ParameterNmse,
    pub estimation_with_warmup: ParameterNmse,
    pub reconstruction: f64,
    pub uncompensated: f64,
}

impl TrialResult {
    pub fn from_artifacts(setup: &TrialSetup, a: &TrialArtifacts) -> Result<Self> {
        let edge = setup.recon.highpass_half_length;
        Ok(Self {
            estimation: nmse_estimation(&a.truth, &a.bank.estimates, setup.warmup_instants())?,
            estimation_with_warmup: nmse_estimation(&a.truth, &a.bank.estimates, 0)?,
            reconstruction: nmse_reconstruction(&a.reference, &a.x_hat, edge)?,
            uncompensated: nmse_reconstruction(&a.reference, &a.x_tilde, edge)?,
        })
    }
}

pub fn run_trial(setup: &TrialSetup, model: &Ar1Model, seed: u64, trial: u64) -> Result<TrialResult> {
    let a = simulate_trial(setup, model, seed, trial, GainMode::Kalman)?;
    TrialResult::from_artifacts(setup, &a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub psi2_grid: Vec<f64>,
    pub qprime_set: Vec<QPrimeLevel>,
    pub trials: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.psi2_grid.is_empty() || self.qprime_set.is_empty() {
            return Err(Error::invalid("grid", "psi2 grid and Q' set must be non-empty"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        for &p in &self.psi2_grid {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid("psi2", format!("need 0 <= psi^2 <= 1, got {p}")));
            }
        }
        Ok(())
    }

    /// Grid points in output order: `Q'` outer, `psi^2` inner.
    pub fn points(&self) -> Vec<(f64, QPrimeLevel)> {
        self.qprime_set
            .iter()
            .flat_map(|&q| self.psi2_grid.iter().map(move |&p| (p, q)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Point {
    pub psi2: f64,
    pub qprime: QPrimeLevel,
    pub trials: Vec<TrialResult>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

impl Fig2Point {
    /// Trial-averaged linear NMSE of each parameter.
    pub fn mean_estimation(&self, warmup_excluded: bool) -> ParameterNmse {
        let pick = |t: &TrialResult| {
            if warmup_excluded {
                t.estimation
            } else {
                t.estimation_with_warmup
            }
        };
        ParameterNmse::from_array([0, 1, 2].map(|p| mean(self.trials.iter().map(|t| pick(t).to_array()[p]))))
    }

    pub fn mean_reconstruction(&self) -> f64 {
        mean(self.trials.iter().map(|t| t.reconstruction))
    }

    pub fn mean_uncompensated(&self) -> f64 {
        mean(self.trials.iter().map(|t| t.uncompensated))
    }

    pub fn record(&self, warmup_excluded: bool) -> Fig2Record {
        let [a, b, p] = self.mean_estimation(warmup_excluded).db();
        Fig2Record {
            psi2: self.psi2,
            qprime_pct: self.qprime.percent(),
            trials: self.trials.len(),
            nmse_alpha_db: a,
            nmse_beta_db: b,
            nmse_phi_db: p,
            nmse_recon_db: to_db(self.mean_reconstruction()),
            warmup_excluded,
        }
    }
}

/// One CSV row; NMSE values are averaged in linear scale, then converted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Record {
    pub psi2: f64,
    pub qprime_pct: u32,
    pub trials: usize,
    pub nmse_alpha_db: f64,
    pub nmse_beta_db: f64,
    pub nmse_phi_db: f64,
    pub nmse_recon_db: f64,
    pub warmup_excluded: bool,
}

pub fn run_fig2_sweep(setup: &TrialSetup, spec: &SweepSpec, exec: Execution) -> Result<Vec<Fig2Point>> {
    setup.validate()?;
    spec.validate()?;
    let points = spec.points();
    let models = points
        .iter()
        .map(|&(p, q)| Ar1Model::from_psi2(p, q.covariance()))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|i| (0..spec.trials as u64).map(move |t| (i, t)))
        .collect();
    let results = exec.map_collect(&jobs, |&(i, t)| run_trial(setup, &models[i], spec.seed, t));
    let mut out: Vec<Fig2Point> = points
        .iter()
        .map(|&(psi2, qprime)| Fig2Point {
            psi2,
            qprime,
            trials: Vec::with_capacity(spec.trials),
        })
        .collect();
    for (&(i, _), r) in jobs.iter().zip(results) {
        out[i].trials.push(r?);
    }
    Ok(out)
}

/// Flattening check on the two highest `E_b/N_0` points of one curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorCheck {
    pub mode: CodingMode,
    pub calibration: Calibration,
    pub ebno_low_db: f64,
    pub ebno_high_db: f64,
    pub ber_low: f64,
    pub ber_high: f64,
    /// Both BERs nonzero and the higher-SNR one within a factor 2 of the other.
    pub detected: bool,
}

pub fn detect_floors(points: &[BerPoint]) -> Vec<FloorCheck> {
    let mut curves: Vec<(CodingMode, Calibration)> = Vec::new();
    for p in points {
        if !curves.contains(&(p.mode, p.calibration)) {
            curves.push((p.mode, p.calibration));
        }
    }
    curves
        .into_iter()
        .filter_map(|(mode, calibration)| {
            let mut curve: Vec<&BerPoint> = points
                .iter()
                .filter(|p| p.mode == mode && p.calibration == calibration)
                .collect();
            if curve.len() < 2 {
                return None;
            }
            curve.sort_by(|a, b| a.ebno_db.total_cmp(&b.ebno_db));
            let (lo, hi) = (curve[curve.len() - 2], curve[curve.len() - 1]);
            let (bl, bh) = (lo.ber(), hi.ber());
            Some(FloorCheck {
                mode,
                calibration,
                ebno_low_db: lo.ebno_db,
                ebno_high_db: hi.ebno_db,
                ber_low: bl,
                ber_high: bh,
                detected: bl > 0.0 && bh > 0.0 && bh * 2.0 >= bl,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3Sweep {
    pub points: Vec<BerPoint>,
    pub floors: Vec<FloorCheck>,
}

/// BER for every `(mode, calibration, E_b/N_0)` combination, in that
/// nesting order. Blocks run in parallel inside each point.
pub fn run_fig3_sweep(
    base: &ChainConfig,
    ebno_grid: &[f64],
    modes: &[CodingMode],
    calibrations: &[Calibration],
    seed: u64,
    stop: &StopRule,
    exec: Execution,
) -> Result<Fig3Sweep> {
    let mut points = Vec::new();
    for &mode in modes {
        for &calibration in calibrations {
            let cfg = ChainConfig {
                mode,
                calibration,
                ..base.clone()
            };
            for &ebno in ebno_grid {
                points.push(run_ber_point(&cfg, ebno, seed, stop, exec)?);
            }
        }
    }
    let floors = detect_floors(&points);
    Ok(Fig3Sweep { points, floors })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_fig2_csv<W: Write>(records: &[Fig2Record], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record([
            "psi2",
            "qprime_pct",
            "trials",
            "nmse_alpha_db",
            "nmse_beta_db",
            "nmse_phi_db",
            "nmse_recon_db",
            "warmup_excluded",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ber_csv<W: Write>(points: &[BerPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ebno_db", "mode", "calibration", "bits", "errors", "ber", "seed"])?;
    for p in points {
        w.write_record([
            p.ebno_db.to_string(),
            p.mode.to_string(),
            p.calibration.to_string(),
            p.bits.to_string(),
            p.errors.to_string(),
            format!("{:e}", p.ber()),
            p.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per EKF update; `m` is the 1-based sub-ADC.
pub fn write_trajectory_csv<W: Write>(bank: &BankRun, truth: &MismatchSchedule, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t",
        "m",
        "alpha",
        "beta",
        "phi",
        "alpha_hat",
        "beta_hat",
        "phi_hat",
        "innovation",
        "S",
    ])?;
    for s in &bank.steps {
        let t = truth.at(s.instant, s.sub_adc);
        let e = s.posterior;
        w.write_record([
            s.instant.to_string(),
            (s.sub_adc + 1).to_string(),
            format!("{:e}", t.alpha),
            format!("{:e}", t.beta),
            format!("{:e}", t.phi),
            format!("{:e}", e.alpha),
            format!("{:e}", e.beta),
            format!("{:e}", e.phi),
            format!("{:e}", s.innovation),
            format!("{:e}", s.s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_waveform_csv<W: Write>(a: &TrialArtifacts, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "x", "x_tilde", "x_hat"])?;
    for n in 0..a.reference.len() {
        w.write_record([
            n.to_string(),
            format!("{:e}", a.reference[n]),
            format!("{:e}", a.x_tilde[n]),
            format!("{:e}", a.x_hat[n]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `f` to `path` through a buffered file, creating parent directories.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// `<path>.meta.json`.
pub fn metadata_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Sidecar describing how an artifact was produced. Contains no clock or
/// host information so reruns reproduce it byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub artifact: String,
    pub generator: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub decisions: Value,
    pub results: Value,
}

impl Metadata {
    pub fn new(artifact: &str, command: &str, seed: u64, config: Value, decisions: Value) -> Self {
        Self {
            artifact: artifact.to_owned(),
            generator: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            seed,
            config,
            decisions,
            results: Value::Null,
        }
    }

    pub fn write_beside(&self, artifact_path: &Path) -> Result<()> {
        write_file(&metadata_path(artifact_path), |w| {
            serde_json::to_writer_pretty(&mut *w, self)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

/// Implementation choices that shape tracking and reconstruction results.
pub fn tracking_decisions(setup: &TrialSetup) -> Value {
    let hp = setup.recon.highpass;
    json!({
        "highpass_window": hp.window,
        "highpass_half_length": setup.recon.highpass_half_length,
        "highpass_cutoff_placement": hp.placement,
        "highpass_cutoff_over_pi": hp.cutoff(setup.adc.tau, setup.recon.highpass_half_length),
        "fractional_delay_half_length": setup.recon.delay_half_length,
        "fractional_delay_window": "rectangular",
        "gsi_iterations": setup.recon.iterations,
        "gsi_sweep": "ascending, in place",
        "boundary_policy": "samples outside the block are zero",
        "ekf_theta0": [0.0, 0.0, 0.0],
        "ekf_sigma0_diag": setup.sigma0,
        "ekf_model": "matched to the generating AR(1) process",
        "evolution_clock": "one AR(1) step per pilot instant for every sub-ADC",
        "estimate_in_force": "latest a-posteriori estimate of the sub-ADC at or before the sample's pilot interval",
        "pilot_sub_adc": "sub-ADC that physically takes sample r*M_h, i.e. (r*M_h) mod M",
        "nmse_normalization": "pooled true-parameter energy per parameter",
        "nmse_averaging": "linear mean over trials, then dB",
        "nmse_db_floor": DB_FLOOR,
        "warmup_fraction": setup.warmup_fraction,
        "reconstruction_edge_excluded": setup.recon.highpass_half_length,
        "trial_streams": "ChaCha8 keyed by (seed, trial); shared across grid points",
    })
}

/// Implementation choices of the communication chain.
pub fn chain_decisions(cfg: &ChainConfig, stop: &StopRule) -> Value {
    let mut v = tracking_decisions(&TrialSetup {
        adc: cfg.adc.clone(),
        recon: cfg.recon,
        obs_var: cfg.obs_var,
        sigma0: cfg.sigma0,
        initial: cfg.initial.clone(),
        ..TrialSetup::default()
    });
    let extra = json!({
        "pulse": "root-raised cosine, continuous-time evaluation, shifts summing to one",
        "pulse_rolloff": cfg.pulse.rolloff,
        "oversampling": cfg.pulse.oversampling,
        "pulse_span_symbols": cfg.pulse.span,
        "symbol_timing": "symbol k centered on TI-ADC sample k*L; pilot instants fall on arbitrary symbol phases",
        "noise": "white Gaussian, N0/2 per sample, band-limited by a unit-passband Hamming low-pass",
        "noise_filter_half_length": cfg.noise_filter_half_length,
        "ebno_reference": "energy per information bit",
        "qpsk_mapping": "Gray, bit 0 -> +1/sqrt(2) per rail",
        "code_generators_octal": cfg.code.generators.map(|g| format!("{g:o}")),
        "code_tap_order": "most significant generator bit multiplies the current input bit",
        "code_termination": "zero tail, K-1 bits per block",
        "viterbi": "hard decision, full-block traceback, ties to lowest state",
        "calibration_off": "no pilot insertion, no compensation",
        "frame_symbols_per_rail": cfg.frame_symbols,
        "guard_symbols": cfg.guard_symbols,
        "rail_streams": "independent mismatch trajectories, pilot noise and channel noise per rail",
        "stop_rule": stop,
    });
    if let (Value::Object(a), Value::Object(b)) = (&mut v, extra) {
        a.extend(b);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_conversion() {
        assert_eq!(to_db(1.0), 0.0);
        assert_eq!(to_db(0.0), DB_FLOOR);
        assert_eq!(to_db(1e-20), DB_FLOOR);
        assert!((to_db(0.01) + 20.0).abs() < 1e-12);
    }

    #[test]
    fn estimation_nmse_reference_points() {
        let truth = MismatchSchedule::constant(&DEFAULT_INITIAL_MISMATCH, 17, 10);
        let zero = MismatchSchedule::constant(&[MismatchState::ZERO; 4], 17, 10);
        assert_eq!(nmse_estimation(&truth, &truth, 0).unwrap().db(), [DB_FLOOR; 3]);
        let z = nmse_estimation(&truth, &zero, 1).unwrap();
        for v in z.to_array() {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert_eq!(nmse_estimation(&zero, &truth, 0), Err(Error::UndefinedNmse));
    }

    #[test]
    fn reconstruction_nmse() {
        let x: Vec<f64> = (0..100).map(|n| (n as f64 * 0.3).cos()).collect();
        assert_eq!(nmse_reconstruction(&x, &x, 10).unwrap(), 0.0);
        let z = vec![0.0; 100];
        assert!((nmse_reconstruction(&x, &z, 10).unwrap() - 1.0).abs() < 1e-15);
        assert!(nmse_reconstruction(&x, &z, 50).is_err());
        assert_eq!(nmse_reconstruction(&z, &x, 0), Err(Error::UndefinedNmse));
    }

    fn point(ebno: f64, mode: CodingMode, errors: u64) -> BerPoint {
        BerPoint {
            ebno_db: ebno,
            mode,
            calibration: Calibration::On,
            bits: 1000,
            errors,
            blocks: 1,
            seed: 0,
        }
    }

    #[test]
    fn floor_detection() {
        let pts = vec![
            point(10.0, CodingMode::Uncoded, 40),
            point(20.0, CodingMode::Uncoded, 10),
            point(30.0, CodingMode::Uncoded, 6),
            point(20.0, CodingMode::Coded, 10),
            point(30.0, CodingMode::Coded, 0),
        ];
        let f = detect_floors(&pts);
        assert_eq!(f.len(), 2);
        assert!(f[0].detected);
        assert_eq!((f[0].ebno_low_db, f[0].ebno_high_db), (20.0, 30.0));
        assert!(!f[1].detected);
    }

    #[test]
    fn sweep_spec_order_and_validation() {
        let spec = SweepSpec {
            psi2_grid: vec![0.9, 1.0],
            qprime_set: vec![QPrimeLevel::Pct5, QPrimeLevel::Pct15],
            trials: 1,
            seed: 0,
        };
        assert_eq!(
            spec.points(),
            vec![
                (0.9, QPrimeLevel::Pct5),
                (1.0, QPrimeLevel::Pct5),
                (0.9, QPrimeLevel::Pct15),
                (1.0, QPrimeLevel::Pct15)
            ]
        );
        assert!(SweepSpec {
            trials: 0,
            ..spec.clone()
        }
        .validate()
        .is_err());
        assert!(SweepSpec {
            psi2_grid: vec![],
            ..spec
        }
        .validate()
        .is_err());
    }

    #[test]
    fn csv_headers() {
        let mut buf = Vec::new();
        write_ber_csv(&[point(4.0, CodingMode::Coded, 3)], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s.lines().next().unwrap(),
            "ebno_db,mode,calibration,bits,errors,ber,seed"
        );
        assert_eq!(s.lines().nth(1).unwrap(), "4,coded,on,1000,3,3e-3,0");
        let mut buf = Vec::new();
        write_fig2_csv(&[], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("psi2,qprime_pct,trials,"));
    }

    #[test]
    fn metadata_path_appends_suffix() {
        assert_eq!(
            metadata_path(Path::new("out/fig2.csv")),
            PathBuf::from("out/fig2.csv.meta.json")
        );
    }
}
