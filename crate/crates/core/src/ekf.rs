//! Extended Kalman filter tracking `[alpha, beta, phi]` of each sub-ADC from
//! its noisy pilot samples.
//!
//! A sub-ADC sees the pilot only every few pilot instants, so each filter
//! bridges the gap with one closed-form multi-step prediction. The
//! observation is scalar, so the innovation covariance is a scalar and the
//! gain needs a division, never a matrix inverse.

use nalgebra::{Matrix3, RowVector3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::evolution::Ar1Model;
use crate::model::{sample_pilot, MismatchSchedule, MismatchState, TiAdcConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct EkfConfig {
    /// Scalar transition: `U = psi * I`.
    pub psi: f64,
    /// Per-step process covariance `Q`.
    pub process_cov: Matrix3<f64>,
    /// Observation noise variance `R`.
    pub obs_var: f64,
    pub sigma0: Matrix3<f64>,
    pub theta0: Vector3<f64>,
}

/// Default initial covariance diagonal.
pub const DEFAULT_SIGMA0: f64 = 1e-2;

impl EkfConfig {
    /// Filter matched to the AR(1) model that generates the truth.
    pub fn matched(model: &Ar1Model, obs_var: f64, sigma0_diag: f64) -> Self {
        let q = model.process_covariance();
        Self {
            psi: model.psi,
            process_cov: Matrix3::from_diagonal(&Vector3::from(q)),
            obs_var,
            sigma0: Matrix3::from_diagonal_element(sigma0_diag),
            theta0: Vector3::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.obs_var > 0.0) {
            return Err(Error::invalid(
                "R",
                format!("observation variance must be > 0, got {}", self.obs_var),
            ));
        }
        if !(0.0..=1.0).contains(&self.psi) {
            return Err(Error::invalid("psi", format!("need 0 <= psi <= 1, got {}", self.psi)));
        }
        for (name, m) in [("Q", &self.process_cov), ("Sigma0", &self.sigma0)] {
            if (m - m.transpose()).abs().max() > 1e-15 {
                return Err(Error::invalid(name, "must be symmetric"));
            }
            if m.symmetric_eigenvalues().min() < -1e-15 {
                return Err(Error::invalid(name, "must be positive semidefinite"));
            }
        }
        Ok(())
    }

    /// `sum_{j<k} psi^(2j)`, the weight of `Q` after `k` chained predictions.
    fn process_weight(&self, k: u32) -> f64 {
        let p2 = self.psi * self.psi;
        if p2 == 1.0 {
            k as f64
        } else {
            (1.0 - p2.powi(k as i32)) / (1.0 - p2)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EkfState {
    pub theta_hat: Vector3<f64>,
    pub sigma: Matrix3<f64>,
    /// Updates absorbed so far.
    pub t: usize,
}

impl EkfState {
    pub fn initial(cfg: &EkfConfig) -> Self {
        Self {
            theta_hat: cfg.theta0,
            sigma: cfg.sigma0,
            t: 0,
        }
    }

    pub fn estimate(&self) -> MismatchState {
        MismatchState::from_vector(&self.theta_hat)
    }
}

/// A-priori moments after prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    pub theta: Vector3<f64>,
    pub sigma: Matrix3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationPrediction {
    pub y_hat: f64,
    pub h: RowVector3<f64>,
    pub s: f64,
}

/// `k`-step prediction: `psi^k theta`, `psi^(2k) Sigma + Q sum_{j<k} psi^(2j)`.
///
/// With `Q = (1 - psi^2) Q'` the covariance term is `(1 - psi^(2k)) Q'`.
/// `k = 0` returns the state unchanged.
pub fn predict(state: &EkfState, cfg: &EkfConfig, steps: u32) -> Prior {
    if steps == 0 {
        return Prior {
            theta: state.theta_hat,
            sigma: state.sigma,
        };
    }
    let pk = cfg.psi.powi(steps as i32);
    Prior {
        theta: state.theta_hat * pk,
        sigma: state.sigma * (pk * pk) + cfg.process_cov * cfg.process_weight(steps),
    }
}

/// Observation Jacobian at pilot instant `r`:
/// `[1, A cos(w r M_h - w phi), A w (1 + beta) sin(w r M_h - w phi)]`.
pub fn observation_jacobian(theta: &Vector3<f64>, r: usize, adc: &TiAdcConfig) -> RowVector3<f64> {
    let w = adc.pilot_omega;
    let a = adc.pilot_amplitude;
    let arg = w * ((r * adc.pilot_period) as f64 - theta[2]);
    RowVector3::new(1.0, a * arg.cos(), a * w * (1.0 + theta[1]) * arg.sin())
}

pub fn observe_prediction(prior: &Prior, r: usize, adc: &TiAdcConfig, obs_var: f64) -> ObservationPrediction {
    let y_hat = sample_pilot(r, &MismatchState::from_vector(&prior.theta), adc);
    let h = observation_jacobian(&prior.theta, r, adc);
    let s = (h * prior.sigma * h.transpose())[(0, 0)] + obs_var;
    ObservationPrediction { y_hat, h, s }
}

/// Measurement update; returns the a-posteriori state and the innovation.
pub fn update(prior: &Prior, pred: &ObservationPrediction, y: f64, t: usize) -> Result<(EkfState, f64)> {
    if !(pred.s > 0.0) {
        return Err(Error::NumericalDegeneracy { s: pred.s });
    }
    let gain: Vector3<f64> = prior.sigma * pred.h.transpose() / pred.s;
    let innovation = y - pred.y_hat;
    let theta_hat = prior.theta + gain * innovation;
    let sigma = prior.sigma - gain * pred.s * gain.transpose();
    let sigma = (sigma + sigma.transpose()) * 0.5;
    Ok((EkfState { theta_hat, sigma, t }, innovation))
}

/// Whether measurements feed back into the estimate. `Disabled` gives the
/// open-loop predictor used as a baseline (gain forced to zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    Kalman,
    Disabled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub instant: usize,
    /// Zero-based sub-ADC.
    pub sub_adc: usize,
    pub posterior: MismatchState,
    pub innovation: f64,
    pub s: f64,
}

impl StepRecord {
    pub fn nis(&self) -> f64 {
        self.innovation * self.innovation / self.s
    }
}

#[derive(Debug, Clone)]
pub struct BankRun {
    pub steps: Vec<StepRecord>,
    /// Estimates in force after each pilot instant, for every sub-ADC.
    pub estimates: MismatchSchedule,
    pub filters: Vec<EkfState>,
}

/// Runs one filter per sub-ADC over the pilot stream `pilots[r]`.
///
/// Pilot instant `r` is routed to the sub-ADC that sampled it; that filter
/// predicts across the instants elapsed since its last observation (all
/// filters start at instant 0) and then updates.
pub fn run_bank(pilots: &[f64], cfg: &EkfConfig, adc: &TiAdcConfig, gain: GainMode) -> Result<BankRun> {
    cfg.validate()?;
    let m = adc.sub_adcs;
    let mut filters = vec![EkfState::initial(cfg); m];
    let mut last = vec![0usize; m];
    let mut steps = Vec::with_capacity(pilots.len());
    let mut estimates = MismatchSchedule::new(m, adc.pilot_period);
    let mut snapshot: Vec<MismatchState> = filters.iter().map(EkfState::estimate).collect();

    for (r, &y) in pilots.iter().enumerate() {
        let j = adc.sub_adc_of_pilot(r);
        let elapsed = (r - last[j]) as u32;
        let prior = predict(&filters[j], cfg, elapsed);
        let pred = observe_prediction(&prior, r, adc, cfg.obs_var);
        let t = filters[j].t + 1;
        let (post, innovation) = match gain {
            GainMode::Kalman => update(&prior, &pred, y, t)?,
            GainMode::Disabled => (
                EkfState {
                    theta_hat: prior.theta,
                    sigma: prior.sigma,
                    t,
                },
                y - pred.y_hat,
            ),
        };
        filters[j] = post;
        last[j] = r;
        snapshot[j] = filters[j].estimate();
        steps.push(StepRecord {
            instant: r,
            sub_adc: j,
            posterior: snapshot[j],
            innovation,
            s: pred.s,
        });
        estimates.push_instant(&snapshot);
    }
    Ok(BankRun {
        steps,
        estimates,
        filters,
    })
}

/// Noisy pilot observations `y[r] = h_bar(theta_r, r) + v_r`, `v_r ~ N(0, R)`.
pub fn simulate_observations<R: Rng + ?Sized>(
    truth: &MismatchSchedule,
    adc: &TiAdcConfig,
    obs_var: f64,
    rng: &mut R,
) -> Vec<f64> {
    let sd = obs_var.sqrt();
    (0..truth.instants())
        .map(|r| {
            let theta = truth.at(r, adc.sub_adc_of_pilot(r));
            let v: f64 = rng.sample(StandardNormal);
            sample_pilot(r, &theta, adc) + sd * v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::QPrimeLevel;
    use crate::model::DEFAULT_INITIAL_MISMATCH;
    use crate::rng::stream_rng;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn state(theta: [f64; 3], sigma: Matrix3<f64>) -> EkfState {
        EkfState {
            theta_hat: Vector3::from(theta),
            sigma,
            t: 0,
        }
    }

    #[test]
    fn static_prediction_is_identity() {
        let cfg = EkfConfig {
            psi: 1.0,
            process_cov: Matrix3::zeros(),
            obs_var: 1.0,
            sigma0: Matrix3::identity(),
            theta0: Vector3::zeros(),
        };
        let s = state([0.1, 0.2, 0.3], Matrix3::identity() * 0.5);
        let p = predict(&s, &cfg, 7);
        assert_eq!(p.theta, s.theta_hat);
        assert_eq!(p.sigma, s.sigma);
    }

    #[test]
    fn memoryless_prediction() {
        let q = Matrix3::from_diagonal_element(0.3);
        let cfg = EkfConfig {
            psi: 0.0,
            process_cov: q,
            obs_var: 1.0,
            sigma0: Matrix3::identity(),
            theta0: Vector3::zeros(),
        };
        let p = predict(&state([1.0, 2.0, 3.0], Matrix3::identity()), &cfg, 1);
        assert_eq!(p.theta, Vector3::zeros());
        assert_eq!(p.sigma, q);
    }

    #[test]
    fn multi_step_prediction_matches_chained_steps() {
        let model = Ar1Model::from_psi2(0.99, QPrimeLevel::Pct5.covariance()).unwrap();
        let cfg = EkfConfig::matched(&model, 5e-5, DEFAULT_SIGMA0);
        let s = state([0.01, -0.02, 0.03], Matrix3::identity() * 1e-4);
        let closed = predict(&s, &cfg, 4);
        let mut chained = s.clone();
        for _ in 0..4 {
            let p = predict(&chained, &cfg, 1);
            chained.theta_hat = p.theta;
            chained.sigma = p.sigma;
        }
        assert_relative_eq!(closed.sigma, chained.sigma, max_relative = 1e-12);
        assert_relative_eq!(closed.theta, chained.theta_hat, max_relative = 1e-12);
        let q = QPrimeLevel::Pct5.covariance()[0];
        let expected = 0.9801f64.powi(2) * 1e-4 + (1.0 - 0.9801f64.powi(2)) * q;
        assert_relative_eq!(closed.sigma[(0, 0)], expected, max_relative = 1e-12);
        assert_relative_eq!(
            closed.sigma[(2, 2)],
            0.9801f64.powi(2) * 1e-4 + 0.0394 * q,
            max_relative = 2e-3
        );
    }

    #[test]
    fn jacobian_at_special_phases() {
        // w r M_h = pi/2 at r = 4
        let adc = TiAdcConfig {
            pilot_omega: PI / 136.0,
            ..TiAdcConfig::default()
        };
        let prior = Prior {
            theta: Vector3::zeros(),
            sigma: Matrix3::identity(),
        };
        let p0 = observe_prediction(&prior, 0, &adc, 1.0);
        assert_eq!(p0.h, RowVector3::new(1.0, 1.0, 0.0));
        assert_eq!(p0.y_hat, 1.0);
        let r = 4;
        assert_abs_diff_eq!(adc.pilot_omega * (r * 17) as f64, PI / 2.0, epsilon = 1e-15);
        let p = observe_prediction(&prior, r, &adc, 1.0);
        assert_abs_diff_eq!(p.h[0], 1.0);
        assert_abs_diff_eq!(p.h[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.h[2], adc.pilot_omega, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y_hat, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn innovation_variance_by_hand() {
        let prior = Prior {
            theta: Vector3::zeros(),
            sigma: Matrix3::identity(),
        };
        let pred = ObservationPrediction {
            y_hat: 0.0,
            h: RowVector3::new(1.0, 0.0, 0.0),
            s: 1.0 + 1.0,
        };
        let hs = (pred.h * prior.sigma * pred.h.transpose())[(0, 0)] + 1.0;
        assert_eq!(hs, 2.0);
        let (post, innov) = update(&prior, &pred, 0.4, 1).unwrap();
        assert_abs_diff_eq!(innov, 0.4);
        assert_abs_diff_eq!(post.theta_hat, Vector3::new(0.2, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(
            post.sigma,
            Matrix3::from_diagonal(&Vector3::new(0.5, 1.0, 1.0)),
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_innovation_keeps_mean_and_shrinks_covariance() {
        let prior = Prior {
            theta: Vector3::new(0.1, 0.2, 0.0),
            sigma: Matrix3::identity() * 0.01,
        };
        let adc = TiAdcConfig::default();
        let pred = observe_prediction(&prior, 3, &adc, 5e-5);
        let (post, _) = update(&prior, &pred, pred.y_hat, 1).unwrap();
        assert_eq!(post.theta_hat, prior.theta);
        assert!(post.sigma.trace() < prior.sigma.trace());
    }

    #[test]
    fn uninformative_observation_limit() {
        let prior = Prior {
            theta: Vector3::new(0.1, 0.2, 0.0),
            sigma: Matrix3::identity() * 0.01,
        };
        let adc = TiAdcConfig::default();
        let pred = observe_prediction(&prior, 3, &adc, 1e12);
        let (post, _) = update(&prior, &pred, 10.0, 1).unwrap();
        assert_abs_diff_eq!(post.theta_hat, prior.theta, epsilon = 1e-11);
    }

    #[test]
    fn degenerate_innovation_variance_is_an_error() {
        let prior = Prior {
            theta: Vector3::zeros(),
            sigma: Matrix3::zeros(),
        };
        let pred = ObservationPrediction {
            y_hat: 0.0,
            h: RowVector3::new(1.0, 0.0, 0.0),
            s: 0.0,
        };
        assert_eq!(
            update(&prior, &pred, 1.0, 1).unwrap_err(),
            Error::NumericalDegeneracy { s: 0.0 }
        );
    }

    #[test]
    fn bank_schedule_one_step_per_filter() {
        let adc = TiAdcConfig::default();
        let model = Ar1Model::from_psi2(0.99, QPrimeLevel::Pct5.covariance()).unwrap();
        let cfg = EkfConfig::matched(&model, 5e-5, DEFAULT_SIGMA0);
        let truth = MismatchSchedule::constant(&DEFAULT_INITIAL_MISMATCH, 17, 4);
        let y = simulate_observations(&truth, &adc, 5e-5, &mut stream_rng(9, 0));
        let run = run_bank(&y, &cfg, &adc, GainMode::Kalman).unwrap();
        assert_eq!(run.steps.len(), 4);
        assert!(run.filters.iter().all(|f| f.t == 1));
        let order: Vec<usize> = run.steps.iter().map(|s| s.sub_adc).collect();
        assert_eq!(order, vec![0, 1, 2, 3]);
        assert_eq!(run.estimates.instants(), 4);
    }

    #[test]
    fn static_trace_is_non_increasing() {
        let adc = TiAdcConfig::default();
        let cfg = EkfConfig {
            psi: 1.0,
            process_cov: Matrix3::zeros(),
            obs_var: 5e-5,
            sigma0: Matrix3::identity() * DEFAULT_SIGMA0,
            theta0: Vector3::zeros(),
        };
        let truth = MismatchSchedule::constant(&DEFAULT_INITIAL_MISMATCH, 17, 2000);
        let y = simulate_observations(&truth, &adc, 5e-5, &mut stream_rng(10, 0));
        let mut filters = vec![EkfState::initial(&cfg); 4];
        for (r, &obs) in y.iter().enumerate() {
            let j = adc.sub_adc_of_pilot(r);
            let prior = predict(&filters[j], &cfg, 4);
            let pred = observe_prediction(&prior, r, &adc, cfg.obs_var);
            let (post, _) = update(&prior, &pred, obs, filters[j].t + 1).unwrap();
            assert!(post.sigma.trace() <= filters[j].sigma.trace() + 1e-18);
            filters[j] = post;
        }
    }

    #[test]
    fn open_loop_predictor_never_moves() {
        let adc = TiAdcConfig::default();
        let model = Ar1Model::from_psi2(0.99, QPrimeLevel::Pct5.covariance()).unwrap();
        let cfg = EkfConfig::matched(&model, 5e-5, DEFAULT_SIGMA0);
        let truth = model.simulate(&DEFAULT_INITIAL_MISMATCH, 17, 200, &mut stream_rng(11, 0));
        let y = simulate_observations(&truth, &adc, 5e-5, &mut stream_rng(11, 1));
        let run = run_bank(&y, &cfg, &adc, GainMode::Disabled).unwrap();
        for r in 0..run.estimates.instants() {
            assert!(run.estimates.instant(r).iter().all(|s| *s == MismatchState::ZERO));
        }
    }
}
