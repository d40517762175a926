//! AR(1) evolution of the per-sub-ADC mismatch parameters.
//!
//! `theta_t = psi * theta_{t-1} + sqrt(1 - psi^2) * e'_t` with
//! `e'_t ~ N(0, Q')`, so the stationary covariance is `Q'` for any `psi < 1`
//! and the per-step process covariance is `Q = (1 - psi^2) Q'`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MismatchSchedule, MismatchState};

/// Stationary spread of the mismatches, named by the half-width of the
/// uniform distribution whose variance it matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QPrimeLevel {
    Pct5,
    Pct10,
    Pct15,
}

impl QPrimeLevel {
    pub const ALL: [QPrimeLevel; 3] = [QPrimeLevel::Pct5, QPrimeLevel::Pct10, QPrimeLevel::Pct15];

    pub fn percent(self) -> u32 {
        match self {
            QPrimeLevel::Pct5 => 5,
            QPrimeLevel::Pct10 => 10,
            QPrimeLevel::Pct15 => 15,
        }
    }

    pub fn from_percent(pct: u32) -> Result<Self> {
        match pct {
            5 => Ok(QPrimeLevel::Pct5),
            10 => Ok(QPrimeLevel::Pct10),
            15 => Ok(QPrimeLevel::Pct15),
            _ => Err(Error::invalid("qprime", format!("{pct}% is not one of 5, 10, 15"))),
        }
    }

    pub fn half_width(self) -> f64 {
        self.percent() as f64 / 100.0
    }

    pub fn covariance(self) -> [f64; 3] {
        q_prime_for_uniform_halfwidth(self.half_width())
    }
}

/// Diagonal of `Q'` matching the variance of `U[-a, a]`, i.e. `(2a)^2 / 12`.
pub fn q_prime_for_uniform_halfwidth(a: f64) -> [f64; 3] {
    let v = (2.0 * a).powi(2) / 12.0;
    [v; 3]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Model {
    pub psi: f64,
    /// Diagonal of the stationary covariance `Q'`.
    pub q_prime: [f64; 3],
}

impl Ar1Model {
    pub fn new(psi: f64, q_prime: [f64; 3]) -> Result<Self> {
        let m = Self { psi, q_prime };
        m.validate()?;
        Ok(m)
    }

    pub fn from_psi2(psi2: f64, q_prime: [f64; 3]) -> Result<Self> {
        if !(0.0..=1.0).contains(&psi2) {
            return Err(Error::invalid("psi2", format!("need 0 <= psi^2 <= 1, got {psi2}")));
        }
        Self::new(psi2.sqrt(), q_prime)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.psi) {
            return Err(Error::invalid("psi", format!("need 0 <= psi <= 1, got {}", self.psi)));
        }
        if self.q_prime.iter().any(|q| !(*q >= 0.0)) {
            return Err(Error::invalid("qprime", "diagonal entries must be >= 0"));
        }
        Ok(())
    }

    /// Per-step process covariance diagonal `(1 - psi^2) Q'`.
    pub fn process_covariance(&self) -> [f64; 3] {
        let s = 1.0 - self.psi * self.psi;
        self.q_prime.map(|q| s * q)
    }

    /// `(psi^k, (1 - psi^(2k)) Q')`: mean map and accumulated noise of `k` steps.
    pub fn m_step_transition(&self, k: u32) -> (f64, [f64; 3]) {
        assert!(k >= 1, "need at least one step");
        let pk = self.psi.powi(k as i32);
        let s = 1.0 - pk * pk;
        (pk, self.q_prime.map(|q| s * q))
    }

    pub fn evolve<R: Rng + ?Sized>(&self, prev: &MismatchState, rng: &mut R) -> MismatchState {
        let drive = (1.0 - self.psi * self.psi).max(0.0).sqrt();
        let mut next = [0.0; 3];
        for (i, slot) in next.iter_mut().enumerate() {
            let e: f64 = rng.sample(StandardNormal);
            *slot = self.psi * prev.component(i) + drive * self.q_prime[i].sqrt() * e;
        }
        MismatchState::new(next[0], next[1], next[2])
    }

    /// Ground-truth trajectories of all sub-ADCs over `instants` pilot
    /// instants; instant 0 holds `initial`, every later instant evolves all
    /// sub-ADCs once.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        initial: &[MismatchState],
        pilot_period: usize,
        instants: usize,
        rng: &mut R,
    ) -> MismatchSchedule {
        let mut schedule = MismatchSchedule::new(initial.len(), pilot_period);
        let mut current = initial.to_vec();
        for r in 0..instants {
            if r > 0 {
                for s in current.iter_mut() {
                    *s = self.evolve(s, rng);
                }
            }
            schedule.push_instant(&current);
        }
        schedule
    }
}
