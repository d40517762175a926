//! AWGN calibrated from `E_b/N_0`, and the anti-alias filter that keeps the
//! noise inside the band the reconstruction assumes.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::compensation::{design_lowpass, FirFilter, Window};
use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-sample variance `N_0 / 2` of white noise at the TI-ADC input.
///
/// Each rail carries `+-1/sqrt(2)` symbols shaped by a pulse of energy
/// `E_p`, so a QPSK symbol has energy `E_p` and carries `2 rate`
/// information bits: `N_0 = E_p / (2 rate E_b/N_0)`.
pub fn noise_variance(ebno_db: f64, pulse_energy: f64, code_rate: f64) -> Result<f64> {
    if !(code_rate > 0.0 && code_rate <= 1.0) {
        return Err(Error::invalid(
            "code_rate",
            format!("need 0 < rate <= 1, got {code_rate}"),
        ));
    }
    if !ebno_db.is_finite() {
        return Err(Error::invalid("ebno_db", format!("must be finite, got {ebno_db}")));
    }
    let n0 = pulse_energy / (2.0 * code_rate * db_to_linear(ebno_db));
    Ok(n0 / 2.0)
}

/// `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Uncoded Gray QPSK over AWGN: `Q(sqrt(2 E_b/N_0))`.
pub fn qpsk_ber_theory(ebno_db: f64) -> f64 {
    q_function((2.0 * db_to_linear(ebno_db)).sqrt())
}

pub fn white_noise<R: Rng + ?Sized>(variance: f64, len: usize, rng: &mut R) -> Vec<f64> {
    let sd = variance.sqrt();
    (0..len).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Unit-passband low-pass whose stopband starts below `tau * pi`.
pub fn anti_alias_filter(tau: f64, half_length: usize) -> Result<FirFilter> {
    let w = Window::Hamming;
    design_lowpass(tau - w.transition_width(half_length), half_length, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn theory_values() {
        assert_relative_eq!(qpsk_ber_theory(4.0), 1.2501e-2, max_relative = 1e-3);
        assert_relative_eq!(q_function(0.0), 0.5);
        assert_relative_eq!(qpsk_ber_theory(0.0), 7.8650e-2, max_relative = 1e-4);
    }

    #[test]
    fn variance_mapping() {
        assert_relative_eq!(noise_variance(0.0, 2.0, 1.0).unwrap(), 0.5);
        // halving the rate doubles the noise at equal E_b/N_0
        assert_relative_eq!(
            noise_variance(3.0, 2.0, 0.5).unwrap(),
            2.0 * noise_variance(3.0, 2.0, 1.0).unwrap()
        );
        assert!(noise_variance(3.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn empirical_variance_within_one_percent() {
        let v = noise_variance(4.0, 2.0, 1.0).unwrap();
        let x = white_noise(v, 1_000_000, &mut stream_rng(11, 0));
        let est = x.iter().map(|a| a * a).sum::<f64>() / x.len() as f64;
        assert_relative_eq!(est, v, max_relative = 0.01);
    }

    #[test]
    fn anti_alias_band() {
        let h = anti_alias_filter(0.8, 51).unwrap();
        assert!((h.magnitude_at(0.625 * PI) - 1.0).abs() < 5e-3);
        assert!(h.magnitude_at(0.8 * PI) < 1e-2);
    }
}
