//! Quick oracle checks runnable from the command line.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use std::f64::consts::PI;
use tiadc_core::comm::ConvCode;
use tiadc_core::compensation::{design_fractional_delay, design_highpass, gsi_reconstruct, HighpassDesign, RowSystem};
use tiadc_core::ekf::observation_jacobian;
use tiadc_core::evolution::{Ar1Model, QPrimeLevel};
use tiadc_core::experiments::{run_trial, TrialSetup};
use tiadc_core::model::{sample_pilot, MismatchState, TiAdcConfig};
use tiadc_core::rng::stream_rng;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn jacobian() -> Check {
    let adc = TiAdcConfig::default();
    let mut rng = stream_rng(1, 0);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let theta = Vector3::new(
            rng.random_range(-0.1..0.1),
            rng.random_range(-0.1..0.1),
            rng.random_range(-0.1..0.1),
        );
        let r = rng.random_range(0..adc.pilot_count);
        let h = observation_jacobian(&theta, r, &adc);
        let f = |v: &Vector3<f64>| sample_pilot(r, &MismatchState::from_vector(v), &adc);
        let mut fd = [0.0; 3];
        for (i, slot) in fd.iter_mut().enumerate() {
            let mut up = theta;
            let mut dn = theta;
            up[i] += 1e-4;
            dn[i] -= 1e-4;
            *slot = (f(&up) - f(&dn)) / (up[i] - dn[i]);
        }
        let diff = (0..3).map(|i| (h[i] - fd[i]).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(diff / h.norm());
    }
    check(
        "jacobian matches central differences",
        worst < 1e-6,
        format!("max relative error {worst:.2e}"),
    )
}

fn fractional_delay() -> Check {
    let w = 0.5 * PI;
    let phi = 0.3;
    let x: Vec<f64> = (0..400).map(|n| (w * n as f64).cos()).collect();
    let errs: Vec<f64> = [5, 10, 20]
        .iter()
        .map(|&ng| {
            let y = design_fractional_delay(phi, ng).apply(&x);
            (60..340)
                .map(|n| (y[n] - (w * (n as f64 - phi)).cos()).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let ok = errs.windows(2).all(|p| p[1] < p[0]);
    check(
        "fractional delay error shrinks with N_g",
        ok,
        format!("N_g 5/10/20: {:.2e} {:.2e} {:.2e}", errs[0], errs[1], errs[2]),
    )
}

fn highpass() -> Check {
    let hp = match design_highpass(0.8, 51, HighpassDesign::default()) {
        Ok(h) => h,
        Err(e) => return check("high-pass stopband", false, e.to_string()),
    };
    let x: Vec<f64> = (0..2000)
        .map(|n| (1..=7).map(|i| (0.1 * i as f64 * PI * n as f64).cos()).sum())
        .collect();
    let y = hp.apply(&x);
    let interior = 100..1900;
    let ey: f64 = y[interior.clone()].iter().map(|v| v * v).sum();
    let ex: f64 = x[interior].iter().map(|v| v * v).sum();
    let db = 10.0 * (ey / ex).log10();
    check("high-pass stopband below 0.7 pi", db <= -40.0, format!("{db:.1} dB"))
}

fn gsi_dense() -> Check {
    let (len, period) = (64, 8);
    let mut rows = RowSystem::new();
    let hp = match design_highpass(0.5, 12, HighpassDesign::default()) {
        Ok(h) => rows.add_filter(h),
        Err(e) => return check("GSI converges to dense solve", false, e.to_string()),
    };
    let fd: Vec<u32> = [0.02, -0.03, 0.04]
        .iter()
        .map(|&p| rows.add_filter(design_fractional_delay(p, 6)))
        .collect();
    for n in 0..len {
        rows.push_row(if n % period == 0 { hp } else { fd[n % 3] });
    }
    let b: Vec<f64> = (0..len)
        .map(|n| {
            if n % period == 0 {
                0.0
            } else {
                (0.3 * PI * n as f64).cos()
            }
        })
        .collect();
    let dense = rows.to_dense();
    let a = DMatrix::from_fn(len, len, |i, j| dense[i][j]);
    let Some(exact) = a.lu().solve(&DVector::from_vec(b.clone())) else {
        return check("GSI converges to dense solve", false, "singular system".into());
    };
    match gsi_reconstruct(&b, &rows, 200) {
        Ok(x) => {
            let err = x
                .iter()
                .zip(exact.iter())
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max);
            check(
                "GSI converges to dense solve",
                err < 1e-6,
                format!("max error {err:.2e}"),
            )
        }
        Err(e) => check("GSI converges to dense solve", false, e.to_string()),
    }
}

fn viterbi() -> Check {
    let code = ConvCode::default();
    let mut rng = stream_rng(2, 0);
    let bits: Vec<u8> = (0..code.block_length).map(|_| rng.random::<bool>() as u8).collect();
    let coded = code.encode(&bits);
    let clean = code.decode(&coded).map(|d| d == bits).unwrap_or(false);
    let singles = (0..coded.len()).step_by(7).all(|pos| {
        let mut rx = coded.clone();
        rx[pos] ^= 1;
        code.decode(&rx).map(|d| d == bits).unwrap_or(false)
    });
    check(
        "viterbi round trip and single-error correction",
        clean && singles,
        String::new(),
    )
}

fn determinism() -> Check {
    let setup = TrialSetup {
        adc: TiAdcConfig::with_default_pilot(4, 17, 0.8, 400),
        ..TrialSetup::default()
    };
    let model = match Ar1Model::from_psi2(0.99, QPrimeLevel::Pct5.covariance()) {
        Ok(m) => m,
        Err(e) => return check("trial replay is bit-exact", false, e.to_string()),
    };
    let a = run_trial(&setup, &model, 5, 3);
    let b = run_trial(&setup, &model, 5, 3);
    let ok = matches!((&a, &b), (Ok(x), Ok(y)) if x == y);
    check("trial replay is bit-exact", ok, String::new())
}

pub fn run_all() -> Vec<Check> {
    vec![
        jacobian(),
        fractional_delay(),
        highpass(),
        gsi_dense(),
        viterbi(),
        determinism(),
    ]
}
