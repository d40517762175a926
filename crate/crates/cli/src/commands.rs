//! Subcommand implementations. Each writes its CSV artifacts and a JSON
//! sidecar next to every one of them.

use std::path::{Path, PathBuf};

use serde_json::json;
use tiadc_core::comm::{Calibration, CodingMode};
use tiadc_core::compensation::{design_fractional_delay, design_highpass};
use tiadc_core::ekf::GainMode;
use tiadc_core::experiments::{
    chain_decisions, run_fig2_sweep, run_fig3_sweep, simulate_trial, to_db, tracking_decisions, write_ber_csv,
    write_fig2_csv, write_file, write_trajectory_csv, write_waveform_csv, Metadata, TrialResult,
};
use tiadc_core::{Execution, Result};

use crate::config::RunConfig;
use crate::selftest;

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub exec: Execution,
    /// Command line as typed, recorded in the metadata.
    pub command: String,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn config_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.cfg).unwrap_or(serde_json::Value::Null)
    }
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

pub fn estimate(ctx: &Context) -> Result<()> {
    let setup = ctx.cfg.trial_setup();
    let model = ctx.cfg.model()?;
    let a = simulate_trial(&setup, &model, ctx.cfg.seed, 0, GainMode::Kalman)?;
    let r = TrialResult::from_artifacts(&setup, &a)?;
    let path = ctx.path("estimate.csv");
    write_file(&path, |w| write_trajectory_csv(&a.bank, &a.truth, w))?;
    let mut meta = Metadata::new(
        "ekf trajectory",
        &ctx.command,
        ctx.cfg.seed,
        ctx.config_json(),
        tracking_decisions(&setup),
    );
    let [ea, eb, ep] = r.estimation.db();
    meta.results = json!({ "nmse_alpha_db": ea, "nmse_beta_db": eb, "nmse_phi_db": ep });
    meta.write_beside(&path)?;
    announce(&path);
    Ok(())
}

pub fn reconstruct(ctx: &Context, dump_waveform: bool, dump_filters: bool) -> Result<()> {
    let setup = ctx.cfg.trial_setup();
    let model = ctx.cfg.model()?;
    let a = simulate_trial(&setup, &model, ctx.cfg.seed, 0, GainMode::Kalman)?;
    let r = TrialResult::from_artifacts(&setup, &a)?;
    let decisions = tracking_decisions(&setup);
    let path = ctx.path("reconstruct.csv");
    write_file(&path, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record([
            "psi2",
            "qprime_pct",
            "seed",
            "nmse_uncompensated_db",
            "nmse_recon_db",
            "nmse_alpha_db",
            "nmse_beta_db",
            "nmse_phi_db",
        ])?;
        let [ea, eb, ep] = r.estimation.db();
        c.write_record([
            ctx.cfg.psi2.to_string(),
            ctx.cfg.qprime_pct.to_string(),
            ctx.cfg.seed.to_string(),
            to_db(r.uncompensated).to_string(),
            to_db(r.reconstruction).to_string(),
            ea.to_string(),
            eb.to_string(),
            ep.to_string(),
        ])?;
        c.flush()?;
        Ok(())
    })?;
    Metadata::new(
        "reconstruction nmse",
        &ctx.command,
        ctx.cfg.seed,
        ctx.config_json(),
        decisions.clone(),
    )
    .write_beside(&path)?;
    announce(&path);

    if dump_waveform {
        let path = ctx.path("waveform.csv");
        write_file(&path, |w| write_waveform_csv(&a, w))?;
        Metadata::new(
            "reconstruction waveform",
            &ctx.command,
            ctx.cfg.seed,
            ctx.config_json(),
            decisions.clone(),
        )
        .write_beside(&path)?;
        announce(&path);
    }
    if dump_filters {
        let recon = ctx.cfg.recon();
        let hp = design_highpass(ctx.cfg.tau, recon.highpass_half_length, recon.highpass)?;
        let path = ctx.path("highpass_taps.csv");
        write_file(&path, |w| hp.write_csv(w))?;
        Metadata::new(
            "high-pass taps",
            &ctx.command,
            ctx.cfg.seed,
            ctx.config_json(),
            decisions.clone(),
        )
        .write_beside(&path)?;
        announce(&path);
        // delay filters of the final timing estimates
        for (m, est) in a.bank.filters.iter().enumerate() {
            let g = design_fractional_delay(est.estimate().phi, recon.delay_half_length);
            let path = ctx.path(&format!("delay_taps_m{}.csv", m + 1));
            write_file(&path, |w| g.write_csv(w))?;
            let mut meta = Metadata::new(
                "fractional-delay taps",
                &ctx.command,
                ctx.cfg.seed,
                ctx.config_json(),
                decisions.clone(),
            );
            meta.results = json!({ "sub_adc": m + 1, "phi_hat": est.estimate().phi });
            meta.write_beside(&path)?;
            announce(&path);
        }
    }
    Ok(())
}

pub fn fig2(ctx: &Context) -> Result<()> {
    let setup = ctx.cfg.trial_setup();
    let spec = ctx.cfg.sweep_spec()?;
    let points = run_fig2_sweep(&setup, &spec, ctx.exec)?;
    let decisions = tracking_decisions(&setup);
    for (name, excluded) in [("fig2.csv", true), ("fig2_warmup_included.csv", false)] {
        let records: Vec<_> = points.iter().map(|p| p.record(excluded)).collect();
        let path = ctx.path(name);
        write_file(&path, |w| write_fig2_csv(&records, w))?;
        let mut meta = Metadata::new(
            "fig2 nmse sweep",
            &ctx.command,
            spec.seed,
            ctx.config_json(),
            decisions.clone(),
        );
        meta.results = json!({
            "uncompensated_nmse_db": points
                .iter()
                .map(|p| json!({ "psi2": p.psi2, "qprime_pct": p.qprime.percent(), "db": to_db(p.mean_uncompensated()) }))
                .collect::<Vec<_>>(),
        });
        meta.write_beside(&path)?;
        announce(&path);
    }
    Ok(())
}

pub struct BerOptions {
    pub modes: Vec<CodingMode>,
    pub calibrations: Vec<Calibration>,
    pub mismatch: bool,
}

pub fn ber(ctx: &Context, opts: &BerOptions) -> Result<()> {
    let chain = tiadc_core::comm::ChainConfig {
        mismatch: opts.mismatch,
        ..ctx.cfg.chain()?
    };
    let stop = ctx.cfg.stop_rule();
    let sweep = run_fig3_sweep(
        &chain,
        &ctx.cfg.ebno_grid,
        &opts.modes,
        &opts.calibrations,
        ctx.cfg.seed,
        &stop,
        ctx.exec,
    )?;
    let path = ctx.path("ber.csv");
    write_file(&path, |w| write_ber_csv(&sweep.points, w))?;
    let mut meta = Metadata::new(
        "ber sweep",
        &ctx.command,
        ctx.cfg.seed,
        ctx.config_json(),
        chain_decisions(&chain, &stop),
    );
    meta.results = json!({ "mismatch": opts.mismatch, "floor": sweep.floors });
    meta.write_beside(&path)?;
    announce(&path);
    for f in &sweep.floors {
        println!(
            "{} / calibration {}: BER {:e} at {} dB, {:e} at {} dB, floor {}",
            f.mode,
            f.calibration,
            f.ber_low,
            f.ebno_low_db,
            f.ber_high,
            f.ebno_high_db,
            if f.detected { "detected" } else { "not detected" }
        );
    }
    Ok(())
}

/// Returns whether every check passed.
pub fn selftest() -> bool {
    let mut all = true;
    for c in selftest::run_all() {
        all &= c.passed;
        let tag = if c.passed { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            println!("{tag} {}", c.name);
        } else {
            println!("{tag} {} ({})", c.name, c.detail);
        }
    }
    all
}
