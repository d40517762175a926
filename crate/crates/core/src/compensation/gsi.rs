//! Banded row system and its Gauss–Seidel solver.
//!
//! Row `n` states `x_comp[n] ~= sum_k g_n[k] x[n - k]` with its own FIR
//! filter `g_n`. Each sweep walks `n` upward and overwrites `x[n]` in place,
//! so lags `k >= 1` read values already refreshed in this sweep and lags
//! `k <= -1` read the previous sweep. Samples outside the block are zero.

use super::filters::FirFilter;
use crate::error::{Error, Result};

/// Smallest usable center tap.
pub const MIN_CENTER_TAP: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct RowSystem {
    filters: Vec<FirFilter>,
    rows: Vec<u32>,
}

impl RowSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a filter and returns its handle.
    pub fn add_filter(&mut self, filter: FirFilter) -> u32 {
        self.filters.push(filter);
        (self.filters.len() - 1) as u32
    }

    pub fn push_row(&mut self, filter: u32) {
        assert!((filter as usize) < self.filters.len(), "unknown filter handle {filter}");
        self.rows.push(filter);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, n: usize) -> &FirFilter {
        &self.filters[self.rows[n] as usize]
    }

    /// `(G x)[n] = sum_k g_n[k] x[n - k]`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let len = x.len();
        (0..len)
            .map(|n| {
                let f = self.row(n);
                let taps = f.taps();
                let l = f.half_length();
                let lo = n.saturating_sub(l);
                let hi = (n + l).min(len - 1);
                (lo..=hi).map(|j| taps[l + n - j] * x[j]).sum()
            })
            .collect()
    }

    /// Dense matrix form, `a[n][j] = g_n[n - j]`. Intended for small oracle checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let len = self.len();
        (0..len)
            .map(|n| {
                let f = self.row(n);
                (0..len).map(|j| f.tap(n as isize - j as isize)).collect()
            })
            .collect()
    }

    fn check_centers(&self) -> Result<()> {
        for n in 0..self.len() {
            let c = self.row(n).center();
            if !(c.abs() >= MIN_CENTER_TAP) {
                return Err(Error::SingularRow { row: n, center: c });
            }
        }
        Ok(())
    }
}

/// Residual `||G x - x_comp||_2`.
pub fn residual_norm(rows: &RowSystem, x: &[f64], x_comp: &[f64]) -> f64 {
    rows.apply(x)
        .iter()
        .zip(x_comp)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn sweep(rows: &RowSystem, x_comp: &[f64], x: &mut [f64]) {
    let len = x.len();
    for n in 0..len {
        let f = rows.row(n);
        let taps = f.taps();
        let l = f.half_length();
        let mut acc = x_comp[n];
        // past samples: this sweep's values
        for k in 1..=l.min(n) {
            acc -= taps[l + k] * x[n - k];
        }
        // future samples: previous sweep's values
        for k in 1..=l.min(len - 1 - n) {
            acc -= taps[l - k] * x[n + k];
        }
        x[n] = acc / taps[l];
    }
}

fn check_inputs(x_comp: &[f64], rows: &RowSystem, iterations: usize) -> Result<()> {
    if rows.len() != x_comp.len() {
        return Err(Error::LengthMismatch {
            context: "row system vs compensated stream",
            left: rows.len(),
            right: x_comp.len(),
        });
    }
    if iterations == 0 {
        return Err(Error::invalid("iterations", "need at least one GSI iteration"));
    }
    rows.check_centers()
}

/// Gauss–Seidel reconstruction starting from `x_comp`.
pub fn gsi_reconstruct(x_comp: &[f64], rows: &RowSystem, iterations: usize) -> Result<Vec<f64>> {
    check_inputs(x_comp, rows, iterations)?;
    let mut x = x_comp.to_vec();
    for _ in 0..iterations {
        sweep(rows, x_comp, &mut x);
    }
    Ok(x)
}

/// Like [`gsi_reconstruct`], also returning the residual norm before the
/// first sweep and after each sweep (`iterations + 1` values).
pub fn gsi_reconstruct_traced(x_comp: &[f64], rows: &RowSystem, iterations: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_inputs(x_comp, rows, iterations)?;
    let mut x = x_comp.to_vec();
    let mut trace = Vec::with_capacity(iterations + 1);
    trace.push(residual_norm(rows, &x, x_comp));
    for _ in 0..iterations {
        sweep(rows, x_comp, &mut x);
        trace.push(residual_norm(rows, &x, x_comp));
    }
    Ok((x, trace))
}
