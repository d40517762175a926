//! Gray-mapped QPSK, one bit per rail: `0 -> +1/sqrt(2)`, `1 -> -1/sqrt(2)`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

/// Splits bit pairs `(b_2i, b_2i+1)` into in-phase and quadrature symbols.
pub fn qpsk_map(bits: &[u8]) -> Result<(Vec<f64>, Vec<f64>)> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::invalid(
            "bits",
            format!("QPSK needs an even bit count, got {}", bits.len()),
        ));
    }
    let level = |b: u8| if b & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    Ok(bits.chunks(2).map(|p| (level(p[0]), level(p[1]))).unzip())
}

/// Per-rail sign slicing; a zero decides for bit 0.
pub fn qpsk_demap(i: &[f64], q: &[f64]) -> Vec<u8> {
    assert_eq!(i.len(), q.len(), "rail length mismatch");
    let slice = |v: f64| (v < 0.0) as u8;
    i.iter().zip(q).flat_map(|(&a, &b)| [slice(a), slice(b)]).collect()
}
