//! Rate-1/2 feedforward convolutional code with zero-tail termination and a
//! hard-decision Viterbi decoder.
//!
//! Generator bit `K - 1` (the most significant) multiplies the current input
//! bit, bit 0 the oldest one. With `[0o6, 0o7]` and `K = 3` the taps on
//! `(b_t, b_{t-1}, b_{t-2})` are `(1,1,0)` and `(1,1,1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvCode {
    /// Generator polynomials, written in octal.
    pub generators: [u32; 2],
    pub constraint_length: u32,
    /// Information bits per terminated block.
    pub block_length: usize,
}

impl Default for ConvCode {
    fn default() -> Self {
        Self {
            generators: [0o6, 0o7],
            constraint_length: 3,
            block_length: 1000,
        }
    }
}

impl ConvCode {
    pub fn validate(&self) -> Result<()> {
        let k = self.constraint_length;
        if !(2..=12).contains(&k) {
            return Err(Error::invalid("constraint_length", format!("need 2..=12, got {k}")));
        }
        if self.generators.iter().any(|&g| g == 0 || g >> k != 0) {
            return Err(Error::invalid(
                "generators",
                format!("each must be nonzero and fit in {k} bits"),
            ));
        }
        if self.block_length == 0 {
            return Err(Error::invalid("block_length", "must be positive"));
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        1 << (self.constraint_length - 1)
    }

    pub fn tail_bits(&self) -> usize {
        self.constraint_length as usize - 1
    }

    /// Coded bits produced for one terminated block.
    pub fn coded_block_length(&self) -> usize {
        2 * (self.block_length + self.tail_bits())
    }

    /// Output pair for input `bit` leaving `state` (previous bits, newest in
    /// the top position), and the next state.
    fn branch(&self, state: usize, bit: u8) -> ([u8; 2], usize) {
        let shift = self.constraint_length - 1;
        let reg = ((bit as u32) << shift) | state as u32;
        let out = self.generators.map(|g| ((reg & g).count_ones() & 1) as u8);
        (out, (reg >> 1) as usize)
    }

    /// Encodes one block of any length, appending `K - 1` zero tail bits.
    pub fn encode(&self, bits: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 * (bits.len() + self.tail_bits()));
        let mut state = 0usize;
        for &b in bits.iter().chain(std::iter::repeat_n(&0u8, self.tail_bits())) {
            let (pair, next) = self.branch(state, b & 1);
            out.extend_from_slice(&pair);
            state = next;
        }
        out
    }

    /// Maximum-likelihood decoding (Hamming metric) of one terminated block;
    /// returns the information bits without the tail. Among equal-metric
    /// paths into a state, the predecessor with the lower index wins.
    pub fn decode(&self, coded: &[u8]) -> Result<Vec<u8>> {
        if !coded.len().is_multiple_of(2) || coded.len() < 2 * self.tail_bits() {
            return Err(Error::invalid(
                "coded",
                format!("length {} is not a terminated rate-1/2 block", coded.len()),
            ));
        }
        let steps = coded.len() / 2;
        let ns = self.states();
        let top = self.constraint_length - 2;
        // branch outputs per (state, bit)
        let table: Vec<[([u8; 2], usize); 2]> = (0..ns).map(|s| [self.branch(s, 0), self.branch(s, 1)]).collect();

        const INF: u32 = u32::MAX / 2;
        let mut metric = vec![INF; ns];
        metric[0] = 0;
        let mut next = vec![INF; ns];
        let mut from = vec![0u16; steps * ns];
        for t in 0..steps {
            let rx = [coded[2 * t] & 1, coded[2 * t + 1] & 1];
            for (s_next, slot) in next.iter_mut().enumerate() {
                let bit = s_next >> top;
                let mut best = INF;
                let mut arg = 0usize;
                // predecessors in ascending order, strict improvement keeps the lower index
                for low in 0..2 {
                    let s = ((s_next << 1) & (ns - 1)) | low;
                    if metric[s] >= INF {
                        continue;
                    }
                    let out = table[s][bit].0;
                    let d = (out[0] ^ rx[0]) as u32 + (out[1] ^ rx[1]) as u32;
                    let m = metric[s] + d;
                    if m < best {
                        best = m;
                        arg = s;
                    }
                }
                *slot = best;
                from[t * ns + s_next] = arg as u16;
            }
            std::mem::swap(&mut metric, &mut next);
        }

        let mut bits = vec![0u8; steps];
        let mut state = 0usize;
        for t in (0..steps).rev() {
            bits[t] = (state >> top) as u8;
            state = from[t * ns + state] as usize;
        }
        bits.truncate(steps - self.tail_bits());
        Ok(bits)
    }

    /// Encodes consecutive `block_length` blocks.
    pub fn encode_blocks(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if !bits.len().is_multiple_of(self.block_length) {
            return Err(Error::invalid(
                "bits",
                format!(
                    "{} is not a multiple of the block length {}",
                    bits.len(),
                    self.block_length
                ),
            ));
        }
        Ok(bits.chunks(self.block_length).flat_map(|b| self.encode(b)).collect())
    }

    pub fn decode_blocks(&self, coded: &[u8]) -> Result<Vec<u8>> {
        let n = self.coded_block_length();
        if !coded.len().is_multiple_of(n) {
            return Err(Error::invalid(
                "coded",
                format!("{} is not a multiple of the coded block length {n}", coded.len()),
            ));
        }
        let mut out = Vec::with_capacity(coded.len() / n * self.block_length);
        for block in coded.chunks(n) {
            out.extend(self.decode(block)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shift_register_trace() {
        let c = ConvCode::default();
        let out = c.encode(&[1, 0, 1]);
        assert_eq!(&out[..6], &[1, 1, 1, 1, 1, 0]);
        assert_eq!(out.len(), 10);
    }

    #[test]
    fn impulse_response() {
        let c = ConvCode::default();
        let out = c.encode(&[1, 0, 0, 0, 0]);
        assert_eq!(out, vec![1, 1, 1, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn zero_in_zero_out() {
        let c = ConvCode::default();
        assert!(c.encode(&[0; 50]).iter().all(|&b| b == 0));
    }

    #[test]
    fn free_distance_is_four() {
        // lowest weight over short nonzero inputs
        let c = ConvCode::default();
        let dmin = (1u32..1 << 10)
            .map(|v| {
                let bits: Vec<u8> = (0..10).map(|i| (v >> i & 1) as u8).collect();
                c.encode(&bits).iter().map(|&b| b as u32).sum::<u32>()
            })
            .min()
            .unwrap();
        assert_eq!(dmin, 4);
    }

    #[test]
    fn corrects_every_single_error() {
        let c = ConvCode::default();
        let bits: Vec<u8> = (0..1000u32).map(|i| ((i * 7 + i / 3) % 5 % 2) as u8).collect();
        let coded = c.encode(&bits);
        for pos in 0..coded.len() {
            let mut rx = coded.clone();
            rx[pos] ^= 1;
            assert_eq!(c.decode(&rx).unwrap(), bits, "error at {pos}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let c = ConvCode::default();
        assert!(c.decode(&[1, 0, 1]).is_err());
        assert!(c.encode_blocks(&[0; 999]).is_err());
        assert!(ConvCode {
            generators: [0o6, 0o17],
            ..c
        }
        .validate()
        .is_err());
    }

    proptest! {
        #[test]
        fn round_trip(bits in proptest::collection::vec(0u8..2, 1..400)) {
            let c = ConvCode::default();
            prop_assert_eq!(c.decode(&c.encode(&bits)).unwrap(), bits);
        }

        #[test]
        fn encoder_is_linear(a in proptest::collection::vec(0u8..2, 64), b in proptest::collection::vec(0u8..2, 64)) {
            let c = ConvCode::default();
            let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let lhs = c.encode(&sum);
            let rhs: Vec<u8> = c.encode(&a).iter().zip(c.encode(&b)).map(|(x, y)| x ^ y).collect();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
