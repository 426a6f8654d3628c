//! PAM4 bit and symbol handling.
//!
//! Bits come from a seeded `xoshiro256++` generator (state expanded from the
//! 64-bit seed with SplitMix64, as `rand_xoshiro` does). Each 64-bit output
//! word yields 64 bits, least significant bit first, so a given seed produces
//! the same stream on every platform.
//!
//! Symbols use the Gray map `00 → -3`, `01 → -1`, `11 → +1`, `10 → +3`, so
//! neighbouring amplitude levels differ in exactly one bit.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};

/// Pre-FEC BER limit of the KP4 Reed-Solomon code.
pub const KP4_THRESHOLD: f64 = 2.2e-4;
/// Pre-FEC BER limit of hard-decision FEC.
pub const HD_THRESHOLD: f64 = 3.8e-3;
/// Pre-FEC BER limit of soft-decision FEC.
pub const SD_THRESHOLD: f64 = 2e-2;

/// The four normalized PAM4 amplitudes in ascending order.
pub const PAM4_LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];

/// A sequence of binary values, each 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitSequence(Vec<u8>);

impl BitSequence {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self(bits))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

/// A sequence of PAM4 amplitudes drawn from [`PAM4_LEVELS`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SymbolSequence(Vec<f64>);

impl SymbolSequence {
    pub fn new(symbols: Vec<f64>) -> Result<Self> {
        if let Some(&s) = symbols.iter().find(|&&s| level_index(s).is_none()) {
            return Err(Error::OutOfAlphabet(s));
        }
        Ok(Self(symbols))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// BER together with pass/fail flags against the three FEC limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FecVerdict {
    pub ber: f64,
    pub passes_kp4: bool,
    pub passes_hd: bool,
    pub passes_sd: bool,
}

fn level_index(s: f64) -> Option<usize> {
    PAM4_LEVELS.iter().position(|&l| l == s)
}

// Gray-coded bit pair for each entry of PAM4_LEVELS.
const GRAY_BITS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 1), (1, 0)];

pub fn generate_bits(seed: u64, n_bits: usize) -> Result<BitSequence> {
    if n_bits < 2 || !n_bits.is_multiple_of(2) {
        return Err(Error::InvalidLength(format!("n_bits must be even and at least 2, got {n_bits}")));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut bits = Vec::with_capacity(n_bits);
    while bits.len() < n_bits {
        let word = rng.next_u64();
        let take = (n_bits - bits.len()).min(64);
        bits.extend((0..take).map(|k| ((word >> k) & 1) as u8));
    }
    Ok(BitSequence(bits))
}

pub fn bits_to_pam4(bits: &BitSequence) -> Result<SymbolSequence> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::InvalidLength(format!("PAM4 mapping needs an even number of bits, got {}", bits.len())));
    }
    let symbols = bits
        .as_slice()
        .chunks_exact(2)
        .map(|pair| {
            let idx = GRAY_BITS
                .iter()
                .position(|&g| g == (pair[0], pair[1]))
                .expect("bit pairs are validated at construction");
            PAM4_LEVELS[idx]
        })
        .collect();
    Ok(SymbolSequence(symbols))
}

pub fn pam4_to_bits(symbols: &SymbolSequence) -> Result<BitSequence> {
    let mut bits = Vec::with_capacity(symbols.len() * 2);
    for &s in symbols.as_slice() {
        let idx = level_index(s).ok_or(Error::OutOfAlphabet(s))?;
        let (b0, b1) = GRAY_BITS[idx];
        bits.push(b0);
        bits.push(b1);
    }
    Ok(BitSequence(bits))
}

/// Nearest-level decision with thresholds at -2, 0 and +2.
///
/// A sample sitting exactly on a threshold goes to the inner level; at 0,
/// where both neighbours are inner, it goes to +1.
pub fn slice_sample(y: f64) -> f64 {
    if y < -2.0 {
        -3.0
    } else if y < 0.0 {
        -1.0
    } else if y <= 2.0 {
        1.0
    } else {
        3.0
    }
}

pub fn slice_pam4(samples: &[f64]) -> Result<SymbolSequence> {
    check_finite(samples)?;
    Ok(SymbolSequence(samples.iter().map(|&y| slice_sample(y)).collect()))
}

pub fn bit_error_rate(reference: &BitSequence, decided: &BitSequence) -> Result<f64> {
    if reference.is_empty() || reference.len() != decided.len() {
        return Err(Error::InvalidLength(format!(
            "BER needs equal nonempty sequences, got {} and {}",
            reference.len(),
            decided.len()
        )));
    }
    let errors = count_bit_errors(reference.as_slice(), decided.as_slice());
    Ok(errors as f64 / reference.len() as f64)
}

pub(crate) fn count_bit_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

pub fn fec_verdict(ber: f64) -> Result<FecVerdict> {
    if !(0.0..=1.0).contains(&ber) {
        return Err(Error::InvalidParameter(format!("BER {ber} is outside [0, 1]")));
    }
    Ok(FecVerdict {
        ber,
        passes_kp4: ber <= KP4_THRESHOLD,
        passes_hd: ber <= HD_THRESHOLD,
        passes_sd: ber <= SD_THRESHOLD,
    })
}
