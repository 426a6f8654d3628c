use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::kernel::InputVector;

/// Builds fixed-length input windows from a received signal.
///
/// The window for target index `i` covers
/// `signal[i - center_offset .. i - center_offset + n_taps)`, zero-padded
/// outside the signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapVectorizer {
    n_taps: usize,
    center_offset: usize,
}

impl TapVectorizer {
    pub fn new(n_taps: usize, center_offset: usize) -> Result<Self> {
        if n_taps == 0 {
            return Err(Error::InvalidParameter("n_taps must be at least 1".into()));
        }
        if center_offset >= n_taps {
            return Err(Error::InvalidParameter(format!(
                "center_offset {center_offset} must be below n_taps {n_taps}"
            )));
        }
        Ok(Self { n_taps, center_offset })
    }

    /// Window centred on the target symbol (`center_offset = n_taps / 2`).
    pub fn centered(n_taps: usize) -> Result<Self> {
        Self::new(n_taps, n_taps / 2)
    }

    pub fn n_taps(&self) -> usize {
        self.n_taps
    }

    pub fn center_offset(&self) -> usize {
        self.center_offset
    }

    /// Writes the window for index `i` into `out` (length `n_taps`).
    #[inline]
    pub fn fill(&self, signal: &[f64], i: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n_taps);
        for (k, slot) in out.iter_mut().enumerate() {
            let pos = (i + k).checked_sub(self.center_offset);
            *slot = match pos {
                Some(p) if p < signal.len() => signal[p],
                _ => 0.0,
            };
        }
    }

    pub(crate) fn check_signal(&self, signal: &[f64]) -> Result<()> {
        if signal.len() < self.n_taps {
            return Err(Error::InvalidLength(format!(
                "signal of length {} is shorter than {} taps",
                signal.len(),
                self.n_taps
            )));
        }
        check_finite(signal)
    }
}

pub fn make_tap_vectors(signal: &[f64], v: &TapVectorizer) -> Result<Vec<InputVector>> {
    v.check_signal(signal)?;
    let mut buf = vec![0.0; v.n_taps()];
    (0..signal.len())
        .map(|i| {
            v.fill(signal, i, &mut buf);
            InputVector::new(buf.clone())
        })
        .collect()
}
