//! Kernel least-mean-square equalizer.
//!
//! LMS run in the feature space of a Gaussian kernel. The weight vector
//! `h(i) = μ Σ_j e(j) φ(c(j))` lives in that (infinite-dimensional) space and
//! is never formed; instead the filter keeps its exact dual representation,
//! the stored inputs `c(j)` and coefficients `μ e(j)`. Each iteration
//!
//! ```text
//! f_{i-1}(c(i)) = Σ_{j<i} μ e(j) G(c(j), c(i))     prediction
//! e(i)          = x(i) - f_{i-1}(c(i))              error
//! f_i           = f_{i-1} + μ e(i) G(c(i), ·)       append c(i), μ e(i)
//! ```
//!
//! so iteration `i` costs `O(i)` time and the state holds `i` entries. There
//! is no sparsification: the dictionary grows by one entry per training step,
//! and `train_len` is the only bound on its size.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::tap::TapVectorizer;
use crate::error::{check_finite, Error, Result};
use crate::kernel::{GaussianKernel, MercerKernel};
use crate::pam::SymbolSequence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlmsParams {
    pub mu: f64,
    pub alpha: f64,
    pub n_taps: usize,
    pub train_len: usize,
}

impl KlmsParams {
    pub const DEFAULT_MU: f64 = 0.5;
    pub const DEFAULT_ALPHA: f64 = 0.005;
    pub const DEFAULT_TAPS: usize = 10;
    pub const DEFAULT_TRAIN_LEN: usize = 20_000;

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("KLMS mu must be positive, got {}", self.mu)));
        }
        if self.n_taps == 0 {
            return Err(Error::InvalidParameter("KLMS needs at least one tap".into()));
        }
        if self.train_len == 0 {
            return Err(Error::InvalidParameter("KLMS train_len must be at least 1".into()));
        }
        GaussianKernel::new(self.alpha).map(|_| ())
    }
}

impl Default for KlmsParams {
    fn default() -> Self {
        Self {
            mu: Self::DEFAULT_MU,
            alpha: Self::DEFAULT_ALPHA,
            n_taps: Self::DEFAULT_TAPS,
            train_len: Self::DEFAULT_TRAIN_LEN,
        }
    }
}

/// Dictionary of stored inputs plus their coefficients `μ e(j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KlmsState {
    params: KlmsParams,
    kernel: GaussianKernel,
    // Row-major, `n_taps` values per entry.
    dictionary: Vec<f64>,
    coefficients: Vec<f64>,
}

impl KlmsState {
    pub fn new(params: KlmsParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            kernel: GaussianKernel::new(params.alpha)?,
            params,
            dictionary: Vec::new(),
            coefficients: Vec::new(),
        })
    }

    /// Rebuilds a state from a flat row-major dictionary and its coefficients.
    pub fn from_parts(params: KlmsParams, dictionary: Vec<f64>, coefficients: Vec<f64>) -> Result<Self> {
        let mut state = Self::new(params)?;
        if dictionary.len() != coefficients.len() * params.n_taps {
            return Err(Error::InvalidLength(format!(
                "dictionary holds {} values, expected {} x {}",
                dictionary.len(),
                coefficients.len(),
                params.n_taps
            )));
        }
        check_finite(&dictionary)?;
        check_finite(&coefficients)?;
        state.dictionary = dictionary;
        state.coefficients = coefficients;
        Ok(state)
    }

    pub fn params(&self) -> &KlmsParams {
        &self.params
    }

    pub fn n_taps(&self) -> usize {
        self.params.n_taps
    }

    /// Number of dictionary entries.
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn dictionary(&self) -> &[f64] {
        &self.dictionary
    }

    pub fn dictionary_entry(&self, j: usize) -> &[f64] {
        let l = self.params.n_taps;
        &self.dictionary[j * l..(j + 1) * l]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Count of stored reals (inputs plus coefficients).
    pub fn storage_len(&self) -> usize {
        self.dictionary.len() + self.coefficients.len()
    }

    fn check_dim(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.params.n_taps {
            return Err(Error::DimensionMismatch { expected: self.params.n_taps, got: c.len() });
        }
        Ok(())
    }

    /// `Σ_j coefficient[j] · G(c(j), c')`; zero for an empty dictionary.
    pub fn predict(&self, c_prime: &[f64]) -> Result<f64> {
        self.check_dim(c_prime)?;
        Ok(self.predict_unchecked(c_prime))
    }

    #[inline]
    fn predict_unchecked(&self, c_prime: &[f64]) -> f64 {
        self.dictionary
            .chunks_exact(self.params.n_taps)
            .zip(&self.coefficients)
            .map(|(c, a)| a * self.kernel.evaluate(c, c_prime))
            .sum()
    }

    /// One KLMS iteration; returns the a-priori error `e(i)`.
    pub fn train_step(&mut self, c_i: &[f64], x_i: f64) -> Result<f64> {
        self.check_dim(c_i)?;
        check_finite(c_i)?;
        if !x_i.is_finite() {
            return Err(Error::NonFinite(0));
        }
        let e = x_i - self.predict_unchecked(c_i);
        self.dictionary.extend_from_slice(c_i);
        self.coefficients.push(self.params.mu * e);
        Ok(e)
    }

    /// Frozen-state prediction for every sample of `received`.
    pub fn equalize(&self, received: &[f64], v: &TapVectorizer) -> Result<Vec<f64>> {
        self.equalize_span(received, v, 0..received.len())
    }

    /// Frozen-state prediction for the indices in `span` only.
    pub fn equalize_span(&self, received: &[f64], v: &TapVectorizer, span: Range<usize>) -> Result<Vec<f64>> {
        if v.n_taps() != self.params.n_taps {
            return Err(Error::DimensionMismatch { expected: self.params.n_taps, got: v.n_taps() });
        }
        v.check_signal(received)?;
        if span.end > received.len() || span.start > span.end {
            return Err(Error::InvalidLength(format!("span {span:?} outside signal of length {}", received.len())));
        }
        let mut buf = vec![0.0; v.n_taps()];
        Ok(span
            .map(|i| {
                v.fill(received, i, &mut buf);
                self.predict_unchecked(&buf)
            })
            .collect())
    }
}

/// Result of a training pass: final state and the per-step a-priori errors.
#[derive(Debug, Clone)]
pub struct KlmsTraining {
    pub state: KlmsState,
    pub errors: Vec<f64>,
}

impl KlmsTraining {
    /// Raw learning curve, `e(i)²`.
    pub fn mse_curve(&self) -> Vec<f64> {
        self.errors.iter().map(|e| e * e).collect()
    }
}

/// Runs exactly `params.train_len` iterations over the start of the data.
pub fn klms_train(
    received: &[f64],
    desired: &SymbolSequence,
    params: KlmsParams,
    v: &TapVectorizer,
) -> Result<KlmsTraining> {
    params.validate()?;
    if v.n_taps() != params.n_taps {
        return Err(Error::DimensionMismatch { expected: params.n_taps, got: v.n_taps() });
    }
    check_training_data(received, desired.as_slice(), params.train_len)?;
    v.check_signal(received)?;
    let mut state = KlmsState::new(params)?;
    state.dictionary.reserve(params.train_len * params.n_taps);
    state.coefficients.reserve(params.train_len);
    let mut buf = vec![0.0; params.n_taps];
    let mut errors = Vec::with_capacity(params.train_len);
    for (i, &x) in desired.as_slice()[..params.train_len].iter().enumerate() {
        v.fill(received, i, &mut buf);
        errors.push(state.train_step(&buf, x)?);
    }
    Ok(KlmsTraining { state, errors })
}

pub(crate) fn check_training_data(received: &[f64], desired: &[f64], train_len: usize) -> Result<()> {
    if received.len() != desired.len() {
        return Err(Error::InvalidLength(format!(
            "received ({}) and desired ({}) are not aligned",
            received.len(),
            desired.len()
        )));
    }
    if received.len() < train_len {
        return Err(Error::InvalidLength(format!("{} samples cannot cover train_len {train_len}", received.len())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn params(mu: f64, alpha: f64, n_taps: usize, train_len: usize) -> KlmsParams {
        KlmsParams { mu, alpha, n_taps, train_len }
    }

    #[test]
    fn empty_state_predicts_zero() {
        let s = KlmsState::new(params(0.5, 1.0, 3, 1)).unwrap();
        assert_eq!(s.predict(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!(matches!(s.predict(&[1.0]), Err(Error::DimensionMismatch { expected: 3, got: 1 })));
    }

    #[test]
    fn single_entry_prediction() {
        let s = KlmsState::from_parts(params(0.5, 1.0, 1, 1), vec![0.0], vec![0.5]).unwrap();
        assert_eq!(s.predict(&[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn two_hand_iterations() {
        let mut s = KlmsState::new(params(0.5, 1.0, 1, 2)).unwrap();
        assert_eq!(s.train_step(&[1.0], 2.0).unwrap(), 2.0);
        assert_eq!(s.coefficients(), &[1.0]);
        assert_eq!(s.train_step(&[1.0], 2.0).unwrap(), 1.0);
        assert_eq!(s.coefficients(), &[1.0, 0.5]);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn predict_matches_naive_sum() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        let p = params(0.3, 0.2, 4, 50);
        let dict: Vec<f64> = (0..200).map(|_| rng.random_range(-3.0..3.0)).collect();
        let coef: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = KlmsState::from_parts(p, dict.clone(), coef.clone()).unwrap();
        let q = [0.5, -1.0, 2.0, 0.0];
        let mut naive = 0.0;
        for j in 0..50 {
            let mut d2 = 0.0;
            for k in 0..4 {
                d2 += (dict[4 * j + k] - q[k]).powi(2);
            }
            naive += coef[j] * (-0.2 * d2).exp();
        }
        assert!((s.predict(&q).unwrap() - naive).abs() < 1e-12);
    }

    #[test]
    fn training_pass() {
        let rx = [0.9, -2.8, 1.1, 3.2];
        let tx = SymbolSequence::new(vec![1.0, -3.0, 1.0, 3.0]).unwrap();
        let v = TapVectorizer::centered(3).unwrap();
        let t = klms_train(&rx, &tx, params(0.5, 0.1, 3, 1), &v).unwrap();
        assert_eq!(t.state.len(), 1);
        assert_eq!(t.mse_curve(), vec![1.0]);

        let a = klms_train(&rx, &tx, params(0.5, 0.1, 3, 4), &v).unwrap();
        let b = klms_train(&rx, &tx, params(0.5, 0.1, 3, 4), &v).unwrap();
        assert_eq!(a.state, b.state);
        assert_eq!(a.state.storage_len(), 4 * 4);

        assert!(klms_train(&rx, &tx, params(0.5, 0.1, 3, 5), &v).is_err());
        let v2 = TapVectorizer::centered(2).unwrap();
        assert!(klms_train(&rx, &tx, params(0.5, 0.1, 3, 4), &v2).is_err());
    }

    #[test]
    fn equalize_is_read_only() {
        let rx: Vec<f64> = (0..30).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let tx = SymbolSequence::new(rx.iter().map(|&r| crate::pam::slice_sample(r)).collect()).unwrap();
        let v = TapVectorizer::centered(3).unwrap();
        let t = klms_train(&rx, &tx, params(0.5, 0.1, 3, 20), &v).unwrap();
        let first = t.state.equalize(&rx, &v).unwrap();
        let second = t.state.equalize(&rx, &v).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.len(), rx.len());
        assert_eq!(t.state.len(), 20);
        let span = t.state.equalize_span(&rx, &v, 10..25).unwrap();
        assert_eq!(span, first[10..25].to_vec());
        let bad = TapVectorizer::centered(4).unwrap();
        assert!(t.state.equalize(&rx, &bad).is_err());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(KlmsState::new(params(0.0, 1.0, 1, 1)).is_err());
        assert!(KlmsState::new(params(0.5, 0.0, 1, 1)).is_err());
        assert!(KlmsState::new(params(0.5, 1.0, 0, 1)).is_err());
        assert!(KlmsState::new(params(0.5, 1.0, 1, 0)).is_err());
        assert!(KlmsState::from_parts(params(0.5, 1.0, 2, 1), vec![1.0], vec![1.0]).is_err());
    }
}
