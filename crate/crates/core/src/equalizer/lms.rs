use serde::{Deserialize, Serialize};

use super::klms::check_training_data;
use super::tap::TapVectorizer;
use crate::error::{check_finite, Error, Result};
use crate::pam::SymbolSequence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmsParams {
    pub mu: f64,
    pub n_taps: usize,
    pub train_len: usize,
}

impl LmsParams {
    pub const DEFAULT_MU: f64 = 1e-3;
    pub const DEFAULT_TAPS: usize = 11;
    pub const DEFAULT_TRAIN_LEN: usize = 50_000;

    pub fn validate(&self) -> Result<()> {
        validate_mu(self.mu)?;
        if self.n_taps == 0 {
            return Err(Error::InvalidParameter("LMS needs at least one tap".into()));
        }
        if self.train_len == 0 {
            return Err(Error::InvalidParameter("LMS train_len must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for LmsParams {
    fn default() -> Self {
        Self { mu: Self::DEFAULT_MU, n_taps: Self::DEFAULT_TAPS, train_len: Self::DEFAULT_TRAIN_LEN }
    }
}

pub(crate) fn validate_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("step size must be positive, got {mu}")))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `w += step · c`, with `step = μ e` already formed.
#[inline]
pub(crate) fn lms_update(w: &mut [f64], c: &[f64], step: f64) {
    for (wk, ck) in w.iter_mut().zip(c) {
        *wk += step * ck;
    }
}

/// Linear transversal filter adapted by the LMS rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmsState {
    weights: Vec<f64>,
    mu: f64,
}

impl LmsState {
    pub fn new(n_taps: usize, mu: f64) -> Result<Self> {
        validate_mu(mu)?;
        if n_taps == 0 {
            return Err(Error::InvalidParameter("LMS needs at least one tap".into()));
        }
        Ok(Self { weights: vec![0.0; n_taps], mu })
    }

    pub fn from_weights(weights: Vec<f64>, mu: f64) -> Result<Self> {
        validate_mu(mu)?;
        if weights.is_empty() {
            return Err(Error::InvalidParameter("LMS needs at least one tap".into()));
        }
        check_finite(&weights)?;
        Ok(Self { weights, mu })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n_taps(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, c: &[f64]) -> Result<f64> {
        self.check_dim(c)?;
        Ok(dot(&self.weights, c))
    }

    fn check_dim(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), got: c.len() });
        }
        Ok(())
    }

    /// `e = x - w·c`, then `w ← w + μ e c`.
    pub fn train_step(&mut self, c_i: &[f64], x_i: f64) -> Result<f64> {
        self.check_dim(c_i)?;
        let e = x_i - dot(&self.weights, c_i);
        lms_update(&mut self.weights, c_i, self.mu * e);
        Ok(e)
    }

    pub fn equalize(&self, received: &[f64], v: &TapVectorizer) -> Result<Vec<f64>> {
        if v.n_taps() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), got: v.n_taps() });
        }
        v.check_signal(received)?;
        let mut buf = vec![0.0; v.n_taps()];
        Ok((0..received.len())
            .map(|i| {
                v.fill(received, i, &mut buf);
                dot(&self.weights, &buf)
            })
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct LmsTraining {
    pub state: LmsState,
    pub errors: Vec<f64>,
}

pub fn lms_train(
    received: &[f64],
    desired: &SymbolSequence,
    params: LmsParams,
    v: &TapVectorizer,
) -> Result<LmsTraining> {
    params.validate()?;
    if v.n_taps() != params.n_taps {
        return Err(Error::DimensionMismatch { expected: params.n_taps, got: v.n_taps() });
    }
    check_training_data(received, desired.as_slice(), params.train_len)?;
    v.check_signal(received)?;
    let mut state = LmsState::new(params.n_taps, params.mu)?;
    let mut buf = vec![0.0; params.n_taps];
    let mut errors = Vec::with_capacity(params.train_len);
    for (i, &x) in desired.as_slice()[..params.train_len].iter().enumerate() {
        v.fill(received, i, &mut buf);
        errors.push(state.train_step(&buf, x)?);
    }
    Ok(LmsTraining { state, errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_step() {
        let mut s = LmsState::new(2, 0.1).unwrap();
        assert_eq!(s.train_step(&[1.0, 0.0], 1.0).unwrap(), 1.0);
        assert_eq!(s.weights(), &[0.1, 0.0]);
    }

    #[test]
    fn zero_error_is_fixed_point() {
        let mut s = LmsState::from_weights(vec![0.5, -0.25], 0.1).unwrap();
        let e = s.train_step(&[2.0, 4.0], 0.0).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(s.weights(), &[0.5, -0.25]);
    }

    #[test]
    fn dimension_errors() {
        let mut s = LmsState::new(2, 0.1).unwrap();
        assert!(s.train_step(&[1.0], 1.0).is_err());
        assert!(s.predict(&[1.0, 2.0, 3.0]).is_err());
        assert!(LmsState::new(0, 0.1).is_err());
        assert!(LmsState::new(2, -0.1).is_err());
    }

    #[test]
    fn converges_on_scaled_identity() {
        // Received = 0.5 · symbol; the ideal single-tap weight is 2.
        let tx: Vec<f64> = (0..4000).map(|i| [-3.0, 1.0, -1.0, 3.0][(i * 7 + i / 3) % 4]).collect();
        let rx: Vec<f64> = tx.iter().map(|x| 0.5 * x).collect();
        let v = TapVectorizer::centered(1).unwrap();
        let t =
            lms_train(&rx, &SymbolSequence::new(tx).unwrap(), LmsParams { mu: 0.05, n_taps: 1, train_len: 4000 }, &v)
                .unwrap();
        assert!((t.state.weights()[0] - 2.0).abs() < 1e-9);
    }
}
