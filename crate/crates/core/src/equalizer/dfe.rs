//! Decision-feedback equalizer adapted by LMS.
//!
//! Output `y = ff · window - fb · past`, where `past` holds the most recent
//! `n_fbt` symbols, newest first. During training the true symbols are fed
//! back (genie-aided); afterwards the filter runs on its own sliced decisions.

use serde::{Deserialize, Serialize};

use super::klms::check_training_data;
use super::lms::{dot, lms_update, validate_mu};
use super::tap::TapVectorizer;
use crate::error::{check_finite, Error, Result};
use crate::pam::{slice_sample, SymbolSequence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfeParams {
    pub mu: f64,
    pub n_fft: usize,
    pub n_fbt: usize,
    pub train_len: usize,
}

impl DfeParams {
    pub const DEFAULT_MU: f64 = 1e-4;
    pub const DEFAULT_FFT: usize = 43;
    pub const DEFAULT_FBT: usize = 15;
    pub const DEFAULT_TRAIN_LEN: usize = 50_000;

    pub fn validate(&self) -> Result<()> {
        validate_mu(self.mu)?;
        if self.n_fft == 0 {
            return Err(Error::InvalidParameter("DFE needs at least one feed-forward tap".into()));
        }
        if self.train_len == 0 {
            return Err(Error::InvalidParameter("DFE train_len must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for DfeParams {
    fn default() -> Self {
        Self {
            mu: Self::DEFAULT_MU,
            n_fft: Self::DEFAULT_FFT,
            n_fbt: Self::DEFAULT_FBT,
            train_len: Self::DEFAULT_TRAIN_LEN,
        }
    }
}

/// How the error for an adaptation step is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DfeMode {
    /// Known transmitted symbol; `e = desired - y`.
    Training { desired: f64 },
    /// `e = slice(y) - y`.
    DecisionDirected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfeStep {
    pub error: f64,
    pub output: f64,
    pub decision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfeState {
    ff_weights: Vec<f64>,
    fb_weights: Vec<f64>,
    mu: f64,
}

impl DfeState {
    pub fn new(n_fft: usize, n_fbt: usize, mu: f64) -> Result<Self> {
        validate_mu(mu)?;
        if n_fft == 0 {
            return Err(Error::InvalidParameter("DFE needs at least one feed-forward tap".into()));
        }
        Ok(Self { ff_weights: vec![0.0; n_fft], fb_weights: vec![0.0; n_fbt], mu })
    }

    pub fn from_weights(ff_weights: Vec<f64>, fb_weights: Vec<f64>, mu: f64) -> Result<Self> {
        let mut s = Self::new(ff_weights.len(), fb_weights.len(), mu)?;
        check_finite(&ff_weights)?;
        check_finite(&fb_weights)?;
        s.ff_weights = ff_weights;
        s.fb_weights = fb_weights;
        Ok(s)
    }

    pub fn ff_weights(&self) -> &[f64] {
        &self.ff_weights
    }

    pub fn fb_weights(&self) -> &[f64] {
        &self.fb_weights
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n_fft(&self) -> usize {
        self.ff_weights.len()
    }

    pub fn n_fbt(&self) -> usize {
        self.fb_weights.len()
    }

    fn check_dims(&self, ff_window: &[f64], past: &[f64]) -> Result<()> {
        if ff_window.len() != self.ff_weights.len() {
            return Err(Error::DimensionMismatch { expected: self.ff_weights.len(), got: ff_window.len() });
        }
        if past.len() != self.fb_weights.len() {
            return Err(Error::DimensionMismatch { expected: self.fb_weights.len(), got: past.len() });
        }
        Ok(())
    }

    pub fn output(&self, ff_window: &[f64], past: &[f64]) -> Result<f64> {
        self.check_dims(ff_window, past)?;
        Ok(self.output_unchecked(ff_window, past))
    }

    #[inline]
    fn output_unchecked(&self, ff_window: &[f64], past: &[f64]) -> f64 {
        dot(&self.ff_weights, ff_window) - dot(&self.fb_weights, past)
    }

    /// One adaptation step. `past` must hold true symbols in training mode
    /// and earlier sliced decisions in decision-directed mode.
    pub fn train_step(&mut self, ff_window: &[f64], past: &[f64], mode: DfeMode) -> Result<DfeStep> {
        self.check_dims(ff_window, past)?;
        let output = self.output_unchecked(ff_window, past);
        let decision = slice_sample(output);
        let error = match mode {
            DfeMode::Training { desired } => desired - output,
            DfeMode::DecisionDirected => decision - output,
        };
        let step = self.mu * error;
        lms_update(&mut self.ff_weights, ff_window, step);
        // y depends on fb with a minus sign.
        lms_update(&mut self.fb_weights, past, -step);
        Ok(DfeStep { error, output, decision })
    }
}

/// Shift `value` into a newest-first history buffer.
#[inline]
fn push_history(past: &mut [f64], value: f64) {
    if let Some(last) = past.len().checked_sub(1) {
        past.copy_within(0..last, 1);
        past[0] = value;
    }
}

#[derive(Debug, Clone)]
pub struct DfeTraining {
    pub state: DfeState,
    pub errors: Vec<f64>,
}

impl DfeTraining {
    pub fn mse_curve(&self) -> Vec<f64> {
        self.errors.iter().map(|e| e * e).collect()
    }
}

/// Genie-aided training over the first `params.train_len` symbols.
pub fn dfe_train(
    received: &[f64],
    desired: &SymbolSequence,
    params: DfeParams,
    v: &TapVectorizer,
) -> Result<DfeTraining> {
    params.validate()?;
    if v.n_taps() != params.n_fft {
        return Err(Error::DimensionMismatch { expected: params.n_fft, got: v.n_taps() });
    }
    check_training_data(received, desired.as_slice(), params.train_len)?;
    v.check_signal(received)?;
    let mut state = DfeState::new(params.n_fft, params.n_fbt, params.mu)?;
    let mut window = vec![0.0; params.n_fft];
    let mut past = vec![0.0; params.n_fbt];
    let mut errors = Vec::with_capacity(params.train_len);
    for (i, &x) in desired.as_slice()[..params.train_len].iter().enumerate() {
        v.fill(received, i, &mut window);
        let step = state.train_step(&window, &past, DfeMode::Training { desired: x })?;
        errors.push(step.error);
        push_history(&mut past, x);
    }
    Ok(DfeTraining { state, errors })
}

/// Frozen-weight, decision-directed pass over the whole signal.
pub fn dfe_equalize(state: &DfeState, received: &[f64], v: &TapVectorizer) -> Result<(Vec<f64>, SymbolSequence)> {
    if v.n_taps() != state.n_fft() {
        return Err(Error::DimensionMismatch { expected: state.n_fft(), got: v.n_taps() });
    }
    v.check_signal(received)?;
    let mut window = vec![0.0; state.n_fft()];
    let mut past = vec![0.0; state.n_fbt()];
    let mut soft = Vec::with_capacity(received.len());
    let mut decisions = Vec::with_capacity(received.len());
    for i in 0..received.len() {
        v.fill(received, i, &mut window);
        let y = state.output_unchecked(&window, &past);
        let d = slice_sample(y);
        soft.push(y);
        decisions.push(d);
        push_history(&mut past, d);
    }
    Ok((soft, SymbolSequence::new(decisions)?))
}
