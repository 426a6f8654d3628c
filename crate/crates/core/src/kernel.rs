//! Mercer kernels.
//!
//! The feature map of a Mercer kernel is never built: every feature-space
//! inner product the equalizers need is obtained as a kernel evaluation
//! `G(c, c') = φ(c)ᵀφ(c')`, so the (infinite) eigen-expansion only exists
//! implicitly.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};

/// A symmetric positive-semidefinite similarity on equal-length vectors.
///
/// Callers guarantee `a.len() == b.len()`; the checked entry points are
/// [`kernel_eval`] and [`kernel_eval_batch`].
pub trait MercerKernel: Send + Sync {
    fn evaluate(&self, a: &[f64], b: &[f64]) -> f64;
}

/// `G(c, c') = exp(-α ‖c - c'‖²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    alpha: f64,
}

impl GaussianKernel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("kernel bandwidth must be positive and finite, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl MercerKernel for GaussianKernel {
    #[inline]
    fn evaluate(&self, a: &[f64], b: &[f64]) -> f64 {
        (-self.alpha * squared_distance(a, b)).exp()
    }
}

/// Direct sum of squared differences. The `‖a‖² + ‖b‖² - 2a·b` form cancels
/// badly for near-identical vectors.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// An equalizer input vector (tap window) of fixed, nonzero length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputVector(Vec<f64>);

impl InputVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidLength("input vector must have at least one entry".into()));
        }
        check_finite(&values)?;
        Ok(Self(values))
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

impl AsRef<[f64]> for InputVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn kernel_eval<K: MercerKernel + ?Sized>(k: &K, c: &InputVector, c_prime: &InputVector) -> Result<f64> {
    if c.len() != c_prime.len() {
        return Err(Error::DimensionMismatch { expected: c.len(), got: c_prime.len() });
    }
    Ok(k.evaluate(c.as_slice(), c_prime.as_slice()))
}

pub fn kernel_eval_batch<K: MercerKernel + ?Sized>(
    k: &K,
    dictionary: &[InputVector],
    c_prime: &InputVector,
) -> Result<Vec<f64>> {
    dictionary.iter().map(|c| kernel_eval(k, c, c_prime)).collect()
}
