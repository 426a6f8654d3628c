//! Simulated direct-detection link.
//!
//! The link is a Wiener-Hammerstein cascade evaluated at one sample per
//! symbol: transmit FIR, memoryless polynomial `g(u) = u + a2 u² + a3 u³`,
//! receive FIR, then additive white Gaussian noise. Noise variance is set
//! from the mean power of the distorted waveform actually produced, so the
//! configured SNR holds for the received signal rather than the nominal
//! constellation.
//!
//! Gaussian variates are drawn with the ziggurat sampler of
//! `rand_distr::StandardNormal` from a `xoshiro256++` stream seeded by
//! [`ChannelConfig::seed`].

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::pam::SymbolSequence;

/// Sentinel SNR that disables the noise stage.
pub const NOISELESS: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub h_pre: Vec<f64>,
    pub a2: f64,
    pub a3: f64,
    pub h_post: Vec<f64>,
    #[serde(with = "snr_repr")]
    pub snr_db: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h_pre.is_empty() || self.h_post.is_empty() {
            return Err(Error::InvalidParameter("channel FIRs need at least one tap".into()));
        }
        check_finite(&self.h_pre)?;
        check_finite(&self.h_post)?;
        if !self.a2.is_finite() || !self.a3.is_finite() {
            return Err(Error::InvalidParameter("polynomial coefficients must be finite".into()));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!("snr_db {} is not usable", self.snr_db)));
        }
        Ok(())
    }

    pub fn noiseless(mut self) -> Self {
        self.snr_db = NOISELESS;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }

    /// Single-tap unit FIRs, no distortion, no noise.
    pub fn identity() -> Self {
        IDENTITY.config(0)
    }
}

/// A named, fixed channel parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPreset {
    pub name: &'static str,
    pub h_pre: &'static [f64],
    pub a2: f64,
    pub a3: f64,
    pub h_post: &'static [f64],
    pub snr_db: f64,
}

impl ChannelPreset {
    pub fn config(&self, seed: u64) -> ChannelConfig {
        ChannelConfig {
            h_pre: self.h_pre.to_vec(),
            a2: self.a2,
            a3: self.a3,
            h_post: self.h_post.to_vec(),
            snr_db: self.snr_db,
            seed,
        }
    }
}

/// Mild linear ISI that a linear DFE nearly removes.
pub const LINEAR_MILD: ChannelPreset =
    ChannelPreset { name: "LINEAR_MILD", h_pre: &[1.0, 0.25], a2: 0.0, a3: 0.0, h_post: &[1.0], snr_db: 18.0 };

/// ISI on both sides of a strong quadratic + cubic distortion.
pub const NONLINEAR_REFERENCE: ChannelPreset = ChannelPreset {
    name: "NONLINEAR_REFERENCE",
    h_pre: &[1.0, 0.35, 0.1],
    a2: 0.08,
    a3: 0.06,
    h_post: &[1.0, 0.2],
    snr_db: 24.0,
};

/// Noiseless pass-through.
pub const IDENTITY: ChannelPreset =
    ChannelPreset { name: "IDENTITY", h_pre: &[1.0], a2: 0.0, a3: 0.0, h_post: &[1.0], snr_db: NOISELESS };

pub const PRESETS: [ChannelPreset; 3] = [LINEAR_MILD, NONLINEAR_REFERENCE, IDENTITY];

pub fn preset_by_name(name: &str) -> Option<ChannelPreset> {
    PRESETS.iter().copied().find(|p| p.name.eq_ignore_ascii_case(name))
}

/// Causal convolution truncated to the input length.
pub fn apply_fir(x: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() || h.is_empty() {
        return Err(Error::InvalidLength("FIR input and taps must be nonempty".into()));
    }
    let out = (0..x.len()).map(|n| h.iter().enumerate().take(n + 1).map(|(k, &hk)| hk * x[n - k]).sum()).collect();
    Ok(out)
}

/// Full linear convolution of two tap sets (length `a + b - 1`).
pub fn convolve_taps(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

pub fn apply_nonlinearity(x: &[f64], a2: f64, a3: f64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::InvalidLength("nonlinearity input must be nonempty".into()));
    }
    check_finite(x)?;
    Ok(x.iter().map(|&u| u + a2 * u * u + a3 * u * u * u).collect())
}

pub fn mean_power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

pub fn add_awgn(x: &[f64], snr_db: f64, seed: u64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::InvalidLength("noise input must be nonempty".into()));
    }
    check_finite(x)?;
    if snr_db == f64::INFINITY {
        return Ok(x.to_vec());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!("snr_db {snr_db} is not usable")));
    }
    let power = mean_power(x);
    if power == 0.0 {
        return Err(Error::InvalidParameter("SNR is undefined for an all-zero signal".into()));
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    Ok(x.iter()
        .map(|&v| {
            let n: f64 = StandardNormal.sample(&mut rng);
            v + sigma * n
        })
        .collect())
}

pub fn simulate_channel(cfg: &ChannelConfig, tx: &SymbolSequence) -> Result<Vec<f64>> {
    simulate_waveform(cfg, tx.as_slice())
}

/// Same cascade as [`simulate_channel`] for an arbitrary real input.
pub fn simulate_waveform(cfg: &ChannelConfig, tx: &[f64]) -> Result<Vec<f64>> {
    cfg.validate()?;
    let u = apply_fir(tx, &cfg.h_pre)?;
    let g = apply_nonlinearity(&u, cfg.a2, cfg.a3)?;
    let y = apply_fir(&g, &cfg.h_post)?;
    add_awgn(&y, cfg.snr_db, cfg.seed)
}

mod snr_repr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            Repr::Num(*v).serialize(s)
        } else {
            Repr::Text(if *v > 0.0 { "inf".into() } else { "-inf".into() }).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn fir_examples() {
        assert_eq!(apply_fir(&[1.0, 0.0, 0.0], &[0.9, 0.3]).unwrap(), vec![0.9, 0.3, 0.0]);
        assert_eq!(apply_fir(&[1.0, 1.0], &[0.5, 0.5]).unwrap(), vec![0.5, 1.0]);
        let x = [0.3, -1.2, 4.0];
        assert_eq!(apply_fir(&x, &[1.0]).unwrap(), x.to_vec());
        assert!(apply_fir(&[], &[1.0]).is_err());
        assert!(apply_fir(&[1.0], &[]).is_err());
    }

    #[test]
    fn nonlinearity_examples() {
        assert!(close(&apply_nonlinearity(&[2.0], 0.0, 0.1).unwrap(), &[2.8], 1e-15));
        assert!(close(&apply_nonlinearity(&[-1.0], 0.2, 0.0).unwrap(), &[-0.8], 1e-15));
        let x = [0.5, -3.0];
        assert_eq!(apply_nonlinearity(&x, 0.0, 0.0).unwrap(), x.to_vec());
        assert!(apply_nonlinearity(&[f64::INFINITY], 0.0, 0.0).is_err());
    }

    #[test]
    fn awgn_disabled_and_deterministic() {
        let x = [1.0, -3.0, 1.0];
        assert_eq!(add_awgn(&x, NOISELESS, 1).unwrap(), x.to_vec());
        assert_eq!(add_awgn(&x, 10.0, 5).unwrap(), add_awgn(&x, 10.0, 5).unwrap());
        assert_ne!(add_awgn(&x, 10.0, 5).unwrap(), add_awgn(&x, 10.0, 6).unwrap());
        assert!(add_awgn(&[0.0, 0.0], 10.0, 1).is_err());
    }

    #[test]
    fn awgn_variance_matches_snr() {
        let x: Vec<f64> = (0..1_000_000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let y = add_awgn(&x, 20.0, 42).unwrap();
        let n = y.len() as f64;
        let noise: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let mean = noise.iter().sum::<f64>() / n;
        let var = noise.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 0.01).abs() / 0.01 < 0.02, "noise variance {var}");
    }

    #[test]
    fn identity_chain() {
        let tx = SymbolSequence::new(vec![3.0, -1.0, 1.0, -3.0]).unwrap();
        assert_eq!(simulate_channel(&ChannelConfig::identity(), &tx).unwrap(), tx.as_slice());
    }

    #[test]
    fn nonlinear_reference_constant_input() {
        // u settles at 3 * (1 + 0.35 + 0.1) = 4.35, g(u) at
        // 4.35 + 0.08 * 4.35^2 + 0.06 * 4.35^3, then h_post gains 1.2.
        let cfg = NONLINEAR_REFERENCE.config(0).noiseless();
        let tx = SymbolSequence::new(vec![3.0; 8]).unwrap();
        let y = simulate_channel(&cfg, &tx).unwrap();
        let u = 4.35f64;
        let g = u + 0.08 * u * u + 0.06 * u * u * u;
        for &v in &y[3..] {
            assert!((v - 1.2 * g).abs() < 1e-12);
        }
        // First sample only sees the cursor taps: u = 3.
        let g0 = 3.0 + 0.08 * 9.0 + 0.06 * 27.0;
        assert!((y[0] - g0).abs() < 1e-12);
    }

    #[test]
    fn linear_mild_impulse_response() {
        let cfg = LINEAR_MILD.config(0).noiseless();
        let mut x = vec![0.0; 6];
        x[0] = 1.0;
        let y = simulate_waveform(&cfg, &x).unwrap();
        let mut expected = convolve_taps(LINEAR_MILD.h_pre, LINEAR_MILD.h_post);
        expected.resize(6, 0.0);
        assert!(close(&y, &expected, 1e-15));
    }

    #[test]
    fn presets_resolve_by_name() {
        assert_eq!(preset_by_name("nonlinear_reference"), Some(NONLINEAR_REFERENCE));
        assert_eq!(preset_by_name("LINEAR_MILD"), Some(LINEAR_MILD));
        assert!(preset_by_name("fiber").is_none());
    }

    fn signal() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-4.0f64..4.0, 1..64)
    }

    fn taps() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 1..6)
    }

    proptest! {
        #[test]
        fn superposition_without_distortion(x in signal(), h1 in taps(), h2 in taps(),
                                            a in -2.0f64..2.0, b in -2.0f64..2.0, seed in any::<u64>()) {
            let y: Vec<f64> = x.iter().rev().copied().collect();
            let cfg = ChannelConfig { h_pre: h1, a2: 0.0, a3: 0.0, h_post: h2, snr_db: NOISELESS, seed };
            let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let lhs = simulate_waveform(&cfg, &mix).unwrap();
            let sx = simulate_waveform(&cfg, &x).unwrap();
            let sy = simulate_waveform(&cfg, &y).unwrap();
            let rhs: Vec<f64> = sx.iter().zip(&sy).map(|(p, q)| a * p + b * q).collect();
            prop_assert!(close(&lhs, &rhs, 1e-9));
        }

        #[test]
        fn fir_associativity(x in signal(), h1 in taps(), h2 in taps()) {
            let two_stage = apply_fir(&apply_fir(&x, &h1).unwrap(), &h2).unwrap();
            let merged = apply_fir(&x, &convolve_taps(&h1, &h2)).unwrap();
            let scale = two_stage.iter().chain(&merged).fold(1.0f64, |m, v| m.max(v.abs()));
            prop_assert!(close(&two_stage, &merged, 1e-12 * scale));
        }

        #[test]
        fn output_length_and_determinism(x in signal(), seed in any::<u64>()) {
            prop_assume!(x.iter().any(|v| *v != 0.0));
            let cfg = NONLINEAR_REFERENCE.config(seed);
            let a = simulate_waveform(&cfg, &x).unwrap();
            let b = simulate_waveform(&cfg, &x).unwrap();
            prop_assert_eq!(a.len(), x.len());
            prop_assert_eq!(a, b);
        }
    }
}
