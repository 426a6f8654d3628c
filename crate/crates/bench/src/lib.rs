//! Shared fixtures for the equalizer benchmarks.

use kaf_core::channel::NONLINEAR_REFERENCE;
use kaf_core::equalizer::{klms_train, KlmsParams, KlmsState, TapVectorizer};
use kaf_core::experiment::{simulate_link, ExperimentConfig, LinkData};

/// A simulated NONLINEAR_REFERENCE link of `n` symbols.
pub fn link(n: usize, seed: u64) -> LinkData {
    let mut cfg = ExperimentConfig::for_preset(&NONLINEAR_REFERENCE, seed);
    cfg.n_symbols = n;
    simulate_link(&cfg, 0, 0.0).expect("preset link")
}

/// KLMS state trained for `steps` iterations with default parameters.
pub fn trained_klms(steps: usize) -> (KlmsState, LinkData) {
    let data = link(steps + 1000, 1);
    let params = KlmsParams { train_len: steps, ..KlmsParams::default() };
    let v = TapVectorizer::centered(params.n_taps).expect("taps");
    let state = klms_train(&data.rx, &data.tx, params, &v).expect("training").state;
    (state, data)
}

/// Input windows for the first `count` symbols.
pub fn windows(rx: &[f64], n_taps: usize, count: usize) -> Vec<Vec<f64>> {
    let v = TapVectorizer::centered(n_taps).expect("taps");
    (0..count)
        .map(|i| {
            let mut w = vec![0.0; n_taps];
            v.fill(rx, i, &mut w);
            w
        })
        .collect()
}
