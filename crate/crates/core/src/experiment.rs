//! End-to-end measurement runs.
//!
//! Every run follows the same protocol: generate bits, map to PAM4, pass
//! through the simulated channel, train each configured equalizer on the
//! start of the sequence, then equalize and slice the held-out tail
//! `[held_out_start, n_symbols)` and count bit errors there. The held-out
//! start is the longest configured training length, so no held-out symbol
//! is ever seen by a training call.
//!
//! # Seeds
//!
//! All randomness derives from `master_seed` and the channel's `seed` salt:
//!
//! ```text
//! mix(a, b)       = splitmix64(a ^ splitmix64(b))
//! bits_seed(k)    = mix(master_seed, 2k)
//! noise_seed(k)   = mix(master_seed ^ splitmix64(channel.seed), 2k + 1)
//! ```
//!
//! where `k` is the emulated core index (0 for single-channel runs), so core
//! 0 of a multicore run reproduces the single run exactly.
//!
//! MSE curves are training-segment a-priori errors; BER is always held-out.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{simulate_channel, ChannelConfig, ChannelPreset, NONLINEAR_REFERENCE};
use crate::equalizer::{
    dfe_equalize, dfe_train, klms_train, lms_train, DfeParams, KlmsParams, KlmsState, LmsParams, LmsState,
    TapVectorizer,
};
use crate::error::{Error, Result};
use crate::pam::{
    bits_to_pam4, count_bit_errors, fec_verdict, generate_bits, pam4_to_bits, slice_pam4, FecVerdict, SymbolSequence,
};

/// MSE curves are floored here so a perfect prediction stays finite.
pub const MSE_FLOOR_DB: f64 = -100.0;
/// Moving-average window for reported learning curves.
pub const MSE_SMOOTHING_WINDOW: usize = 500;
pub const DEFAULT_N_SYMBOLS: usize = 200_000;
pub const DEFAULT_TIMING_BLOCK: usize = 500;
// Per-block minimum over this many timing passes.
const TIMING_REPEATS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EqualizerKind {
    None,
    Klms,
    Lms,
    Dfe,
}

impl EqualizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            EqualizerKind::None => "none",
            EqualizerKind::Klms => "klms",
            EqualizerKind::Lms => "lms",
            EqualizerKind::Dfe => "dfe",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Some(Self::None),
            "klms" => Some(Self::Klms),
            "lms" => Some(Self::Lms),
            "dfe" => Some(Self::Dfe),
            _ => None,
        }
    }
}

impl std::fmt::Display for EqualizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresConfig {
    pub count: usize,
    /// Per-core SNR offset in dB relative to the channel's `snr_db`.
    pub offsets_db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Name of the preset the channel was taken from, if any.
    pub channel_preset: Option<String>,
    pub channel: ChannelConfig,
    pub n_symbols: usize,
    pub master_seed: u64,
    pub klms: Option<KlmsParams>,
    pub lms: Option<LmsParams>,
    pub dfe: Option<DfeParams>,
    pub sweep: Vec<usize>,
    pub cores: Option<CoresConfig>,
    pub timing_block: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_preset(&NONLINEAR_REFERENCE, 1)
    }
}

impl ExperimentConfig {
    /// Defaults for all three equalizers on a named preset.
    pub fn for_preset(preset: &ChannelPreset, master_seed: u64) -> Self {
        Self {
            channel_preset: Some(preset.name.to_string()),
            channel: preset.config(0),
            n_symbols: DEFAULT_N_SYMBOLS,
            master_seed,
            klms: Some(KlmsParams::default()),
            lms: Some(LmsParams::default()),
            dfe: Some(DfeParams::default()),
            sweep: Vec::new(),
            cores: None,
            timing_block: DEFAULT_TIMING_BLOCK,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if let Some(p) = &self.klms {
            p.validate()?;
        }
        if let Some(p) = &self.lms {
            p.validate()?;
        }
        if let Some(p) = &self.dfe {
            p.validate()?;
        }
        let longest = self.held_out_start();
        if longest >= self.n_symbols {
            return Err(Error::InvalidParameter(format!(
                "train_len {longest} leaves no held-out symbols out of {}",
                self.n_symbols
            )));
        }
        if self.sweep.contains(&0) {
            return Err(Error::InvalidParameter("sweep tap counts must be at least 1".into()));
        }
        if let Some(c) = &self.cores {
            if c.count == 0 {
                return Err(Error::InvalidParameter("cores.count must be at least 1".into()));
            }
            if c.offsets_db.len() != c.count {
                return Err(Error::InvalidParameter(format!(
                    "{} core offsets given for {} cores",
                    c.offsets_db.len(),
                    c.count
                )));
            }
            if c.offsets_db.iter().any(|o| !o.is_finite()) {
                return Err(Error::InvalidParameter("core offsets must be finite".into()));
            }
        }
        if self.timing_block == 0 {
            return Err(Error::InvalidParameter("timing block must be at least 1".into()));
        }
        Ok(())
    }

    /// First held-out index: the longest configured training segment.
    pub fn held_out_start(&self) -> usize {
        [self.klms.map(|p| p.train_len), self.lms.map(|p| p.train_len), self.dfe.map(|p| p.train_len)]
            .into_iter()
            .flatten()
            .max()
            .unwrap_or(0)
    }

    pub fn bits_seed(&self, core: usize) -> u64 {
        mix(self.master_seed, 2 * core as u64)
    }

    pub fn noise_seed(&self, core: usize) -> u64 {
        mix(self.master_seed ^ splitmix64(self.channel.seed), 2 * core as u64 + 1)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualizerResult {
    pub equalizer: EqualizerKind,
    /// Feed-forward taps (zero for the unequalized path).
    pub taps: usize,
    pub feedback_taps: usize,
    pub bit_errors: u64,
    pub bits: u64,
    pub verdict: FecVerdict,
}

impl EqualizerResult {
    pub fn ber(&self) -> f64 {
        self.verdict.ber
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseCurve {
    pub equalizer: EqualizerKind,
    pub train_len: usize,
    pub raw_db: Vec<f64>,
    pub smoothed_db: Vec<f64>,
}

impl MseCurve {
    pub fn from_errors(equalizer: EqualizerKind, errors: &[f64]) -> Self {
        let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
        Self {
            equalizer,
            train_len: errors.len(),
            raw_db: sq.iter().map(|&v| to_db(v)).collect(),
            smoothed_db: moving_average(&sq, MSE_SMOOTHING_WINDOW).into_iter().map(to_db).collect(),
        }
    }

    pub fn terminal_smoothed_db(&self) -> Option<f64> {
        self.smoothed_db.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub taps: usize,
    pub verdict: FecVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreRow {
    pub core: usize,
    pub snr_db: f64,
    pub equalizer: EqualizerKind,
    pub verdict: FecVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingBlock {
    /// Index of the first iteration in the block.
    pub start_iter: usize,
    pub mean_step_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub block: usize,
    pub klms_blocks: Vec<TimingBlock>,
    pub lms_blocks: Vec<TimingBlock>,
    pub klms_fit: LinearFit,
    /// Mean of the LMS block means (the constant-model fit).
    pub lms_mean_ns: f64,
    /// Largest over smallest LMS block mean.
    pub lms_spread: f64,
    /// KLMS stored reals after each block.
    pub klms_storage: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub held_out: (usize, usize),
    pub results: Vec<EqualizerResult>,
    pub mse: Vec<MseCurve>,
    pub sweep: Vec<SweepRow>,
    pub cores: Vec<CoreRow>,
    pub timing: Option<TimingReport>,
}

impl ExperimentReport {
    /// A report for `cfg` with no sections filled in.
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            config: cfg.clone(),
            held_out: (cfg.held_out_start(), cfg.n_symbols),
            results: Vec::new(),
            mse: Vec::new(),
            sweep: Vec::new(),
            cores: Vec::new(),
            timing: None,
        }
    }

    pub fn result(&self, kind: EqualizerKind) -> Option<&EqualizerResult> {
        self.results.iter().find(|r| r.equalizer == kind)
    }

    pub fn mse_curve(&self, kind: EqualizerKind) -> Option<&MseCurve> {
        self.mse.iter().find(|c| c.equalizer == kind)
    }

    /// Report with timing measurements removed, for determinism checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        if let Some(t) = r.timing.as_mut() {
            t.klms_blocks.iter_mut().chain(t.lms_blocks.iter_mut()).for_each(|b| b.mean_step_ns = 0.0);
            t.klms_fit = LinearFit { slope: 0.0, intercept: 0.0, r_squared: 0.0 };
            t.lms_mean_ns = 0.0;
            t.lms_spread = 0.0;
        }
        r
    }
}

pub fn to_db(mse: f64) -> f64 {
    if mse > 0.0 {
        (10.0 * mse.log10()).max(MSE_FLOOR_DB)
    } else {
        MSE_FLOOR_DB
    }
}

/// Trailing moving average; `len - window + 1` outputs (none if too short).
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    if window == 0 || x.len() < window {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(x.len() - window + 1);
    let mut acc: f64 = x[..window].iter().sum();
    out.push(acc / window as f64);
    for i in window..x.len() {
        acc += x[i] - x[i - window];
        out.push(acc / window as f64);
    }
    out
}

/// Ordinary least squares `y = slope·x + intercept` with its R².
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LinearFit { slope, intercept, r_squared }
}

/// Transmitted symbols and received waveform for one emulated core.
#[derive(Debug, Clone)]
pub struct LinkData {
    pub tx: SymbolSequence,
    pub rx: Vec<f64>,
    pub channel: ChannelConfig,
}

pub fn simulate_link(cfg: &ExperimentConfig, core: usize, snr_offset_db: f64) -> Result<LinkData> {
    let bits = generate_bits(cfg.bits_seed(core), 2 * cfg.n_symbols)?;
    let tx = bits_to_pam4(&bits)?;
    let channel = cfg.channel.clone().with_seed(cfg.noise_seed(core)).with_snr_db(cfg.channel.snr_db + snr_offset_db);
    let rx = simulate_channel(&channel, &tx)?;
    Ok(LinkData { tx, rx, channel })
}

fn score(kind: EqualizerKind, taps: usize, feedback_taps: usize, tx: &[f64], soft: &[f64]) -> Result<EqualizerResult> {
    let reference = pam4_to_bits(&SymbolSequence::new(tx.to_vec())?)?;
    let decided = pam4_to_bits(&slice_pam4(soft)?)?;
    let bit_errors = count_bit_errors(reference.as_slice(), decided.as_slice());
    let bits = reference.len() as u64;
    let verdict = fec_verdict(bit_errors as f64 / bits as f64)?;
    Ok(EqualizerResult { equalizer: kind, taps, feedback_taps, bit_errors, bits, verdict })
}

fn train_klms_and_score(
    link: &LinkData,
    params: KlmsParams,
    held: std::ops::Range<usize>,
) -> Result<(EqualizerResult, Vec<f64>)> {
    let v = TapVectorizer::centered(params.n_taps)?;
    let trained = klms_train(&link.rx, &link.tx, params, &v)?;
    let soft = trained.state.equalize_span(&link.rx, &v, held.clone())?;
    let res = score(EqualizerKind::Klms, params.n_taps, 0, &link.tx.as_slice()[held], &soft)?;
    Ok((res, trained.errors))
}

struct LinkRun {
    results: Vec<EqualizerResult>,
    mse: Vec<MseCurve>,
}

fn run_link(cfg: &ExperimentConfig, link: &LinkData) -> Result<LinkRun> {
    let held = cfg.held_out_start()..cfg.n_symbols;
    let tx_held = &link.tx.as_slice()[held.clone()];
    let mut results = vec![score(EqualizerKind::None, 0, 0, tx_held, &link.rx[held.clone()])?];
    let mut mse = Vec::new();

    if let Some(p) = cfg.klms {
        let (res, errors) = train_klms_and_score(link, p, held.clone())?;
        results.push(res);
        mse.push(MseCurve::from_errors(EqualizerKind::Klms, &errors));
    }
    if let Some(p) = cfg.lms {
        let v = TapVectorizer::centered(p.n_taps)?;
        let t = lms_train(&link.rx, &link.tx, p, &v)?;
        let soft = t.state.equalize(&link.rx, &v)?;
        results.push(score(EqualizerKind::Lms, p.n_taps, 0, tx_held, &soft[held.clone()])?);
        mse.push(MseCurve::from_errors(EqualizerKind::Lms, &t.errors));
    }
    if let Some(p) = cfg.dfe {
        let v = TapVectorizer::centered(p.n_fft)?;
        let t = dfe_train(&link.rx, &link.tx, p, &v)?;
        let (soft, _) = dfe_equalize(&t.state, &link.rx, &v)?;
        results.push(score(EqualizerKind::Dfe, p.n_fft, p.n_fbt, tx_held, &soft[held.clone()])?);
        mse.push(MseCurve::from_errors(EqualizerKind::Dfe, &t.errors));
    }
    Ok(LinkRun { results, mse })
}

/// Single-channel run: unequalized path plus every configured equalizer.
pub fn run_single(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let link = simulate_link(cfg, 0, 0.0)?;
    let run = run_link(cfg, &link)?;
    let mut report = ExperimentReport::new(cfg);
    report.results = run.results;
    report.mse = run.mse;
    Ok(report)
}

/// KLMS held-out BER for each tap count in `cfg.sweep`, on one shared link
/// realization and the same train/test split as [`run_single`].
pub fn run_tap_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let base = cfg.klms.ok_or_else(|| Error::Config("tap sweep needs a [klms] block".into()))?;
    if cfg.sweep.is_empty() {
        return Err(Error::Config("sweep.taps is empty".into()));
    }
    let link = simulate_link(cfg, 0, 0.0)?;
    let held = cfg.held_out_start()..cfg.n_symbols;
    let mut report = ExperimentReport::new(cfg);
    for &taps in &cfg.sweep {
        let (res, _) = train_klms_and_score(&link, KlmsParams { n_taps: taps, ..base }, held.clone())?;
        report.sweep.push(SweepRow { taps, verdict: res.verdict });
    }
    Ok(report)
}

/// Training-segment learning curves of KLMS and DFE-LMS.
pub fn run_mse_comparison(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (kp, dp) = match (cfg.klms, cfg.dfe) {
        (Some(k), Some(d)) => (k, d),
        _ => return Err(Error::Config("MSE comparison needs both [klms] and [dfe] blocks".into())),
    };
    let link = simulate_link(cfg, 0, 0.0)?;
    let mut report = ExperimentReport::new(cfg);
    let kv = TapVectorizer::centered(kp.n_taps)?;
    let k = klms_train(&link.rx, &link.tx, kp, &kv)?;
    report.mse.push(MseCurve::from_errors(EqualizerKind::Klms, &k.errors));
    let dv = TapVectorizer::centered(dp.n_fft)?;
    let d = dfe_train(&link.rx, &link.tx, dp, &dv)?;
    report.mse.push(MseCurve::from_errors(EqualizerKind::Dfe, &d.errors));
    Ok(report)
}

/// Independent links per emulated core, each with its own SNR offset and
/// seeds; one row per core and equalizer (including the unequalized path).
pub fn run_multicore(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let cores = cfg.cores.as_ref().ok_or_else(|| Error::Config("multicore run needs a [cores] block".into()))?;
    let mut report = ExperimentReport::new(cfg);
    for (core, &offset) in cores.offsets_db.iter().enumerate() {
        let link = simulate_link(cfg, core, offset)?;
        let run = run_link(cfg, &link)?;
        for r in run.results {
            report.cores.push(CoreRow {
                core,
                snr_db: link.channel.snr_db,
                equalizer: r.equalizer,
                verdict: r.verdict,
            });
        }
    }
    Ok(report)
}

/// Block-averaged per-step training cost of KLMS and LMS.
pub fn measure_complexity(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let kp = cfg.klms.ok_or_else(|| Error::Config("complexity run needs a [klms] block".into()))?;
    let lp = cfg.lms.unwrap_or_default();
    let block = cfg.timing_block;
    let steps = kp.train_len;
    if steps < 2 * block {
        return Err(Error::InvalidParameter(format!(
            "train_len {steps} gives fewer than two timing blocks of {block}"
        )));
    }
    let link = simulate_link(cfg, 0, 0.0)?;
    let n_blocks = steps / block;

    let kv = TapVectorizer::centered(kp.n_taps)?;
    let lv = TapVectorizer::centered(lp.n_taps)?;
    let k_windows = windows(&link.rx, &kv, n_blocks * block);
    let l_windows = windows(&link.rx, &lv, n_blocks * block);
    let desired = link.tx.as_slice();

    let mut klms_ns = vec![f64::INFINITY; n_blocks];
    let mut lms_ns = vec![f64::INFINITY; n_blocks];
    let mut klms_storage = Vec::with_capacity(n_blocks);
    for rep in 0..TIMING_REPEATS {
        let mut state = KlmsState::new(kp)?;
        for (b, slot) in klms_ns.iter_mut().enumerate() {
            let t0 = Instant::now();
            for i in b * block..(b + 1) * block {
                state.train_step(&k_windows[i * kp.n_taps..(i + 1) * kp.n_taps], desired[i])?;
            }
            *slot = slot.min(t0.elapsed().as_nanos() as f64 / block as f64);
            if rep == 0 {
                klms_storage.push(state.storage_len());
            }
        }
        let mut lms = LmsState::new(lp.n_taps, lp.mu)?;
        for (b, slot) in lms_ns.iter_mut().enumerate() {
            let t0 = Instant::now();
            for i in b * block..(b + 1) * block {
                std::hint::black_box(lms.train_step(&l_windows[i * lp.n_taps..(i + 1) * lp.n_taps], desired[i])?);
            }
            *slot = slot.min(t0.elapsed().as_nanos() as f64 / block as f64);
        }
    }

    let to_blocks = |ns: &[f64]| -> Vec<TimingBlock> {
        ns.iter().enumerate().map(|(b, &mean_step_ns)| TimingBlock { start_iter: b * block, mean_step_ns }).collect()
    };
    let centers: Vec<f64> = (0..n_blocks).map(|b| (b * block) as f64 + block as f64 / 2.0).collect();
    let klms_fit = linear_fit(&centers, &klms_ns);
    let lms_mean_ns = lms_ns.iter().sum::<f64>() / n_blocks as f64;
    let lo = lms_ns.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lms_ns.iter().copied().fold(0.0, f64::max);
    let lms_spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };

    let mut report = ExperimentReport::new(cfg);
    report.timing = Some(TimingReport {
        block,
        klms_blocks: to_blocks(&klms_ns),
        lms_blocks: to_blocks(&lms_ns),
        klms_fit,
        lms_mean_ns,
        lms_spread,
        klms_storage,
    });
    Ok(report)
}

fn windows(signal: &[f64], v: &TapVectorizer, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count * v.n_taps()];
    for (i, row) in out.chunks_exact_mut(v.n_taps()).enumerate() {
        v.fill(signal, i, row);
    }
    out
}
