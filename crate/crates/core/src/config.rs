//! Run configuration files.
//!
//! Plain `key = value` lines; `#` starts a comment. A `[section]` header
//! prefixes the keys below it, so `[klms]` followed by `mu = 0.5` is the same
//! as `klms.mu = 0.5`. Unknown and repeated keys are errors. Lists are
//! comma-separated.
//!
//! | key | default |
//! |-----|---------|
//! | `channel.preset` | `NONLINEAR_REFERENCE` (applied before the explicit channel keys) |
//! | `channel.h_pre`, `channel.h_post` | preset taps |
//! | `channel.a2`, `channel.a3`, `channel.snr_db` | preset values (`inf` disables noise) |
//! | `channel.seed` | `0` (noise-stream salt) |
//! | `klms.taps`, `klms.alpha`, `klms.mu`, `klms.train_len` | 10, 0.005, 0.5, 20000 |
//! | `lms.taps`, `lms.mu`, `lms.train_len` | 11, 0.001, 50000 |
//! | `dfe.fft`, `dfe.fbt`, `dfe.mu`, `dfe.train_len` | 43, 15, 0.0001, 50000 |
//! | `run.n_symbols`, `run.master_seed` | 200000, 1 |
//! | `run.equalizers` | `klms,lms,dfe` |
//! | `sweep.taps` | empty |
//! | `cores.count`, `cores.offsets_db` | no multicore block; offsets default to zeros |
//! | `complexity.block` | 500 |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::channel::{preset_by_name, NONLINEAR_REFERENCE};
use crate::error::{Error, Result};
use crate::experiment::{CoresConfig, EqualizerKind, ExperimentConfig};

const KNOWN_KEYS: &[&str] = &[
    "channel.preset",
    "channel.h_pre",
    "channel.a2",
    "channel.a3",
    "channel.h_post",
    "channel.snr_db",
    "channel.seed",
    "klms.taps",
    "klms.alpha",
    "klms.mu",
    "klms.train_len",
    "lms.taps",
    "lms.mu",
    "lms.train_len",
    "dfe.fft",
    "dfe.fbt",
    "dfe.mu",
    "dfe.train_len",
    "run.n_symbols",
    "run.master_seed",
    "run.equalizers",
    "sweep.taps",
    "cores.count",
    "cores.offsets_db",
    "complexity.block",
];

/// Splits a config file into a flat key map.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut section = String::new();
    let mut entries = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Config(format!("line {}: unterminated section header", n + 1)))?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        let k = k.trim();
        let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key {key}", n + 1)));
        }
        if entries.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {key}", n + 1)));
        }
    }
    Ok(entries)
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {raw:?}")))
}

fn list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(|s| value(key, s.trim())).collect()
}

/// Applies `overrides` (keys as in the file) to `base`; used both for files
/// and for CLI flag overrides.
pub fn apply_entries(base: &ExperimentConfig, entries: &BTreeMap<String, String>) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    if let Some(name) = entries.get("channel.preset") {
        let preset = preset_by_name(name).ok_or_else(|| Error::Config(format!("unknown preset {name}")))?;
        cfg.channel = preset.config(cfg.channel.seed);
        cfg.channel_preset = Some(preset.name.to_string());
    }

    // Equalizer selection decides which parameter blocks exist.
    if let Some(raw) = entries.get("run.equalizers") {
        let mut want = Vec::new();
        for name in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match EqualizerKind::parse(name) {
                Some(k @ (EqualizerKind::Klms | EqualizerKind::Lms | EqualizerKind::Dfe)) => want.push(k),
                _ => return Err(Error::Config(format!("run.equalizers: unknown equalizer {name}"))),
            }
        }
        let has = |k| want.contains(&k);
        cfg.klms = has(EqualizerKind::Klms).then(|| cfg.klms.unwrap_or_default());
        cfg.lms = has(EqualizerKind::Lms).then(|| cfg.lms.unwrap_or_default());
        cfg.dfe = has(EqualizerKind::Dfe).then(|| cfg.dfe.unwrap_or_default());
    }

    for (key, raw) in entries {
        let key = key.as_str();
        let block_missing = || Error::Config(format!("{key} given but that equalizer is disabled in run.equalizers"));
        match key {
            "channel.preset" | "run.equalizers" => {}
            "channel.h_pre" => cfg.channel.h_pre = list(key, raw)?,
            "channel.h_post" => cfg.channel.h_post = list(key, raw)?,
            "channel.a2" => cfg.channel.a2 = value(key, raw)?,
            "channel.a3" => cfg.channel.a3 = value(key, raw)?,
            "channel.snr_db" => cfg.channel.snr_db = value(key, raw)?,
            "channel.seed" => cfg.channel.seed = value(key, raw)?,
            "klms.taps" => cfg.klms.as_mut().ok_or_else(block_missing)?.n_taps = value(key, raw)?,
            "klms.alpha" => cfg.klms.as_mut().ok_or_else(block_missing)?.alpha = value(key, raw)?,
            "klms.mu" => cfg.klms.as_mut().ok_or_else(block_missing)?.mu = value(key, raw)?,
            "klms.train_len" => cfg.klms.as_mut().ok_or_else(block_missing)?.train_len = value(key, raw)?,
            "lms.taps" => cfg.lms.as_mut().ok_or_else(block_missing)?.n_taps = value(key, raw)?,
            "lms.mu" => cfg.lms.as_mut().ok_or_else(block_missing)?.mu = value(key, raw)?,
            "lms.train_len" => cfg.lms.as_mut().ok_or_else(block_missing)?.train_len = value(key, raw)?,
            "dfe.fft" => cfg.dfe.as_mut().ok_or_else(block_missing)?.n_fft = value(key, raw)?,
            "dfe.fbt" => cfg.dfe.as_mut().ok_or_else(block_missing)?.n_fbt = value(key, raw)?,
            "dfe.mu" => cfg.dfe.as_mut().ok_or_else(block_missing)?.mu = value(key, raw)?,
            "dfe.train_len" => cfg.dfe.as_mut().ok_or_else(block_missing)?.train_len = value(key, raw)?,
            "run.n_symbols" => cfg.n_symbols = value(key, raw)?,
            "run.master_seed" => cfg.master_seed = value(key, raw)?,
            "sweep.taps" => cfg.sweep = list(key, raw)?,
            "cores.count" | "cores.offsets_db" => {}
            "complexity.block" => cfg.timing_block = value(key, raw)?,
            _ => return Err(Error::Config(format!("unknown key {key}"))),
        }
    }

    let count = entries.get("cores.count").map(|r| value::<usize>("cores.count", r)).transpose()?;
    let offsets = entries.get("cores.offsets_db").map(|r| list::<f64>("cores.offsets_db", r)).transpose()?;
    match (count, offsets) {
        (None, None) => {}
        (Some(count), None) => {
            cfg.cores = Some(CoresConfig { count, offsets_db: vec![0.0; count] });
        }
        (count, Some(offsets_db)) => {
            let count = count.unwrap_or(offsets_db.len());
            cfg.cores = Some(CoresConfig { count, offsets_db });
        }
    }

    // Parameters tied to a preset name are dropped if the taps were edited.
    if entries.keys().any(|k| k.starts_with("channel.") && k != "channel.preset" && k != "channel.seed") {
        let matches_preset = cfg
            .channel_preset
            .as_deref()
            .and_then(preset_by_name)
            .map(|p| p.config(cfg.channel.seed) == cfg.channel)
            .unwrap_or(false);
        if !matches_preset {
            cfg.channel_preset = None;
        }
    }
    cfg.validate().map_err(|e| match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    })?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let entries = parse_entries(text)?;
    let mut base = ExperimentConfig::for_preset(&NONLINEAR_REFERENCE, 1);
    base.channel_preset = Some(NONLINEAR_REFERENCE.name.to_string());
    apply_entries(&base, &entries)
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Writes every field, so the output parses back to an identical config.
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let c = &cfg.channel;
    s.push_str("[channel]\n");
    if let Some(p) = &cfg.channel_preset {
        let _ = writeln!(s, "preset = {p}");
    }
    let _ = writeln!(s, "h_pre = {}", join(&c.h_pre));
    let _ = writeln!(s, "a2 = {}", c.a2);
    let _ = writeln!(s, "a3 = {}", c.a3);
    let _ = writeln!(s, "h_post = {}", join(&c.h_post));
    let _ = writeln!(s, "snr_db = {}", c.snr_db);
    let _ = writeln!(s, "seed = {}", c.seed);

    let mut equalizers = Vec::new();
    if let Some(k) = &cfg.klms {
        equalizers.push("klms");
        let _ = write!(
            s,
            "\n[klms]\ntaps = {}\nalpha = {}\nmu = {}\ntrain_len = {}\n",
            k.n_taps, k.alpha, k.mu, k.train_len
        );
    }
    if let Some(l) = &cfg.lms {
        equalizers.push("lms");
        let _ = write!(s, "\n[lms]\ntaps = {}\nmu = {}\ntrain_len = {}\n", l.n_taps, l.mu, l.train_len);
    }
    if let Some(d) = &cfg.dfe {
        equalizers.push("dfe");
        let _ =
            write!(s, "\n[dfe]\nfft = {}\nfbt = {}\nmu = {}\ntrain_len = {}\n", d.n_fft, d.n_fbt, d.mu, d.train_len);
    }
    let _ = write!(
        s,
        "\n[run]\nn_symbols = {}\nmaster_seed = {}\nequalizers = {}\n",
        cfg.n_symbols,
        cfg.master_seed,
        equalizers.join(",")
    );
    let _ = write!(s, "\n[sweep]\ntaps = {}\n", join(&cfg.sweep));
    if let Some(cores) = &cfg.cores {
        let _ = write!(s, "\n[cores]\ncount = {}\noffsets_db = {}\n", cores.count, join(&cores.offsets_db));
    }
    let _ = write!(s, "\n[complexity]\nblock = {}\n", cfg.timing_block);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LINEAR_MILD;
    use crate::equalizer::KlmsParams;
    use proptest::prelude::*;

    #[test]
    fn defaults_and_sections() {
        let cfg = parse_config("# nothing\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::for_preset(&NONLINEAR_REFERENCE, 1));

        let cfg = parse_config(
            "channel.preset = LINEAR_MILD\n[klms]\ntaps = 6 # short\nalpha=0.01\n[sweep]\ntaps = 2, 4,6\n",
        )
        .unwrap();
        assert_eq!(cfg.channel, LINEAR_MILD.config(0));
        assert_eq!(cfg.channel_preset.as_deref(), Some("LINEAR_MILD"));
        let k = cfg.klms.unwrap();
        assert_eq!((k.n_taps, k.alpha), (6, 0.01));
        assert_eq!(cfg.sweep, vec![2, 4, 6]);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(parse_config("klms.alhpa = 0.1"), Err(Error::Config(_))));
        assert!(matches!(parse_config("klms.mu = 0.1\n[klms]\nmu = 0.2"), Err(Error::Config(_))));
        assert!(matches!(parse_config("run.n_symbols = many"), Err(Error::Config(_))));
        assert!(matches!(parse_config("channel.preset = FIBER"), Err(Error::Config(_))));
        assert!(matches!(parse_config("[klms\nmu = 1"), Err(Error::Config(_))));
        assert!(matches!(parse_config("run.equalizers = dfe\nklms.mu = 0.1"), Err(Error::Config(_))));
        assert!(matches!(parse_config("run.n_symbols = 100"), Err(Error::Config(_))));
    }

    #[test]
    fn equalizer_selection_and_cores() {
        let cfg = parse_config("run.equalizers = klms\ncores.count = 3\nrun.n_symbols = 30000").unwrap();
        assert!(cfg.lms.is_none() && cfg.dfe.is_none() && cfg.klms.is_some());
        assert_eq!(cfg.cores.unwrap().offsets_db, vec![0.0; 3]);
        let cfg = parse_config("cores.offsets_db = -1,0,1").unwrap();
        assert_eq!(cfg.cores.unwrap().count, 3);
        assert!(parse_config("cores.count = 2\ncores.offsets_db = 1").is_err());
    }

    #[test]
    fn custom_channel_drops_preset_name() {
        let cfg = parse_config("channel.h_pre = 1, 0.5\nchannel.snr_db = inf").unwrap();
        assert!(cfg.channel_preset.is_none());
        assert_eq!(cfg.channel.h_pre, vec![1.0, 0.5]);
        assert_eq!(cfg.channel.snr_db, f64::INFINITY);
        let again = parse_config(&serialize_config(&cfg)).unwrap();
        assert_eq!(again, cfg);
    }

    proptest! {
        #[test]
        fn serialize_round_trip(
            taps in 1usize..20, alpha in 1e-4f64..1.0, mu in 1e-4f64..1.0,
            h in prop::collection::vec(-1.0f64..1.0, 1..5), snr in 0.0f64..40.0,
            seed in any::<u64>(), master in any::<u64>(), sweep in prop::collection::vec(1usize..30, 0..5),
            offsets in prop::collection::vec(-2.0f64..2.0, 0..8), lms_on in any::<bool>(),
        ) {
            let mut cfg = ExperimentConfig::for_preset(&NONLINEAR_REFERENCE, master);
            cfg.channel.h_post = h;
            cfg.channel.snr_db = snr;
            cfg.channel.seed = seed;
            cfg.channel_preset = None;
            cfg.klms = Some(KlmsParams { n_taps: taps, alpha, mu, ..KlmsParams::default() });
            if !lms_on {
                cfg.lms = None;
            }
            cfg.sweep = sweep;
            if !offsets.is_empty() {
                cfg.cores = Some(CoresConfig { count: offsets.len(), offsets_db: offsets });
            }
            let text = serialize_config(&cfg);
            let parsed = parse_config(&text).unwrap();
            prop_assert_eq!(&parsed, &cfg);
            prop_assert_eq!(serialize_config(&parsed), text);
        }
    }
}
