//! CSV rendering of experiment reports.
//!
//! | kind | header |
//! |------|--------|
//! | MSE curve | `sample,mse_db_raw,mse_db_smoothed` |
//! | sweep | `taps,ber,kp4,hd,sd` |
//! | multicore | `core,equalizer,ber,kp4,hd,sd` |
//! | timing | `iter_block,mean_step_ns` |
//! | results | `equalizer,taps,fbt,ber,kp4,hd,sd` |
//!
//! `sample` is 1-based; the smoothed column is empty until a full smoothing
//! window is available. `iter_block` is the first iteration of the block.
//! Reals use Rust's shortest round-trip formatting, flags are `true`/`false`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::experiment::{EqualizerKind, ExperimentReport};
use crate::pam::FecVerdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvKind {
    Mse(EqualizerKind),
    Sweep,
    Multicore,
    Timing(EqualizerKind),
    Results,
}

impl CsvKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sweep" => Self::Sweep,
            "multicore" => Self::Multicore,
            "results" => Self::Results,
            "mse-klms" => Self::Mse(EqualizerKind::Klms),
            "mse-dfe" => Self::Mse(EqualizerKind::Dfe),
            "mse-lms" => Self::Mse(EqualizerKind::Lms),
            "timing-klms" => Self::Timing(EqualizerKind::Klms),
            "timing-lms" => Self::Timing(EqualizerKind::Lms),
            _ => return None,
        })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Sweep => "sweep".into(),
            Self::Multicore => "multicore".into(),
            Self::Results => "results".into(),
            Self::Mse(k) => format!("mse-{k}"),
            Self::Timing(k) => format!("timing-{k}"),
        }
    }
}

fn flags(v: &FecVerdict) -> String {
    format!("{},{},{},{}", v.ber, v.passes_kp4, v.passes_hd, v.passes_sd)
}

fn missing(kind: CsvKind) -> Error {
    Error::InvalidLength(format!("report has no {} section", kind.name()))
}

pub fn render_csv(report: &ExperimentReport, kind: CsvKind) -> Result<String> {
    let mut s = String::new();
    match kind {
        CsvKind::Mse(eq) => {
            let curve = report.mse_curve(eq).filter(|c| !c.raw_db.is_empty()).ok_or(missing(kind))?;
            s.push_str("sample,mse_db_raw,mse_db_smoothed\n");
            let lag = curve.raw_db.len() - curve.smoothed_db.len();
            for (i, raw) in curve.raw_db.iter().enumerate() {
                let smoothed = i
                    .checked_sub(lag)
                    .and_then(|j| curve.smoothed_db.get(j))
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                let _ = writeln!(s, "{},{},{}", i + 1, raw, smoothed);
            }
        }
        CsvKind::Sweep => {
            if report.sweep.is_empty() {
                return Err(missing(kind));
            }
            s.push_str("taps,ber,kp4,hd,sd\n");
            for row in &report.sweep {
                let _ = writeln!(s, "{},{}", row.taps, flags(&row.verdict));
            }
        }
        CsvKind::Multicore => {
            if report.cores.is_empty() {
                return Err(missing(kind));
            }
            s.push_str("core,equalizer,ber,kp4,hd,sd\n");
            for row in &report.cores {
                let _ = writeln!(s, "{},{},{}", row.core, row.equalizer, flags(&row.verdict));
            }
        }
        CsvKind::Timing(eq) => {
            let t = report.timing.as_ref().ok_or(missing(kind))?;
            let blocks = match eq {
                EqualizerKind::Klms => &t.klms_blocks,
                EqualizerKind::Lms => &t.lms_blocks,
                _ => return Err(missing(kind)),
            };
            s.push_str("iter_block,mean_step_ns\n");
            for b in blocks {
                let _ = writeln!(s, "{},{}", b.start_iter, b.mean_step_ns);
            }
        }
        CsvKind::Results => {
            if report.results.is_empty() {
                return Err(missing(kind));
            }
            s.push_str("equalizer,taps,fbt,ber,kp4,hd,sd\n");
            for r in &report.results {
                let _ = writeln!(s, "{},{},{},{}", r.equalizer, r.taps, r.feedback_taps, flags(&r.verdict));
            }
        }
    }
    Ok(s)
}

pub fn emit_csv(report: &ExperimentReport, kind: CsvKind, path: impl AsRef<std::path::Path>) -> Result<()> {
    let text = render_csv(report, kind)?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{ExperimentConfig, MseCurve, SweepRow};
    use crate::pam::fec_verdict;

    fn report() -> ExperimentReport {
        let cfg = ExperimentConfig::default();
        ExperimentReport {
            held_out: (0, 1),
            config: cfg,
            results: vec![],
            mse: vec![],
            sweep: vec![],
            cores: vec![],
            timing: None,
        }
    }

    #[test]
    fn empty_sections_are_errors() {
        let r = report();
        for kind in ["sweep", "multicore", "results", "mse-klms", "timing-klms"] {
            assert!(render_csv(&r, CsvKind::parse(kind).unwrap()).is_err(), "{kind}");
        }
    }

    #[test]
    fn one_row_sweep() {
        let mut r = report();
        r.sweep.push(SweepRow { taps: 10, verdict: fec_verdict(1e-3).unwrap() });
        let csv = render_csv(&r, CsvKind::Sweep).unwrap();
        assert_eq!(csv, "taps,ber,kp4,hd,sd\n10,0.001,false,true,true\n");
        assert_eq!(csv, render_csv(&r, CsvKind::Sweep).unwrap());
    }

    #[test]
    fn mse_rows_align_smoothing() {
        let mut r = report();
        r.mse.push(MseCurve::from_errors(EqualizerKind::Dfe, &vec![0.1; 501]));
        let csv = render_csv(&r, CsvKind::Mse(EqualizerKind::Dfe)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 502);
        assert_eq!(lines[0], "sample,mse_db_raw,mse_db_smoothed");
        assert!(lines[499].ends_with(','));
        assert!(!lines[500].ends_with(','));
        assert!(render_csv(&r, CsvKind::Mse(EqualizerKind::Klms)).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for name in ["sweep", "multicore", "results", "mse-klms", "mse-dfe", "mse-lms", "timing-klms", "timing-lms"] {
            assert_eq!(CsvKind::parse(name).unwrap().name(), name);
        }
        assert!(CsvKind::parse("eye").is_none());
    }
}
