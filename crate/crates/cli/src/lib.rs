//! `kaf` command-line front end.
//!
//! Every subcommand writes its results to files; stdout is never used for
//! data. Errors print one line on stderr of the form
//! `kaf: error[<class>]: <message>` and exit with status 1 for usage and
//! configuration problems, 2 for data, format and I/O problems.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use kaf_core::config::{apply_entries, parse_entries};
use kaf_core::equalizer::{dfe_equalize, dfe_train, klms_train, lms_train, TapVectorizer};
use kaf_core::experiment::{
    measure_complexity, run_mse_comparison, run_multicore, run_tap_sweep, simulate_link, EqualizerKind,
    EqualizerResult, ExperimentConfig, ExperimentReport,
};
use kaf_core::format::{read_state, read_waveform, write_state, write_waveform, TrainedEqualizer};
use kaf_core::pam::{bit_error_rate, fec_verdict, pam4_to_bits, slice_pam4, SymbolSequence};
use kaf_core::report::{emit_csv, CsvKind};
use kaf_core::Error;

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kaf", version, about = "Kernel adaptive equalization of simulated PAM4 links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a link; writes the channel output and the clean symbols.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
        /// Clean-symbol file (default: `<out stem>.tx.kaf`).
        #[arg(long)]
        tx_out: Option<PathBuf>,
    },
    /// Train one equalizer and persist its state.
    Train {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Kind::Klms)]
        equalizer: Kind,
        /// Received waveform (simulated from the config when omitted).
        #[arg(long, requires = "reference")]
        input: Option<PathBuf>,
        /// Transmitted symbols matching `--input`.
        #[arg(long, requires = "input")]
        reference: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a persisted state to a waveform.
    Equalize {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Expected feed-forward tap count; must match the state.
        #[arg(long)]
        taps: Option<usize>,
        /// Transmitted symbols; required for the BER results file.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Leading symbols excluded from BER counting.
        #[arg(long, default_value_t = 0)]
        skip: usize,
        /// Results CSV (`equalizer,taps,fbt,ber,kp4,hd,sd`).
        #[arg(long, requires = "reference")]
        out: Option<PathBuf>,
        /// Equalized soft output as a waveform file.
        #[arg(long)]
        soft_out: Option<PathBuf>,
    },
    /// KLMS BER against tap count.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        io: ReportOut,
    },
    /// Training MSE curves of KLMS and DFE-LMS (`<stem>.klms.csv`, `<stem>.dfe.csv`).
    Mse {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        io: ReportOut,
    },
    /// Per-core FEC verdicts.
    Multicore {
        #[command(flatten)]
        run: RunArgs,
        /// Number of emulated cores (zero SNR offsets) when the config has none.
        #[arg(long)]
        cores: Option<usize>,
        #[command(flatten)]
        io: ReportOut,
    },
    /// Per-step training cost of KLMS and LMS (`<stem>.klms.csv`, `<stem>.lms.csv`).
    Complexity {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        io: ReportOut,
    },
    /// Render a saved JSON report as CSV.
    Report {
        #[arg(long)]
        report: PathBuf,
        /// sweep, multicore, results, mse-klms, mse-dfe, mse-lms, timing-klms, timing-lms
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Klms,
    Lms,
    Dfe,
}

#[derive(Debug, Args)]
struct ReportOut {
    #[arg(long)]
    out: PathBuf,
    /// Also save the full report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of symbols.
    #[arg(long)]
    n: Option<usize>,
    /// Tap count(s); a list only for `sweep`.
    #[arg(long, value_delimiter = ',')]
    taps: Vec<usize>,
    #[arg(long = "klms.alpha")]
    klms_alpha: Option<f64>,
    #[arg(long = "klms.mu")]
    klms_mu: Option<f64>,
    #[arg(long = "dfe.fft")]
    dfe_fft: Option<usize>,
    #[arg(long = "dfe.fbt")]
    dfe_fbt: Option<usize>,
}

/// A failure with its exit class.
#[derive(Debug)]
pub struct Failure {
    pub class: &'static str,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self { class: "config", message: message.into() }
    }

    fn data(message: impl Into<String>) -> Self {
        Self { class: "data", message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class {
            "usage" | "config" => EXIT_CONFIG,
            _ => EXIT_DATA,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let class = match &e {
            e if e.is_config() => "config",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::DimensionMismatch { .. } => "dimension",
            _ => "data",
        };
        Self { class, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("kaf: error[usage]: {first}");
            eprintln!("{}", e.render().to_string().trim_end());
            return EXIT_CONFIG;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("kaf: error[{}]: {}", f.class, f.message.replace('\n', " "));
            f.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Simulate { run, out, tx_out } => simulate(&run, &out, tx_out),
        Command::Train { run, equalizer, input, reference, out } => train(&run, equalizer, input, reference, &out),
        Command::Equalize { state, input, taps, reference, skip, out, soft_out } => {
            equalize(&state, &input, taps, reference, skip, out, soft_out)
        }
        Command::Sweep { run, io } => {
            let mut entries = entries(&run, None)?;
            if !run.taps.is_empty() {
                entries.insert("sweep.taps".into(), join(&run.taps));
            }
            let cfg = build(entries)?;
            let report = run_tap_sweep(&cfg)?;
            finish(&report, &io, &[(CsvKind::Sweep, io.out.clone())])
        }
        Command::Mse { run, io } => {
            let cfg = build(entries(&run, Some("klms.taps"))?)?;
            let report = run_mse_comparison(&cfg)?;
            let outs = [
                (CsvKind::Mse(EqualizerKind::Klms), suffixed(&io.out, "klms")),
                (CsvKind::Mse(EqualizerKind::Dfe), suffixed(&io.out, "dfe")),
            ];
            finish(&report, &io, &outs)
        }
        Command::Multicore { run, cores, io } => {
            let mut entries = entries(&run, Some("klms.taps"))?;
            if let Some(n) = cores {
                entries.insert("cores.count".into(), n.to_string());
            }
            let cfg = build(entries)?;
            let report = run_multicore(&cfg)?;
            finish(&report, &io, &[(CsvKind::Multicore, io.out.clone())])
        }
        Command::Complexity { run, io } => {
            let cfg = build(entries(&run, Some("klms.taps"))?)?;
            let report = measure_complexity(&cfg)?;
            let outs = [
                (CsvKind::Timing(EqualizerKind::Klms), suffixed(&io.out, "klms")),
                (CsvKind::Timing(EqualizerKind::Lms), suffixed(&io.out, "lms")),
            ];
            finish(&report, &io, &outs)
        }
        Command::Report { report, kind, out } => {
            let kind = CsvKind::parse(&kind).ok_or_else(|| Failure::config(format!("unknown report kind {kind}")))?;
            let text = std::fs::read_to_string(&report).map_err(|e| io_failure(&report, e))?;
            let report: ExperimentReport =
                serde_json::from_str(&text).map_err(|e| Failure { class: "format", message: e.to_string() })?;
            Ok(emit_csv(&report, kind, out)?)
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { class: "io", message: format!("{}: {e}", path.display()) }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// `dir/name.csv` with tag `klms` becomes `dir/name.klms.csv`.
pub fn suffixed(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

/// Config-file entries overlaid with flag overrides. `taps_key` names the
/// key a single `--taps` value sets.
fn entries(run: &RunArgs, taps_key: Option<&str>) -> CliResult<BTreeMap<String, String>> {
    let mut map = match &run.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            parse_entries(&text)?
        }
        None => BTreeMap::new(),
    };
    if let Some(p) = &run.preset {
        map.insert("channel.preset".into(), p.clone());
    }
    if let Some(s) = run.seed {
        map.insert("run.master_seed".into(), s.to_string());
    }
    if let Some(n) = run.n {
        map.insert("run.n_symbols".into(), n.to_string());
    }
    if let Some(key) = taps_key {
        match run.taps.as_slice() {
            [] => {}
            [t] => {
                map.insert(key.into(), t.to_string());
            }
            _ => return Err(Failure::config("--taps takes a single value here")),
        }
    }
    let mut set = |key: &str, v: Option<String>| {
        if let Some(v) = v {
            map.insert(key.into(), v);
        }
    };
    set("klms.alpha", run.klms_alpha.map(|v| v.to_string()));
    set("klms.mu", run.klms_mu.map(|v| v.to_string()));
    set("dfe.fft", run.dfe_fft.map(|v| v.to_string()));
    set("dfe.fbt", run.dfe_fbt.map(|v| v.to_string()));
    Ok(map)
}

fn build(entries: BTreeMap<String, String>) -> CliResult<ExperimentConfig> {
    Ok(apply_entries(&ExperimentConfig::default(), &entries)?)
}

fn finish(report: &ExperimentReport, io: &ReportOut, outs: &[(CsvKind, PathBuf)]) -> CliResult<()> {
    for (kind, path) in outs {
        emit_csv(report, *kind, path)?;
    }
    if let Some(path) = &io.report {
        let json = serde_json::to_string_pretty(report).map_err(|e| Failure::data(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| io_failure(path, e))?;
    }
    Ok(())
}

fn simulate(run: &RunArgs, out: &Path, tx_out: Option<PathBuf>) -> CliResult<()> {
    if !run.taps.is_empty() {
        return Err(Failure::config("simulate takes no --taps"));
    }
    // Only the channel and run keys matter here; equalizer blocks are
    // dropped so their training lengths do not constrain `--n`.
    let mut entries = entries(run, None)?;
    entries.retain(|k, _| k.starts_with("channel.") || k == "run.n_symbols" || k == "run.master_seed");
    let base = ExperimentConfig { klms: None, lms: None, dfe: None, ..ExperimentConfig::default() };
    let cfg = apply_entries(&base, &entries)?;
    let link = simulate_link(&cfg, 0, 0.0)?;
    let tx_path = tx_out.unwrap_or_else(|| tx_path_for(out));
    write_waveform(out, &link.rx)?;
    write_waveform(&tx_path, link.tx.as_slice())?;
    Ok(())
}

/// Default clean-symbol path for a channel-output path: `ch.kaf` becomes
/// `ch.tx.kaf`.
pub fn tx_path_for(out: &Path) -> PathBuf {
    suffixed(out, "tx")
}

fn train(run: &RunArgs, kind: Kind, input: Option<PathBuf>, reference: Option<PathBuf>, out: &Path) -> CliResult<()> {
    let (name, taps_key) = match kind {
        Kind::Klms => ("klms", "klms.taps"),
        Kind::Lms => ("lms", "lms.taps"),
        Kind::Dfe => ("dfe", "dfe.fft"),
    };
    let cfg = build(entries(run, Some(taps_key))?)?;
    let disabled = || Failure::config(format!("{name} is disabled in run.equalizers"));

    let (rx, tx) = match (input, reference) {
        (Some(i), Some(r)) => {
            let rx = read_waveform(&i)?;
            let tx = SymbolSequence::new(read_waveform(&r)?)?;
            (rx, tx)
        }
        _ => {
            let link = simulate_link(&cfg, 0, 0.0)?;
            (link.rx, link.tx)
        }
    };

    let trained = match kind {
        Kind::Klms => {
            let p = cfg.klms.ok_or_else(disabled)?;
            let taps = TapVectorizer::centered(p.n_taps)?;
            TrainedEqualizer::Klms { state: klms_train(&rx, &tx, p, &taps)?.state, taps }
        }
        Kind::Lms => {
            let p = cfg.lms.ok_or_else(disabled)?;
            let taps = TapVectorizer::centered(p.n_taps)?;
            TrainedEqualizer::Lms { state: lms_train(&rx, &tx, p, &taps)?.state, taps }
        }
        Kind::Dfe => {
            let p = cfg.dfe.ok_or_else(disabled)?;
            let taps = TapVectorizer::centered(p.n_fft)?;
            TrainedEqualizer::Dfe { state: dfe_train(&rx, &tx, p, &taps)?.state, taps }
        }
    };
    Ok(write_state(out, &trained)?)
}

fn equalize(
    state: &Path,
    input: &Path,
    taps: Option<usize>,
    reference: Option<PathBuf>,
    skip: usize,
    out: Option<PathBuf>,
    soft_out: Option<PathBuf>,
) -> CliResult<()> {
    let eq = read_state(state)?;
    let v = *eq.taps();
    if let Some(t) = taps {
        if t != v.n_taps() {
            return Err(Error::DimensionMismatch { expected: v.n_taps(), got: t }.into());
        }
    }
    let rx = read_waveform(input)?;
    let (soft, kind, fbt) = match &eq {
        TrainedEqualizer::Klms { state, .. } => (state.equalize(&rx, &v)?, EqualizerKind::Klms, 0),
        TrainedEqualizer::Lms { state, .. } => (state.equalize(&rx, &v)?, EqualizerKind::Lms, 0),
        TrainedEqualizer::Dfe { state, .. } => (dfe_equalize(state, &rx, &v)?.0, EqualizerKind::Dfe, state.n_fbt()),
    };
    if let Some(path) = &soft_out {
        write_waveform(path, &soft)?;
    }
    if let (Some(r), Some(out)) = (reference, out) {
        let tx = SymbolSequence::new(read_waveform(&r)?)?;
        if tx.len() != soft.len() {
            return Err(Error::DimensionMismatch { expected: soft.len(), got: tx.len() }.into());
        }
        if skip >= tx.len() {
            return Err(Failure::config(format!("--skip {skip} leaves no symbols out of {}", tx.len())));
        }
        let reference = pam4_to_bits(&SymbolSequence::new(tx.as_slice()[skip..].to_vec())?)?;
        let decided = pam4_to_bits(&slice_pam4(&soft[skip..])?)?;
        let ber = bit_error_rate(&reference, &decided)?;
        let bits = reference.len() as u64;
        let result = EqualizerResult {
            equalizer: kind,
            taps: v.n_taps(),
            feedback_taps: fbt,
            bit_errors: (ber * bits as f64).round() as u64,
            bits,
            verdict: fec_verdict(ber)?,
        };
        let mut report = ExperimentReport::new(&ExperimentConfig::default());
        report.held_out = (skip, tx.len());
        report.results.push(result);
        emit_csv(&report, CsvKind::Results, out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_paths() {
        assert_eq!(suffixed(Path::new("out/mse.csv"), "klms"), PathBuf::from("out/mse.klms.csv"));
        assert_eq!(suffixed(Path::new("t"), "lms"), PathBuf::from("t.lms"));
        assert_eq!(tx_path_for(Path::new("ch.kaf")), PathBuf::from("ch.tx.kaf"));
    }

    #[test]
    fn help_is_not_an_error() {
        assert_eq!(run(["kaf", "--help"]), 0);
        assert_eq!(run(["kaf"]), EXIT_CONFIG);
    }

    #[test]
    fn error_classes() {
        let f: Failure = Error::Config("x".into()).into();
        assert_eq!((f.class, f.exit_code()), ("config", 1));
        let f: Failure = Error::DimensionMismatch { expected: 3, got: 4 }.into();
        assert_eq!((f.class, f.exit_code()), ("dimension", 2));
        let f: Failure = Error::Format(kaf_core::FormatError::Version(2)).into();
        assert_eq!((f.class, f.exit_code()), ("format", 2));
    }
}
