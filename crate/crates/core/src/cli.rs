//! Command-line front end: `pattern`, `weights`, `estimate`, `schedule`, `verify`.
//!
//! Every parameter can come from a flag or from a JSON experiment file given
//! with `--config`; values in the file take precedence. Outputs go to standard
//! output unless `--out DIR` is given, in which case fixed file names are
//! written inside `DIR`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::diffsets::{
    extended_combined, verify_z_relations, weight_brute_force, weight_closed_form_z2,
};
use crate::error::Error;
use crate::estimator::{acquire, correlogram_psd, estimate_autocorr, Process, SignalModel};
use crate::golden::run_checks;
use crate::grid::{make_coprime_pair, parse_ratio, CoprimePair, SamplingPattern};
use crate::patterns::{ExscaConfig, Layout, Scheme};
use crate::scheduler::{build_schedule_with, waveform, ScheduleOptions};

pub const LOG_ENV: &str = "COPRIME_TDM_LOG";

/// Exit status for rejected parameters or configuration.
pub const EXIT_INVALID: i32 = 2;
/// Exit status for failed checks and I/O errors.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "coprime-tdm",
    version,
    about = "Time-multiplexed co-prime sampling toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit the sampling pattern of one signal as JSON or an indicator CSV.
    Pattern,
    /// Tabulate z1, z2 and the closed-form z2, and check how they relate.
    Weights,
    /// Simulate an acquisition and estimate its autocorrelation.
    Estimate,
    /// Emit switch schedules for every sampler of a layout.
    Schedule,
    /// Run the built-in reference checks.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Waveform,
}

#[derive(Debug, Default, clap::Args)]
struct Flags {
    #[arg(long, global = true)]
    m: Option<u64>,
    #[arg(long, global = true)]
    n: Option<u64>,
    /// Nyquist period, e.g. `1` or `1/2`.
    #[arg(long, global = true)]
    d: Option<String>,
    #[arg(long, global = true, value_enum)]
    scheme: Option<Scheme>,
    #[arg(long, global = true)]
    signal: Option<u32>,
    #[arg(long, global = true)]
    ex: Option<u64>,
    /// Sampler-1 offset in units of d (may be fractional, e.g. `1/2`).
    #[arg(long, global = true)]
    s11: Option<String>,
    /// Sampler-2 offset in units of d (may be fractional, e.g. `1/2`).
    #[arg(long, global = true)]
    s12: Option<String>,
    /// Window length in units of d.
    #[arg(long, global = true)]
    span: Option<u64>,
    #[arg(long, global = true)]
    periods: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Largest lag, in grid ticks.
    #[arg(long = "lag-max", global = true)]
    lag_max: Option<u64>,
    #[arg(long = "num-freqs", global = true)]
    num_freqs: Option<usize>,
    /// Per-sample switch aperture, in grid ticks.
    #[arg(long, global = true)]
    hold: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub m: u64,
    pub n: u64,
    #[serde(default)]
    pub d: Option<RatioText>,
}

/// Rational written as `"a/b"`, `"a"` or a bare integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RatioText(#[serde(with = "crate::grid::ratio_text")] pub Ratio<u64>);

/// Experiment definition read from `--config`. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pair: Option<PairSpec>,
    pub scheme: Option<Scheme>,
    pub signal: Option<u32>,
    pub ex: Option<u64>,
    pub s11: Option<RatioText>,
    pub s12: Option<RatioText>,
    pub span: Option<u64>,
    pub model: Option<Process>,
    pub periods: Option<u64>,
    pub seed: Option<u64>,
    pub lag_max: Option<u64>,
    pub num_freqs: Option<usize>,
    pub hold: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid experiment config: {e}"))
    }
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn failure(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::invalid(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::failure(format!("i/o error: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

/// Flags merged with the config file.
struct Settings {
    flags: Flags,
    config: ExperimentConfig,
}

impl Settings {
    fn load(flags: Flags) -> CliResult<Self> {
        let config = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::invalid(format!("cannot read config {}: {e}", path.display()))
                })?;
                ExperimentConfig::from_json(&text).map_err(CliError::invalid)?
            }
            None => ExperimentConfig::default(),
        };
        Ok(Settings { flags, config })
    }

    fn pair(&self) -> CliResult<CoprimePair> {
        let (m, n, d) = match self.config.pair {
            Some(p) => (Some(p.m), Some(p.n), p.d.map(|r| r.0)),
            None => (self.flags.m, self.flags.n, None),
        };
        let m = m.ok_or_else(|| CliError::invalid("missing --m"))?;
        let n = n.ok_or_else(|| CliError::invalid("missing --n"))?;
        let d = match (d, &self.flags.d) {
            (Some(d), _) => d,
            (None, Some(text)) => parse_ratio(text).map_err(CliError::invalid)?,
            (None, None) => Ratio::from_integer(1),
        };
        Ok(make_coprime_pair(m, n, d)?)
    }

    fn scheme(&self) -> Scheme {
        self.config
            .scheme
            .or(self.flags.scheme)
            .unwrap_or(Scheme::Extended)
    }

    fn signal(&self) -> CliResult<u32> {
        let s = self.config.signal.or(self.flags.signal).unwrap_or(1);
        if s == 1 || s == 2 {
            Ok(s)
        } else {
            Err(CliError::invalid(format!(
                "--signal must be 1 or 2, got {s}"
            )))
        }
    }

    fn offset(
        &self,
        from_config: Option<RatioText>,
        flag: &Option<String>,
    ) -> CliResult<Ratio<u64>> {
        match (from_config, flag) {
            (Some(r), _) => Ok(r.0),
            (None, Some(text)) => parse_ratio(text).map_err(CliError::invalid),
            (None, None) => Ok(Ratio::from_integer(0)),
        }
    }

    fn layout(&self) -> CliResult<Layout> {
        let pair = self.pair()?;
        let scheme = self.scheme();
        let mut layout = Layout::new(pair, scheme);
        let span = self.config.span.or(self.flags.span);
        if scheme != Scheme::Exsca {
            if let Some(span) = span {
                if scheme != Scheme::NyquistTdm {
                    return Err(CliError::invalid(
                        "--span only applies to the nyquist-tdm and exsca schemes",
                    ));
                }
                layout.span = Some(span * crate::patterns::NYQUIST_TDM_Q as u64);
            }
            return Ok(layout);
        }
        let ex = self.config.ex.or(self.flags.ex).unwrap_or(2);
        let s11 = self.offset(self.config.s11, &self.flags.s11)?;
        let s12 = self.offset(self.config.s12, &self.flags.s12)?;
        let q = [s11.denom(), s12.denom()]
            .into_iter()
            .fold(ExscaConfig::min_q(&pair, ex) as u64, |acc, d| acc.lcm(d));
        let q = u32::try_from(q).map_err(|_| CliError::invalid("offset denominators too large"))?;
        let ticks = |r: Ratio<u64>| (r * q as u64).to_integer();
        let span = span.ok_or_else(|| CliError::invalid("exsca scheme needs --span"))?;
        layout.exsca = Some(ExscaConfig::new(pair, ex, q, ticks(s11), ticks(s12))?);
        layout.span = Some(span * q as u64);
        Ok(layout)
    }

    fn out(&self) -> Option<&Path> {
        self.config.out.as_deref().or(self.flags.out.as_deref())
    }

    fn format(&self, default: Format) -> Format {
        self.flags.format.unwrap_or(default)
    }
}

fn write_outputs(
    out_dir: Option<&Path>,
    files: &[(&str, &str)],
    stdout: &mut dyn Write,
) -> CliResult<()> {
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (name, body) in files {
                fs::write(dir.join(name), body)?;
            }
            Ok(())
        }
        None => {
            if let Some((_, body)) = files.first() {
                stdout.write_all(body.as_bytes())?;
            }
            Ok(())
        }
    }
}

fn indicator_csv(branches: &[SamplingPattern], combined: &SamplingPattern) -> String {
    let mut out = String::from("tick,combined");
    for b in branches {
        let _ = write!(out, ",sampler_{}", b.sampler_id());
    }
    out.push('\n');
    let combined_bits = combined.indicator();
    let bits: Vec<Vec<bool>> = branches.iter().map(|b| b.indicator()).collect();
    for (k, on) in combined_bits.iter().enumerate() {
        let _ = write!(out, "{k},{}", u8::from(*on));
        for b in &bits {
            let _ = write!(out, ",{}", u8::from(b[k]));
        }
        out.push('\n');
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::failure(format!("serialisation failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn cmd_pattern(settings: &Settings, stdout: &mut dyn Write) -> CliResult<()> {
    let layout = settings.layout()?;
    let signal = settings.signal()?;
    let branches = layout.branches(signal)?;
    let merged = layout.combined(signal)?;
    if merged.has_overlap() {
        log::warn!(
            "signal {signal}: samplers coincide at ticks {:?}",
            merged.overlaps
        );
    }
    let mut all = branches.clone();
    all.push(merged.pattern.clone());
    let json = to_json(&all)?;
    let csv = indicator_csv(&branches, &merged.pattern);
    match (settings.out(), settings.format(Format::Json)) {
        (Some(dir), _) => write_outputs(
            Some(dir),
            &[("pattern.json", &json), ("pattern.csv", &csv)],
            stdout,
        ),
        (None, Format::Csv) => write_outputs(None, &[("pattern.csv", &csv)], stdout),
        (None, _) => write_outputs(None, &[("pattern.json", &json)], stdout),
    }
}

fn cmd_weights(settings: &Settings, stdout: &mut dyn Write) -> CliResult<()> {
    let pair = settings.pair()?;
    let (p1, p2) = extended_combined(&pair)?;
    let lag_max = 2 * pair.period() - 1;
    let z1 = weight_brute_force(&p1, lag_max);
    let z2 = weight_brute_force(&p2, lag_max);
    let mut csv = String::from("lag,z1,z2,closed_form_z2,match\n");
    let mut all_match = true;
    for l in 0..=lag_max {
        let cf = weight_closed_form_z2(&pair, l as i64)?;
        let brute = z2.weights[l as usize];
        let ok = cf == brute as i64;
        all_match &= ok;
        let _ = writeln!(csv, "{l},{},{brute},{cf},{ok}", z1.weights[l as usize]);
    }
    let report = verify_z_relations(&pair)?;
    let mut summary = String::new();
    for (name, ok) in report.checks() {
        let _ = writeln!(summary, "{} {name}", if ok { "PASS" } else { "FAIL" });
    }
    let _ = writeln!(
        summary,
        "sum z1 = {}, sum z2 = {}",
        report.sum_z1, report.sum_z2
    );
    match settings.out() {
        Some(dir) => write_outputs(
            Some(dir),
            &[
                ("weights.csv", &csv),
                ("relations.json", &to_json(&report)?),
            ],
            stdout,
        )?,
        None => {
            write_outputs(None, &[("weights.csv", &csv)], stdout)?;
            eprint!("{summary}");
        }
    }
    if !all_match || !report.passed() {
        return Err(CliError::failure("weight checks failed"));
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_estimate(settings: &Settings, stdout: &mut dyn Write) -> CliResult<()> {
    let layout = settings.layout()?;
    let signal = settings.signal()?;
    let pattern = layout.combined(signal)?.pattern;
    let process = settings
        .config
        .model
        .clone()
        .unwrap_or(Process::WhiteNoise { variance: 1.0 });
    let seed = settings.config.seed.or(settings.flags.seed).unwrap_or(0);
    let periods = settings
        .config
        .periods
        .or(settings.flags.periods)
        .unwrap_or(1000);
    let span = pattern.grid().span_ticks;
    let lag_max = settings
        .config
        .lag_max
        .or(settings.flags.lag_max)
        .unwrap_or(span - 1);
    if lag_max >= span {
        return Err(CliError::invalid(format!(
            "--lag-max must be below the pattern span ({span} ticks)"
        )));
    }
    let model = SignalModel::new(process, seed);
    let rec = acquire(&model, &pattern, periods)?;
    let ac = estimate_autocorr(&rec, lag_max);
    let step = pattern.grid().step();
    let mut csv = String::from("lag,estimate,count,analytic_truth\n");
    for e in &ac.lags {
        let truth = model.process.autocorr(e.lag as f64 * step);
        let _ = writeln!(csv, "{},{},{},{truth}", e.lag, fmt_opt(e.estimate), e.count);
    }
    let num_freqs = settings.config.num_freqs.or(settings.flags.num_freqs);
    let mut files = vec![("estimate.csv", csv)];
    if let Some(k) = num_freqs {
        let spectrum = correlogram_psd(&ac, k)?;
        let mut psd = String::from("bin,omega,psd\n");
        for (i, (w, v)) in spectrum.omega.iter().zip(&spectrum.values).enumerate() {
            let _ = writeln!(psd, "{i},{w},{v}");
        }
        files.push(("psd.csv", psd));
        if settings.out().is_none() {
            log::warn!("spectrum is only written with --out");
        }
    }
    let borrowed: Vec<(&str, &str)> = files.iter().map(|(n, b)| (*n, b.as_str())).collect();
    write_outputs(settings.out(), &borrowed, stdout)
}

fn cmd_schedule(settings: &Settings, stdout: &mut dyn Write) -> CliResult<()> {
    let layout = settings.layout()?;
    let mut patterns = Vec::new();
    for signal in layout.signals() {
        patterns.extend(layout.branches(signal)?);
    }
    let hold = settings.config.hold.or(settings.flags.hold).unwrap_or(1);
    let schedules = build_schedule_with(&patterns, ScheduleOptions { hold_ticks: hold })?;
    let json = to_json(&schedules)?;
    let dump = waveform(&schedules);
    match (settings.out(), settings.format(Format::Json)) {
        (Some(dir), _) => write_outputs(
            Some(dir),
            &[("schedule.json", &json), ("waveform.txt", &dump)],
            stdout,
        ),
        (None, Format::Waveform) => write_outputs(None, &[("waveform.txt", &dump)], stdout),
        (None, _) => write_outputs(None, &[("schedule.json", &json)], stdout),
    }
}

fn cmd_verify(stdout: &mut dyn Write) -> CliResult<()> {
    let checks = run_checks()?;
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(stdout, "{tag} {}: {}", c.name, c.detail)?;
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(CliError::failure(format!("{failed} check(s) failed")));
    }
    writeln!(stdout, "all {} checks passed", checks.len())?;
    Ok(())
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (including the program name) and runs the command, writing
/// primary output to `stdout`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    let result = Settings::load(cli.flags).and_then(|settings| match cli.command {
        Command::Pattern => cmd_pattern(&settings, stdout),
        Command::Weights => cmd_weights(&settings, stdout),
        Command::Estimate => cmd_estimate(&settings, stdout),
        Command::Schedule => cmd_schedule(&settings, stdout),
        Command::Verify => cmd_verify(stdout),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let mut full = vec!["coprime-tdm"];
        full.extend_from_slice(args);
        let code = run(full, &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn pattern_csv_for_first_signal() {
        let (code, out) = run_capture(&[
            "pattern", "--m", "4", "--n", "3", "--scheme", "extended", "--signal", "1", "--format",
            "csv",
        ]);
        assert_eq!(code, 0);
        let combined: Vec<u8> = out
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(combined, crate::golden::P1);
    }

    #[test]
    fn non_coprime_is_rejected() {
        let (code, _) = run_capture(&["pattern", "--m", "4", "--n", "6"]);
        assert_eq!(code, EXIT_INVALID);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(ExperimentConfig::from_json(r#"{"pair":{"m":4,"n":3},"bogus":1}"#).is_err());
        let cfg = ExperimentConfig::from_json(
            r#"{"pair":{"m":4,"n":3,"d":"1/2"},"scheme":"extended-tdm-2sampler","model":{"kind":"white-noise","variance":1.0},"periods":3,"seed":1,"lag_max":5}"#,
        )
        .unwrap();
        assert_eq!(cfg.scheme, Some(Scheme::ExtendedTdm2Sampler));
        assert_eq!(cfg.pair.unwrap().d.unwrap().0, Ratio::new(1, 2));
    }

    #[test]
    fn exsca_needs_span() {
        let (code, _) = run_capture(&["pattern", "--m", "4", "--n", "3", "--scheme", "exsca"]);
        assert_eq!(code, EXIT_INVALID);
        let (code, out) = run_capture(&[
            "pattern", "--m", "4", "--n", "3", "--scheme", "exsca", "--ex", "2", "--s12", "1",
            "--span", "48", "--signal", "2",
        ]);
        assert_eq!(code, 0);
        let pats: Vec<SamplingPattern> = serde_json::from_str(&out).unwrap();
        assert_eq!(pats[0].instants(), &[4, 12, 20, 28, 36, 44]);
    }
}
