//! Command-line flags, the optional key=value config file and presets.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use qiopa_core::detector::{parse_mask, two_fold_mask, DetectorConfig};
use qiopa_core::opa::{HIGH_GAIN_CUTOFF, LOW_GAIN_CUTOFF};
use qiopa_core::reference::{DETECTOR_QE, HIGH_GAIN, LOW_GAIN, REPORTED_TAIL_THRESHOLD};
use qiopa_core::{AmplifierConfig, BlochPath, GainParams, Qubit};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Fringe,
    Pairs,
    Entropy,
    Montecarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    #[value(name = "LG", alias = "lg")]
    Lg,
    #[value(name = "HG", alias = "hg")]
    Hg,
}

impl Preset {
    fn gain(self) -> f64 {
        match self {
            Preset::Lg => LOW_GAIN,
            Preset::Hg => HIGH_GAIN,
        }
    }

    fn cutoff(self) -> usize {
        match self {
            Preset::Lg => LOW_GAIN_CUTOFF,
            Preset::Hg => HIGH_GAIN_CUTOFF,
        }
    }
}

/// Simulate a quantum-injected optical parametric amplifier.
#[derive(Debug, Default, Parser)]
#[command(name = "qiopa", version, allow_negative_numbers = true)]
pub struct Cli {
    /// Analysis to run.
    #[arg(value_enum, required_unless_present_any = ["selftest", "config"])]
    pub command: Option<Command>,
    /// Run the built-in invariant checks and exit.
    #[arg(long)]
    pub selftest: bool,
    /// Plain-text key=value file; command-line flags take precedence.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Parametric gain.
    #[arg(long)]
    pub g: Option<f64>,
    /// Largest pair number kept in the state.
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub phi: Option<f64>,
    /// Bloch-sphere sweep `axis:start:step:count`, axis one of x, y, z.
    #[arg(long, allow_hyphen_values = true)]
    pub path: Option<String>,
    #[arg(long)]
    pub qe: Option<f64>,
    #[arg(long)]
    pub attenuation: Option<f64>,
    #[arg(long = "p-inject")]
    pub p_inject: Option<f64>,
    /// Per-pulse dark-count probability.
    #[arg(long)]
    pub dark: Option<f64>,
    /// `2fold`, `4fold`, or a comma list of DT, D2, D2*, D1, D1*.
    #[arg(long)]
    pub mask: Option<String>,
    #[arg(long)]
    pub pulses: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fit the injection probability to this visibility (montecarlo).
    #[arg(long, value_name = "V")]
    pub calibrate: Option<f64>,
    /// Pair-number tail threshold (pairs).
    #[arg(long)]
    pub threshold: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Cap on worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
}

const CONFIG_KEYS: [&str; 20] = [
    "command",
    "preset",
    "g",
    "cutoff",
    "alpha",
    "beta",
    "phi",
    "path",
    "qe",
    "attenuation",
    "p_inject",
    "dark",
    "mask",
    "pulses",
    "seed",
    "calibrate",
    "threshold",
    "out",
    "format",
    "threads",
];

/// Reads `key = value` lines; `#` starts a comment. Dashes in keys are
/// accepted for underscores.
pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", k + 1))?;
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(format!("line {}: unknown key '{key}'", k + 1));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Validation(format!("config key '{key}': cannot parse '{v}'")))
}

fn parse_enum<T: ValueEnum>(key: &str, v: &str) -> Result<T, CliError> {
    T::from_str(v, true).map_err(|_| CliError::Validation(format!("config key '{key}': unknown value '{v}'")))
}

impl Cli {
    /// Fills flags left unset from the config file.
    pub fn merge_config(&mut self, cfg: &BTreeMap<String, String>) -> Result<(), CliError> {
        macro_rules! fill {
            ($field:ident, $key:literal) => {
                if self.$field.is_none() {
                    if let Some(v) = cfg.get($key) {
                        self.$field = Some(parse_value($key, v)?);
                    }
                }
            };
        }
        if self.command.is_none() {
            if let Some(v) = cfg.get("command") {
                self.command = Some(parse_enum("command", v)?);
            }
        }
        if self.preset.is_none() {
            if let Some(v) = cfg.get("preset") {
                self.preset = Some(parse_enum("preset", v)?);
            }
        }
        if self.format.is_none() {
            if let Some(v) = cfg.get("format") {
                self.format = Some(parse_enum("format", v)?);
            }
        }
        fill!(g, "g");
        fill!(cutoff, "cutoff");
        fill!(alpha, "alpha");
        fill!(beta, "beta");
        fill!(phi, "phi");
        fill!(path, "path");
        fill!(qe, "qe");
        fill!(attenuation, "attenuation");
        fill!(p_inject, "p_inject");
        fill!(dark, "dark");
        fill!(mask, "mask");
        fill!(pulses, "pulses");
        fill!(seed, "seed");
        fill!(calibrate, "calibrate");
        fill!(threshold, "threshold");
        fill!(out, "out");
        fill!(threads, "threads");
        Ok(())
    }
}

/// Fully validated settings of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub amplifier: AmplifierConfig,
    pub qubit: Qubit,
    pub path: Option<BlochPath>,
    pub detector: DetectorConfig,
    /// Whether any detector setting was given explicitly.
    pub detector_given: bool,
    pub calibrate: Option<f64>,
    pub threshold: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Default fringe sweep: one turn about `z` in 32 steps.
pub const DEFAULT_SWEEP_COUNT: usize = 33;
pub const DEFAULT_PULSES: u64 = 100_000;
/// Tolerance on `alpha^2 + beta^2 = 1` for user-supplied amplitudes.
pub const AMPLITUDE_TOL: f64 = 1e-6;

fn qubit_from(alpha: Option<f64>, beta: Option<f64>, phi: f64) -> Result<Qubit, CliError> {
    let bad = |m: String| CliError::Validation(m);
    let (a, b) = match (alpha, beta) {
        (None, None) => (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
        (Some(a), None) if (0.0..=1.0).contains(&a) => (a, (1.0 - a * a).sqrt()),
        (None, Some(b)) if (0.0..=1.0).contains(&b) => ((1.0 - b * b).sqrt(), b),
        (Some(a), Some(b)) => {
            let n = a * a + b * b;
            if !((n - 1.0).abs() <= AMPLITUDE_TOL) || a < 0.0 || b < 0.0 {
                return Err(bad(format!(
                    "--alpha {a} --beta {b}: amplitudes must be non-negative with alpha^2 + beta^2 = 1"
                )));
            }
            (a / n.sqrt(), b / n.sqrt())
        }
        (a, b) => {
            return Err(bad(format!(
                "amplitude {} outside [0, 1]",
                a.or(b).unwrap_or(f64::NAN)
            )))
        }
    };
    Qubit::new(a, b, phi).map_err(|e| bad(e.to_string()))
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let command = cli
            .command
            .ok_or_else(|| CliError::Validation("no command given".into()))?;
        let g = match (cli.g, cli.preset) {
            (Some(g), _) => g,
            (None, Some(p)) => p.gain(),
            (None, None) => return Err(CliError::Validation("give --g or --preset LG|HG".into())),
        };
        let gain = GainParams::new(g)?;
        let cutoff = cli.cutoff.or_else(|| {
            cli.preset
                .filter(|p| p.gain() == g)
                .map(|p| p.cutoff())
        });
        let amplifier = match cutoff {
            Some(n) => AmplifierConfig::new(gain, n)?,
            None => AmplifierConfig::with_default_cutoff(gain),
        };

        let qubit = qubit_from(cli.alpha, cli.beta, cli.phi.unwrap_or(0.0))?;
        let path = cli.path.as_deref().map(|s| BlochPath::parse(s, qubit)).transpose()?;

        let default_qe = if cli.preset.is_some() { DETECTOR_QE } else { 1.0 };
        let mask = match &cli.mask {
            Some(m) => parse_mask(m)?,
            None => two_fold_mask(),
        };
        let detector = DetectorConfig {
            qe: cli.qe.unwrap_or(default_qe),
            attenuation: cli.attenuation.unwrap_or(1.0),
            dark_rate: cli.dark.unwrap_or(0.0),
            p_inject: cli.p_inject.unwrap_or(1.0),
            coincidence_mask: mask,
            pulses: cli.pulses.unwrap_or(DEFAULT_PULSES),
            seed: cli.seed.unwrap_or(0),
        };
        detector.validate()?;
        let detector_given = cli.qe.is_some()
            || cli.attenuation.is_some()
            || cli.dark.is_some()
            || cli.p_inject.is_some()
            || cli.mask.is_some()
            || cli.pulses.is_some()
            || cli.seed.is_some();

        if let Some(v) = cli.calibrate {
            if command != Command::Montecarlo {
                return Err(CliError::Validation("--calibrate applies to montecarlo only".into()));
            }
            if !(v > 0.0 && v < 1.0 / 3.0 + 1e-12) {
                return Err(CliError::Validation(format!("--calibrate {v}: target must lie in (0, 1/3]")));
            }
        }
        if cli.threads == Some(0) {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        let format = cli.format.unwrap_or(match command {
            Command::Entropy => Format::Json,
            _ => Format::Csv,
        });
        Ok(RunConfig {
            command,
            amplifier,
            qubit,
            path,
            detector,
            detector_given,
            calibrate: cli.calibrate,
            threshold: cli.threshold.unwrap_or(REPORTED_TAIL_THRESHOLD),
            out: cli.out.clone(),
            format,
        })
    }

    /// The configured path, or one turn about `z` from the configured qubit.
    pub fn sweep(&self) -> BlochPath {
        self.path.clone().unwrap_or_else(|| {
            let step = 2.0 * PI / (DEFAULT_SWEEP_COUNT - 1) as f64;
            BlochPath::uniform(qiopa_core::Axis::Z, 0.0, step, DEFAULT_SWEEP_COUNT, self.qubit)
                .expect("default sweep is valid")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        let mut v = vec!["qiopa"];
        v.extend_from_slice(args);
        Cli::try_parse_from(v).unwrap()
    }

    #[test]
    fn preset_fills_gain_cutoff_and_qe() {
        let r = RunConfig::from_cli(&cli(&["pairs", "--preset", "HG"])).unwrap();
        assert_eq!(r.amplifier.gain.g, 1.13);
        assert_eq!(r.amplifier.cutoff, 100);
        assert_eq!(r.detector.qe, 0.18);
        assert!(!r.detector_given);
    }

    #[test]
    fn explicit_gain_overrides_preset_cutoff() {
        let r = RunConfig::from_cli(&cli(&["pairs", "--preset", "LG", "--g", "0.5"])).unwrap();
        assert_eq!(r.amplifier.gain.g, 0.5);
        assert!(r.amplifier.cutoff >= 12);
    }

    #[test]
    fn qubit_rules() {
        let r = RunConfig::from_cli(&cli(&["fringe", "--g", "0.1", "--alpha", "0.6"])).unwrap();
        assert!((r.qubit.beta - 0.8).abs() < 1e-15);
        assert!(RunConfig::from_cli(&cli(&["fringe", "--g", "0.1", "--alpha", "0.6", "--beta", "0.6"])).is_err());
        assert!(RunConfig::from_cli(&cli(&["fringe", "--g", "0.1", "--alpha", "1.2"])).is_err());
        let r = RunConfig::from_cli(&cli(&["fringe", "--g", "0.1", "--alpha", "0.6", "--beta", "0.8000001"])).unwrap();
        assert!((r.qubit.alpha.powi(2) + r.qubit.beta.powi(2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn config_file_merges_under_flags() {
        let map = parse_config("# preset file\ng = 0.3\np-inject=0.5 # comment\nformat=json\n").unwrap();
        let mut c = cli(&["pairs", "--g", "0.2"]);
        c.merge_config(&map).unwrap();
        assert_eq!(c.g, Some(0.2));
        assert_eq!(c.p_inject, Some(0.5));
        assert_eq!(c.format, Some(Format::Json));
        assert!(parse_config("bogus=1").is_err());
        assert!(parse_config("g 1").is_err());
    }

    #[test]
    fn validation_failures() {
        assert!(RunConfig::from_cli(&cli(&["pairs"])).is_err());
        assert!(RunConfig::from_cli(&cli(&["pairs", "--g", "-1"])).is_err());
        assert!(RunConfig::from_cli(&cli(&["pairs", "--g", "1.13", "--cutoff", "10"])).is_err());
        assert!(RunConfig::from_cli(&cli(&["montecarlo", "--g", "1", "--qe", "2"])).is_err());
        assert!(RunConfig::from_cli(&cli(&["montecarlo", "--g", "1", "--mask", "DT,D2"])).is_err());
        assert!(RunConfig::from_cli(&cli(&["fringe", "--g", "1", "--calibrate", "0.1"])).is_err());
        assert!(RunConfig::from_cli(&cli(&["fringe", "--g", "1", "--path", "q:0:1:3"])).is_err());
    }

    #[test]
    fn default_sweep_is_one_turn() {
        let r = RunConfig::from_cli(&cli(&["fringe", "--g", "0.07"])).unwrap();
        let p = r.sweep();
        assert_eq!(p.angles.len(), DEFAULT_SWEEP_COUNT);
        assert!((p.angles.last().unwrap() - 2.0 * PI).abs() < 1e-12);
    }
}
