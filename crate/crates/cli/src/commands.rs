//! One function per subcommand. Each returns the rendered outputs; nothing
//! touches the filesystem here.

use std::path::PathBuf;

use serde::Serialize;

use qiopa_core::detector::{calibrate_visibility_loss, phase_pair, run_path, SweepStats};
use qiopa_core::export::{
    entropy_csv, entropy_report, fringe_csv, mc_csv, mc_summary, num, pairs_csv, pairs_report, to_json, McRow,
};
use qiopa_core::observables::{fringe_sweep, g1_closed_form, FringeTable};
use qiopa_core::selftest;
use qiopa_core::{BlochPath, GainParams, Qubit};

use crate::args::{Command, Format, RunConfig};
use crate::error::CliError;

/// A rendered file and where it goes; `None` means stdout.
pub struct Output {
    pub path: Option<PathBuf>,
    pub contents: String,
}

/// Everything a command produces: files plus a short note for stderr.
pub struct Rendered {
    pub outputs: Vec<Output>,
    pub note: Option<String>,
}

/// Bisection width on `p_inject` for `--calibrate`.
pub const CALIBRATION_TOL: f64 = 1e-3;

pub fn execute(cfg: &RunConfig) -> Result<Rendered, CliError> {
    match cfg.command {
        Command::Fringe => fringe(cfg),
        Command::Pairs => pairs(cfg),
        Command::Entropy => entropy(cfg),
        Command::Montecarlo => montecarlo(cfg),
    }
}

fn single(cfg: &RunConfig, contents: String, note: Option<String>) -> Rendered {
    Rendered {
        outputs: vec![Output {
            path: cfg.out.clone(),
            contents,
        }],
        note,
    }
}

#[derive(Serialize)]
struct FringeJson<'a> {
    table: &'a FringeTable,
    monte_carlo: Option<&'a SweepStats>,
}

fn fringe(cfg: &RunConfig) -> Result<Rendered, CliError> {
    let path = cfg.sweep();
    let table = fringe_sweep(&path, &cfg.amplifier.gain);
    let mc = if cfg.detector_given {
        Some(run_path(&path, &cfg.amplifier, &cfg.detector)?)
    } else {
        None
    };
    let contents = match cfg.format {
        Format::Csv => fringe_csv(&table, mc.as_ref()),
        Format::Json => to_json(&FringeJson {
            table: &table,
            monte_carlo: mc.as_ref(),
        }),
    };
    Ok(single(cfg, contents, Some(format!("visibility={}", num(table.visibility())))))
}

fn pairs(cfg: &RunConfig) -> Result<Rendered, CliError> {
    let r = pairs_report(&cfg.amplifier, cfg.threshold);
    let mut note = format!(
        "mean={} 3sinh^2(g)={} P(N>={})={}",
        num(r.mean),
        num(r.mean_closed_form),
        r.threshold,
        num(r.tail)
    );
    if let Some(c) = &r.tail_reference {
        note.push_str(&format!(" reported={} {}", num(c.reported), c.flag()));
    }
    let contents = match cfg.format {
        Format::Csv => pairs_csv(&r),
        Format::Json => to_json(&r),
    };
    Ok(single(cfg, contents, Some(note)))
}

fn entropy(cfg: &RunConfig) -> Result<Rendered, CliError> {
    let r = entropy_report(&cfg.qubit, &cfg.amplifier)?;
    let note = format!("S1={} S2={}", num(r.s1), num(r.s2));
    let contents = match cfg.format {
        Format::Csv => entropy_csv(&r),
        Format::Json => to_json(&r),
    };
    Ok(single(cfg, contents, Some(note)))
}

/// Closed-form `H`-channel fringe visibility along `path` with injection
/// probability `p`, ignoring any conditioning by the heralding mask.
fn expected_visibility(path: &BlochPath, gain: &GainParams, p: f64) -> f64 {
    // Vacuum input on a fraction 1 - p of the pulses.
    let h = |q: &Qubit| p * g1_closed_form(q, gain).g2h + (1.0 - p) * gain.nbar;
    let hs: Vec<f64> = path.qubits().iter().map(h).collect();
    let hi = hs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = hs.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi + lo == 0.0 {
        0.0
    } else {
        (hi - lo) / (hi + lo)
    }
}

fn montecarlo(cfg: &RunConfig) -> Result<Rendered, CliError> {
    let calibration = match cfg.calibrate {
        Some(target) => Some(calibrate_visibility_loss(
            target,
            &cfg.qubit,
            &cfg.amplifier,
            &cfg.detector,
            CALIBRATION_TOL,
        )?),
        None => None,
    };
    let mut det = cfg.detector.clone();
    if let Some(c) = &calibration {
        det.p_inject = c.p_inject;
    }
    // A single qubit is measured together with its phase-flipped partner.
    let path = cfg.path.clone().unwrap_or_else(|| phase_pair(&cfg.qubit));
    let ideal = expected_visibility(&path, &cfg.amplifier.gain, det.p_inject);
    let sweep = run_path(&path, &cfg.amplifier, &det)?;
    let rows: Vec<McRow> = sweep
        .rows
        .iter()
        .map(|r| McRow {
            sweep: r.angle,
            stats: r.stats,
        })
        .collect();
    let summary = mc_summary(&cfg.amplifier, &cfg.qubit, Some(&sweep), None, &det, ideal, calibration);
    let mut note = format!(
        "visibility={} stderr={} expected={}",
        num(summary.visibility),
        num(summary.visibility_stderr),
        num(ideal)
    );
    if let Some(c) = &calibration {
        note.push_str(&format!(
            " calibrated p_inject={} [{}, {}]",
            num(c.p_inject),
            num(c.ci_low),
            num(c.ci_high)
        ));
    }
    let json = to_json(&summary);
    let outputs = match (cfg.format, &cfg.out) {
        (Format::Json, out) => vec![Output {
            path: out.clone(),
            contents: json,
        }],
        (Format::Csv, Some(out)) => vec![
            Output {
                path: Some(out.clone()),
                contents: mc_csv(&summary, &rows),
            },
            Output {
                path: Some(out.with_extension("json")),
                contents: json,
            },
        ],
        (Format::Csv, None) => vec![Output {
            path: None,
            contents: mc_csv(&summary, &rows),
        }],
    };
    Ok(Rendered {
        outputs,
        note: Some(note),
    })
}

/// Runs the invariant suite, printing one line per check.
pub fn run_selftest() -> bool {
    let checks = selftest::run();
    let mut ok = true;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("selftest: {} checks, {failed} failed", checks.len());
    ok
}
