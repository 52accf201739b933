//! CSV and JSON renderings of the analyses.
//!
//! CSV files are UTF-8, comma separated, with `#`-prefixed metadata lines
//! before a single header row. Numbers use the shortest round-trip
//! representation with a decimal point and no grouping.

use std::fmt::Write;

use serde::Serialize;

use crate::density::{
    entropy, hs_distance_pure, pair_distribution, rho1_closed_form, rho2_closed_form, tail_probability,
};
use crate::detector::{Calibration, DetectorConfig, RunStats, SweepStats, Tally};
use crate::error::Result;
use crate::observables::FringeTable;
use crate::opa::{horizontal_branch, vertical_branch, AmplifierConfig};
use crate::polarization::Qubit;
use crate::reference::{self, Comparison};

/// Locale-independent number formatting.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn same_gain(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

/// Fringe table, optionally with Monte Carlo rates for the same path.
pub fn fringe_csv(table: &FringeTable, mc: Option<&SweepStats>) -> String {
    let mut out = String::new();
    writeln!(out, "# command=fringe").unwrap();
    writeln!(out, "# g={}", num(table.gain.g)).unwrap();
    writeln!(out, "# nbar={}", num(table.gain.nbar)).unwrap();
    writeln!(out, "# path={}", table.path).unwrap();
    writeln!(out, "# visibility={}", num(table.visibility())).unwrap();
    if let Some(mc) = mc {
        let (v, se) = mc.visibility();
        writeln!(out, "# mc_visibility={}", num(v)).unwrap();
        writeln!(out, "# mc_visibility_stderr={}", num(se)).unwrap();
        writeln!(out, "Phi,dG,g2H,g2V,xi_H,xi_V,dxi,stderr").unwrap();
    } else {
        writeln!(out, "Phi,dG,g2H,g2V").unwrap();
    }
    for (k, r) in table.rows.iter().enumerate() {
        write!(out, "{},{},{},{}", num(r.angle), num(r.delta), num(r.g2h), num(r.g2v)).unwrap();
        if let Some(mc) = mc {
            let s = &mc.rows[k].stats;
            write!(out, ",{},{},{},{}", num(s.xi_h), num(s.xi_v), num(s.dxi), num(s.stderr)).unwrap();
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRow {
    pub n: usize,
    pub p_n: f64,
    pub cumulative: f64,
}

/// Pair-number distribution with its moments and a tail probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairsReport {
    pub g: f64,
    pub cutoff: usize,
    pub truncation_error: f64,
    pub total: f64,
    pub mean: f64,
    /// `3 sinh^2 g`
    pub mean_closed_form: f64,
    pub threshold: usize,
    pub tail: f64,
    /// Reported mean pair number, when `g` is one of the reference gains.
    pub mean_reference: Option<Comparison>,
    /// Reported tail probability, for the high gain at the reported threshold.
    pub tail_reference: Option<Comparison>,
    pub rows: Vec<PairRow>,
}

pub fn pairs_report(cfg: &AmplifierConfig, threshold: usize) -> PairsReport {
    let dist = pair_distribution(cfg);
    let rows = dist
        .probabilities
        .iter()
        .zip(dist.cumulative())
        .enumerate()
        .map(|(n, (&p_n, cumulative))| PairRow { n, p_n, cumulative })
        .collect();
    let mean = dist.mean();
    let tail = tail_probability(&dist, threshold);
    let g = cfg.gain.g;
    let mean_reference = if same_gain(g, reference::LOW_GAIN) {
        Some(Comparison::new(mean, reference::REPORTED_MEAN_PAIRS_LOW))
    } else if same_gain(g, reference::HIGH_GAIN) {
        Some(Comparison::new(mean, reference::REPORTED_MEAN_PAIRS_HIGH))
    } else {
        None
    };
    let tail_reference = (same_gain(g, reference::HIGH_GAIN) && threshold == reference::REPORTED_TAIL_THRESHOLD)
        .then(|| Comparison::new(tail, reference::REPORTED_TAIL_HIGH));
    PairsReport {
        g,
        cutoff: cfg.cutoff,
        truncation_error: cfg.truncation_error(),
        total: dist.total(),
        mean,
        mean_closed_form: 3.0 * cfg.gain.nbar,
        threshold,
        tail,
        mean_reference,
        tail_reference,
        rows,
    }
}

fn comparison_lines(out: &mut String, name: &str, c: &Option<Comparison>) {
    if let Some(c) = c {
        writeln!(out, "# {name}_reported={}", num(c.reported)).unwrap();
        writeln!(out, "# {name}_relative_deviation={}", num(c.relative_deviation)).unwrap();
        writeln!(out, "# {name}_status={}", c.flag()).unwrap();
    }
}

pub fn pairs_csv(r: &PairsReport) -> String {
    let mut out = String::new();
    writeln!(out, "# command=pairs").unwrap();
    writeln!(out, "# g={}", num(r.g)).unwrap();
    writeln!(out, "# cutoff={}", r.cutoff).unwrap();
    writeln!(out, "# truncation_error={}", num(r.truncation_error)).unwrap();
    writeln!(out, "# mean={}", num(r.mean)).unwrap();
    writeln!(out, "# mean_closed_form_3sinh2g={}", num(r.mean_closed_form)).unwrap();
    comparison_lines(&mut out, "mean", &r.mean_reference);
    writeln!(out, "# tail_threshold={}", r.threshold).unwrap();
    writeln!(out, "# tail={}", num(r.tail)).unwrap();
    comparison_lines(&mut out, "tail", &r.tail_reference);
    writeln!(out, "n,p_n,cumulative").unwrap();
    for row in &r.rows {
        writeln!(out, "{},{},{}", row.n, num(row.p_n), num(row.cumulative)).unwrap();
    }
    out
}

/// Entropies of both reduced states and the branch distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub g: f64,
    pub cutoff: usize,
    pub qubit: Qubit,
    pub s1: f64,
    pub s2: f64,
    pub abs_difference: f64,
    pub hs_distance_branches: f64,
    pub truncation_error: f64,
}

pub fn entropy_report(q: &Qubit, cfg: &AmplifierConfig) -> Result<EntropyReport> {
    let s1 = entropy(&rho1_closed_form(q, cfg))?;
    let s2 = entropy(&rho2_closed_form(q, cfg))?;
    let d = hs_distance_pure(&horizontal_branch(cfg), &vertical_branch(cfg))?;
    Ok(EntropyReport {
        g: cfg.gain.g,
        cutoff: cfg.cutoff,
        qubit: *q,
        s1,
        s2,
        abs_difference: (s1 - s2).abs(),
        hs_distance_branches: d,
        truncation_error: cfg.truncation_error(),
    })
}

pub fn entropy_csv(r: &EntropyReport) -> String {
    let mut out = String::new();
    writeln!(out, "# command=entropy").unwrap();
    writeln!(out, "# g={}", num(r.g)).unwrap();
    writeln!(out, "# cutoff={}", r.cutoff).unwrap();
    writeln!(out, "# qubit={}", r.qubit).unwrap();
    writeln!(out, "S1,S2,abs_difference,hs_distance_branches").unwrap();
    writeln!(
        out,
        "{},{},{},{}",
        num(r.s1),
        num(r.s2),
        num(r.abs_difference),
        num(r.hs_distance_branches)
    )
    .unwrap();
    out
}

/// One sweep value of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McRow {
    pub sweep: f64,
    pub stats: RunStats,
}

/// JSON summary of a Monte Carlo run or sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub g: f64,
    pub cutoff: usize,
    pub qubit: Qubit,
    pub path: Option<String>,
    pub detector: DetectorConfig,
    pub totals: Tally,
    pub visibility: f64,
    pub visibility_stderr: f64,
    pub visibility_ci95: (f64, f64),
    pub ideal_visibility: f64,
    pub calibration: Option<Calibration>,
}

pub fn mc_summary(
    cfg: &AmplifierConfig,
    qubit: &Qubit,
    path: Option<&SweepStats>,
    single: Option<&RunStats>,
    det: &DetectorConfig,
    ideal_visibility: f64,
    calibration: Option<Calibration>,
) -> McSummary {
    let (visibility, stderr, totals) = match (path, single) {
        (Some(p), _) => {
            let (v, se) = p.visibility();
            let totals = p.rows.iter().fold(Tally::default(), |acc, r| add_tally(acc, &r.stats.tally));
            (v, se, totals)
        }
        (None, Some(s)) => (s.visibility, s.visibility_stderr, s.tally),
        (None, None) => (0.0, f64::NAN, Tally::default()),
    };
    McSummary {
        g: cfg.gain.g,
        cutoff: cfg.cutoff,
        qubit: *qubit,
        path: path.map(|p| p.path.clone()),
        detector: det.clone(),
        totals,
        visibility,
        visibility_stderr: stderr,
        visibility_ci95: (visibility - 1.96 * stderr, visibility + 1.96 * stderr),
        ideal_visibility,
        calibration,
    }
}

fn add_tally(a: Tally, b: &Tally) -> Tally {
    Tally {
        pulses: a.pulses + b.pulses,
        heralds: a.heralds + b.heralds,
        coincidences: a.coincidences + b.coincidences,
        channel_h: a.channel_h + b.channel_h,
        channel_v: a.channel_v + b.channel_v,
        channel_both: a.channel_both + b.channel_both,
        photons_h: a.photons_h + b.photons_h,
        photons_v: a.photons_v + b.photons_v,
        photons_hh: a.photons_hh + b.photons_hh,
        photons_vv: a.photons_vv + b.photons_vv,
        photons_hv: a.photons_hv + b.photons_hv,
        injected: a.injected + b.injected,
    }
}

pub fn mc_csv(summary: &McSummary, rows: &[McRow]) -> String {
    let mut out = String::new();
    writeln!(out, "# command=montecarlo").unwrap();
    writeln!(out, "# g={}", num(summary.g)).unwrap();
    writeln!(out, "# cutoff={}", summary.cutoff).unwrap();
    writeln!(out, "# qubit={}", summary.qubit).unwrap();
    if let Some(p) = &summary.path {
        writeln!(out, "# path={p}").unwrap();
    }
    let d = &summary.detector;
    writeln!(
        out,
        "# qe={} attenuation={} dark={} p_inject={} pulses={} seed={}",
        num(d.qe),
        num(d.attenuation),
        num(d.dark_rate),
        num(d.p_inject),
        d.pulses,
        d.seed
    )
    .unwrap();
    let mask: Vec<String> = d.coincidence_mask.iter().map(|m| m.to_string()).collect();
    writeln!(out, "# mask={}", mask.join(";")).unwrap();
    writeln!(out, "# visibility={}", num(summary.visibility)).unwrap();
    writeln!(out, "# visibility_stderr={}", num(summary.visibility_stderr)).unwrap();
    writeln!(out, "sweep,xi_H,xi_V,dxi,stderr").unwrap();
    for r in rows {
        let s = &r.stats;
        writeln!(out, "{},{},{},{},{}", num(r.sweep), num(s.xi_h), num(s.xi_v), num(s.dxi), num(s.stderr)).unwrap();
    }
    out
}
