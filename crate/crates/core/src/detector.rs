//! Monte Carlo model of the heralded coincidence experiment.
//!
//! Each pulse either carries the heralded photon into the amplifier or, with
//! probability `1 - p_inject`, only vacuum (the amplifier then emits squeezed
//! vacuum). The output is rotated onto the analyzer modes, one Fock index is
//! drawn from its exact distribution, photons are thinned binomially by
//! `attenuation * qe`, and threshold detectors click on one or more surviving
//! photons or a dark count.
//!
//! Randomness comes from ChaCha8 streams: pulses are processed in fixed-size
//! chunks, chunk `c` of sweep point `k` using stream `(k << 32) | c` of the
//! generator seeded by `seed`. Results are therefore independent of thread
//! count and scheduling.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QiopaError, Result};
use crate::fock::{diagonal_analyzer, rotate_mode_pair, FockIndex4, FockState4, Mode, ModePair};
use crate::opa::{amplify, vacuum_output, AmplifierConfig};
use crate::polarization::{Axis, BlochPath, Qubit};

/// Pulses handled by one RNG stream.
pub const CHUNK: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Detector {
    /// Herald detector on the idler of the source pair.
    Trigger,
    /// Anticloning mode, constructive (`H`) analyzer output.
    D2,
    /// Anticloning mode, `V` analyzer output.
    D2Star,
    /// Cloning mode, analyzer output matching `D2`.
    D1,
    /// Cloning mode, analyzer output matching `D2Star`.
    D1Star,
}

impl Detector {
    pub const ALL: [Detector; 5] = [
        Detector::Trigger,
        Detector::D2,
        Detector::D2Star,
        Detector::D1,
        Detector::D1Star,
    ];

    fn slot(self) -> usize {
        self as usize
    }

    /// Field mode seen by the detector after the analyzer rotation.
    ///
    /// `D2` sees `(b_h - b_v)/sqrt2` on `k2` and `D1` the same analyzer output
    /// `(a_h - a_v)/sqrt2` on `k1`; the starred detectors see the other port.
    fn mode(self) -> Option<Mode> {
        match self {
            Detector::Trigger => None,
            Detector::D2 => Some(Mode::V2),
            Detector::D2Star => Some(Mode::H2),
            Detector::D1 => Some(Mode::V1),
            Detector::D1Star => Some(Mode::H1),
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detector::Trigger => "DT",
            Detector::D2 => "D2",
            Detector::D2Star => "D2*",
            Detector::D1 => "D1",
            Detector::D1Star => "D1*",
        })
    }
}

impl FromStr for Detector {
    type Err = QiopaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DT" | "T" | "TRIGGER" => Ok(Detector::Trigger),
            "D2" => Ok(Detector::D2),
            "D2*" | "D2STAR" => Ok(Detector::D2Star),
            "D1" => Ok(Detector::D1),
            "D1*" | "D1STAR" => Ok(Detector::D1Star),
            other => Err(QiopaError::InvalidDetector(format!("unknown detector '{other}'"))),
        }
    }
}

/// Two-fold scheme: each analyzer output in coincidence with the trigger.
pub fn two_fold_mask() -> BTreeSet<Detector> {
    [Detector::Trigger, Detector::D2, Detector::D2Star].into_iter().collect()
}

/// Four-fold scheme: as two-fold, additionally requiring a click on `D1`.
pub fn four_fold_mask() -> BTreeSet<Detector> {
    [Detector::Trigger, Detector::D2, Detector::D2Star, Detector::D1]
        .into_iter()
        .collect()
}

/// Parses a comma-separated detector list, or the names `2fold` / `4fold`.
pub fn parse_mask(s: &str) -> Result<BTreeSet<Detector>> {
    match s.trim().to_ascii_lowercase().as_str() {
        "2fold" | "two" => return Ok(two_fold_mask()),
        "4fold" | "four" => return Ok(four_fold_mask()),
        _ => {}
    }
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub qe: f64,
    pub attenuation: f64,
    /// Per-pulse dark-click probability of each detector.
    pub dark_rate: f64,
    pub p_inject: f64,
    pub coincidence_mask: BTreeSet<Detector>,
    pub pulses: u64,
    pub seed: u64,
}

impl DetectorConfig {
    /// Unit efficiency, no losses or dark counts, two-fold mask.
    pub fn ideal(pulses: u64, seed: u64) -> Self {
        DetectorConfig {
            qe: 1.0,
            attenuation: 1.0,
            dark_rate: 0.0,
            p_inject: 1.0,
            coincidence_mask: two_fold_mask(),
            pulses,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("qe", self.qe),
            ("attenuation", self.attenuation),
            ("dark_rate", self.dark_rate),
            ("p_inject", self.p_inject),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(QiopaError::InvalidDetector(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.pulses == 0 {
            return Err(QiopaError::InvalidDetector("pulses must be at least 1".into()));
        }
        if !self.coincidence_mask.contains(&Detector::D2) || !self.coincidence_mask.contains(&Detector::D2Star) {
            return Err(QiopaError::InvalidDetector(
                "coincidence mask must include both anticloning detectors D2 and D2*".into(),
            ));
        }
        Ok(())
    }

    /// Transmission from crystal to click.
    pub fn efficiency(&self) -> f64 {
        self.attenuation * self.qe
    }

    fn rotates_first_pair(&self) -> bool {
        self.coincidence_mask.contains(&Detector::D1) || self.coincidence_mask.contains(&Detector::D1Star)
    }

    /// Mask detectors that gate both analyzer channels.
    fn herald_set(&self) -> Vec<Detector> {
        self.coincidence_mask
            .iter()
            .copied()
            .filter(|d| !matches!(d, Detector::D2 | Detector::D2Star))
            .collect()
    }
}

/// Discrete distribution over the analyzer-basis output kets.
struct KetSampler {
    kets: Vec<FockIndex4>,
    weights: WeightedIndex<f64>,
}

impl KetSampler {
    fn new(state: &FockState4) -> Self {
        let (kets, w): (Vec<_>, Vec<_>) = state.iter().map(|(i, a)| (*i, a.norm_sqr())).unzip();
        KetSampler {
            kets,
            weights: WeightedIndex::new(w).expect("state has positive norm"),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> FockIndex4 {
        self.kets[self.weights.sample(rng)]
    }
}

/// Precomputed output distributions for one injected qubit.
pub struct PulseSampler {
    injected: KetSampler,
    vacuum: KetSampler,
}

impl PulseSampler {
    pub fn new(q: &Qubit, cfg: &AmplifierConfig, det: &DetectorConfig) -> Result<Self> {
        det.validate()?;
        let rotate = |s: FockState4| -> Result<FockState4> {
            let u = diagonal_analyzer();
            let s = rotate_mode_pair(&s, ModePair::Second, &u)?;
            if det.rotates_first_pair() {
                rotate_mode_pair(&s, ModePair::First, &u)
            } else {
                Ok(s)
            }
        };
        Ok(PulseSampler {
            injected: KetSampler::new(&rotate(amplify(q, cfg))?),
            vacuum: KetSampler::new(&rotate(vacuum_output(cfg))?),
        })
    }
}

/// Outcome of a single pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub injected: bool,
    /// Output ket in the analyzer basis.
    pub ket: FockIndex4,
    /// Surviving photons per analyzer mode, in `FockIndex4` slot order.
    pub detected: [u32; 4],
    /// Click per detector, indexed as [`Detector::ALL`].
    pub clicks: [bool; 5],
    /// All mask detectors clicked.
    pub coincidence: bool,
}

impl PulseRecord {
    pub fn clicked(&self, d: Detector) -> bool {
        self.clicks[d.slot()]
    }

    pub fn photons(&self, d: Detector) -> u32 {
        d.mode().map(|m| self.detected[m as usize]).unwrap_or(0)
    }
}

fn thin<R: Rng>(n: u32, eta: f64, rng: &mut R) -> u32 {
    if n == 0 || eta <= 0.0 {
        0
    } else if eta >= 1.0 {
        n
    } else {
        Binomial::new(n as u64, eta).expect("valid binomial").sample(rng) as u32
    }
}

/// Draws one pulse.
///
/// Random numbers are consumed in a fixed order: injection, ket, trigger,
/// then thinning and dark count per mode.
pub fn sample_pulse<R: Rng>(sampler: &PulseSampler, det: &DetectorConfig, rng: &mut R) -> PulseRecord {
    let injected = rng.gen::<f64>() < det.p_inject;
    let ket = if injected {
        sampler.injected.sample(rng)
    } else {
        sampler.vacuum.sample(rng)
    };
    let mut clicks = [false; 5];
    let herald_photon = rng.gen::<f64>() < det.qe;
    let herald_dark = rng.gen::<f64>() < det.dark_rate;
    clicks[Detector::Trigger.slot()] = herald_photon || herald_dark;
    let eta = det.efficiency();
    let mut detected = [0u32; 4];
    for d in &Detector::ALL[1..] {
        let m = d.mode().expect("field detector");
        let slot = m as usize;
        detected[slot] = thin(ket.get(m), eta, rng);
        let dark = rng.gen::<f64>() < det.dark_rate;
        clicks[d.slot()] = detected[slot] > 0 || dark;
    }
    let coincidence = det.coincidence_mask.iter().all(|d| clicks[d.slot()]);
    PulseRecord {
        injected,
        ket,
        detected,
        clicks,
        coincidence,
    }
}

/// Integer counters accumulated over pulses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub pulses: u64,
    pub heralds: u64,
    pub coincidences: u64,
    pub channel_h: u64,
    pub channel_v: u64,
    pub channel_both: u64,
    pub photons_h: u64,
    pub photons_v: u64,
    pub photons_hh: u64,
    pub photons_vv: u64,
    pub photons_hv: u64,
    pub injected: u64,
}

impl Tally {
    fn add(mut self, o: Tally) -> Tally {
        self.pulses += o.pulses;
        self.heralds += o.heralds;
        self.coincidences += o.coincidences;
        self.channel_h += o.channel_h;
        self.channel_v += o.channel_v;
        self.channel_both += o.channel_both;
        self.photons_h += o.photons_h;
        self.photons_v += o.photons_v;
        self.photons_hh += o.photons_hh;
        self.photons_vv += o.photons_vv;
        self.photons_hv += o.photons_hv;
        self.injected += o.injected;
        self
    }

    fn record(&mut self, r: &PulseRecord, herald_set: &[Detector]) {
        self.pulses += 1;
        self.injected += r.injected as u64;
        self.coincidences += r.coincidence as u64;
        if !herald_set.iter().all(|d| r.clicked(*d)) {
            return;
        }
        self.heralds += 1;
        let (h, v) = (r.clicked(Detector::D2), r.clicked(Detector::D2Star));
        self.channel_h += h as u64;
        self.channel_v += v as u64;
        self.channel_both += (h && v) as u64;
        let (nh, nv) = (r.photons(Detector::D2) as u64, r.photons(Detector::D2Star) as u64);
        self.photons_h += nh;
        self.photons_v += nv;
        self.photons_hh += nh * nh;
        self.photons_vv += nv * nv;
        self.photons_hv += nh * nv;
    }
}

/// Aggregated statistics of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub tally: Tally,
    /// `[D2, herald]` coincidences per pulse.
    pub xi_h: f64,
    /// `[D2*, herald]` coincidences per pulse.
    pub xi_v: f64,
    pub dxi: f64,
    /// Binomial standard error of `dxi`.
    pub stderr: f64,
    /// Mean detected photons in the `H` channel per heralded pulse.
    pub mean_h: f64,
    pub mean_v: f64,
    /// `(mean_h - mean_v) / (mean_h + mean_v)`.
    pub visibility: f64,
    /// Delta-method standard error of `visibility`.
    pub visibility_stderr: f64,
}

impl RunStats {
    fn from_tally(t: Tally) -> Self {
        let n = t.pulses as f64;
        let xi_h = t.channel_h as f64 / n;
        let xi_v = t.channel_v as f64 / n;
        let both = t.channel_both as f64 / n;
        let dxi = xi_h - xi_v;
        let var = (xi_h + xi_v - 2.0 * both - dxi * dxi).max(0.0);
        let stderr = (var / n).sqrt();

        let m = t.heralds as f64;
        let (mean_h, mean_v, visibility, visibility_stderr) = if t.heralds == 0 {
            (0.0, 0.0, 0.0, f64::NAN)
        } else {
            let a = t.photons_h as f64 / m;
            let b = t.photons_v as f64 / m;
            let var_a = t.photons_hh as f64 / m - a * a;
            let var_b = t.photons_vv as f64 / m - b * b;
            let cov = t.photons_hv as f64 / m - a * b;
            let s = a + b;
            if s == 0.0 {
                (a, b, 0.0, f64::NAN)
            } else {
                let (da, db) = (2.0 * b / (s * s), -2.0 * a / (s * s));
                let v = (da * da * var_a + db * db * var_b + 2.0 * da * db * cov) / m;
                (a, b, (a - b) / s, v.max(0.0).sqrt())
            }
        };
        RunStats {
            tally: t,
            xi_h,
            xi_v,
            dxi,
            stderr,
            mean_h,
            mean_v,
            visibility,
            visibility_stderr,
        }
    }

    /// Photon-mean difference `mean_h - mean_v` and its standard error.
    pub fn photon_difference(&self) -> (f64, f64) {
        let t = &self.tally;
        let m = t.heralds as f64;
        if m == 0.0 {
            return (0.0, f64::NAN);
        }
        let d = self.mean_h - self.mean_v;
        let second = (t.photons_hh + t.photons_vv) as f64 / m - 2.0 * t.photons_hv as f64 / m;
        (d, ((second - d * d).max(0.0) / m).sqrt())
    }
}

fn stream_rng(seed: u64, point: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((point << 32) | chunk);
    rng
}

fn run_point(sampler: &PulseSampler, det: &DetectorConfig, point: u64) -> RunStats {
    let herald = det.herald_set();
    let chunks = det.pulses.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(det.seed, point, c);
            let len = CHUNK.min(det.pulses - c * CHUNK);
            let mut t = Tally::default();
            for _ in 0..len {
                t.record(&sample_pulse(sampler, det, &mut rng), &herald);
            }
            t
        })
        .reduce(Tally::default, Tally::add);
    RunStats::from_tally(tally)
}

/// Runs `det.pulses` pulses for the fixed qubit `q`.
pub fn run(q: &Qubit, cfg: &AmplifierConfig, det: &DetectorConfig) -> Result<RunStats> {
    let sampler = PulseSampler::new(q, cfg, det)?;
    Ok(run_point(&sampler, det, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub angle: f64,
    pub stats: RunStats,
}

/// Monte Carlo fringe pattern along a Bloch path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub path: String,
    pub rows: Vec<SweepRow>,
}

impl SweepStats {
    /// `(max - min)/(max + min)` of the `H`-channel photon mean, with a
    /// standard error from the two extremal points.
    pub fn visibility(&self) -> (f64, f64) {
        let by = |f: fn(f64, f64) -> bool| {
            self.rows
                .iter()
                .map(|r| &r.stats)
                .reduce(|a, b| if f(b.mean_h, a.mean_h) { b } else { a })
                .expect("non-empty sweep")
        };
        let hi = by(|x, y| x > y);
        let lo = by(|x, y| x < y);
        let s = hi.mean_h + lo.mean_h;
        if s == 0.0 {
            return (0.0, f64::NAN);
        }
        let se = |r: &RunStats| {
            let m = r.tally.heralds as f64;
            ((r.tally.photons_hh as f64 / m - r.mean_h * r.mean_h).max(0.0) / m).sqrt()
        };
        let v = (hi.mean_h - lo.mean_h) / s;
        let (da, db) = (2.0 * lo.mean_h / (s * s), 2.0 * hi.mean_h / (s * s));
        (v, ((da * se(hi)).powi(2) + (db * se(lo)).powi(2)).sqrt())
    }
}

/// Runs every point of `path`; point `k` uses stream block `k`.
pub fn run_path(path: &BlochPath, cfg: &AmplifierConfig, det: &DetectorConfig) -> Result<SweepStats> {
    det.validate()?;
    let rows = path
        .angles
        .iter()
        .zip(path.qubits())
        .enumerate()
        .map(|(k, (&angle, q))| {
            let sampler = PulseSampler::new(&q, cfg, det)?;
            Ok(SweepRow {
                angle,
                stats: run_point(&sampler, det, k as u64),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepStats {
        path: path.describe(),
        rows,
    })
}

/// Result of fitting the injection probability to a target visibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub target: f64,
    pub p_inject: f64,
    /// Range of `p_inject` reproducing `target` within 1.96 standard errors.
    pub ci_low: f64,
    pub ci_high: f64,
    pub visibility: f64,
    pub visibility_stderr: f64,
    pub iterations: usize,
}

/// The qubit and its partner with the relative phase advanced by `pi`.
pub fn phase_pair(q: &Qubit) -> BlochPath {
    BlochPath::new(Axis::Z, vec![0.0, PI], *q).expect("two distinct angles")
}

/// Fringe of the `H` channel between `q` and its phase-flipped partner.
///
/// Unlike the single-point channel contrast this stays zero for pulses
/// that carry no qubit, whatever the heralding mask does to the balance of
/// the two channels.
pub fn fringe_visibility(q: &Qubit, cfg: &AmplifierConfig, det: &DetectorConfig) -> Result<SweepStats> {
    run_path(&phase_pair(q), cfg, det)
}

struct Bisection {
    p: f64,
    visibility: f64,
    stderr: f64,
    iterations: usize,
}

fn bisect_p(
    target: f64,
    eval: &impl Fn(f64) -> Result<(f64, f64)>,
    top: (f64, f64),
    tol: f64,
) -> Result<Bisection> {
    if target >= top.0 {
        return Ok(Bisection {
            p: 1.0,
            visibility: top.0,
            stderr: top.1,
            iterations: 1,
        });
    }
    let bottom = eval(0.0)?;
    if target <= bottom.0 {
        return Ok(Bisection {
            p: 0.0,
            visibility: bottom.0,
            stderr: bottom.1,
            iterations: 2,
        });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut iterations = 2;
    let mut last = top;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        last = eval(mid)?;
        iterations += 1;
        if last.0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bisection {
        p: 0.5 * (lo + hi),
        visibility: last.0,
        stderr: last.1,
        iterations,
    })
}

/// Finds the injection probability whose simulated fringe visibility
/// (see [`fringe_visibility`]) matches `target_v`, by bisection with common
/// random numbers.
///
/// `tol` is the width of the final `p_inject` bracket. Targets above the
/// simulated `p_inject = 1` visibility by more than 1.96 standard errors
/// are rejected.
pub fn calibrate_visibility_loss(
    target_v: f64,
    q: &Qubit,
    cfg: &AmplifierConfig,
    template: &DetectorConfig,
    tol: f64,
) -> Result<Calibration> {
    template.validate()?;
    let eval = |p: f64| -> Result<(f64, f64)> {
        let det = DetectorConfig {
            p_inject: p,
            ..template.clone()
        };
        Ok(fringe_visibility(q, cfg, &det)?.visibility())
    };
    let top = eval(1.0)?;
    if !(target_v > 0.0) || !(target_v <= top.0 + 1.96 * top.1.max(0.0)) {
        return Err(QiopaError::UnattainableTarget {
            target: target_v,
            ideal: top.0,
        });
    }
    let fit = bisect_p(target_v, &eval, top, tol)?;
    let half = 1.96 * fit.stderr;
    let low = bisect_p((target_v - half).max(f64::MIN_POSITIVE), &eval, top, tol)?;
    let high = bisect_p(target_v + half, &eval, top, tol)?;
    Ok(Calibration {
        target: target_v,
        p_inject: fit.p,
        ci_low: low.p.min(fit.p),
        ci_high: high.p.max(fit.p),
        visibility: fit.visibility,
        visibility_stderr: fit.stderr,
        iterations: fit.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::Axis;

    fn cfg(g: f64) -> AmplifierConfig {
        AmplifierConfig::from_gain(g).unwrap()
    }

    #[test]
    fn no_amplification_no_anticloning_clicks() {
        let det = DetectorConfig::ideal(2000, 1);
        let sampler = PulseSampler::new(&Qubit::horizontal(), &cfg(0.0), &det).unwrap();
        let mut rng = stream_rng(1, 0, 0);
        for _ in 0..2000 {
            let r = sample_pulse(&sampler, &det, &mut rng);
            assert!(r.clicked(Detector::Trigger));
            assert!(!r.clicked(Detector::D2) && !r.clicked(Detector::D2Star));
            assert_eq!(r.ket, FockIndex4::new(1, 0, 0, 0));
        }
    }

    #[test]
    fn zero_efficiency_never_clicks() {
        let det = DetectorConfig {
            qe: 0.0,
            ..DetectorConfig::ideal(5000, 3)
        };
        let s = run(&Qubit::diagonal(0.0), &cfg(1.13), &det).unwrap();
        assert_eq!(s.tally.channel_h + s.tally.channel_v + s.tally.heralds, 0);
        assert_eq!((s.xi_h, s.xi_v), (0.0, 0.0));
    }

    #[test]
    fn coincidence_flag_is_mask_and() {
        let det = DetectorConfig {
            qe: 0.6,
            dark_rate: 0.05,
            coincidence_mask: four_fold_mask(),
            ..DetectorConfig::ideal(1, 9)
        };
        let sampler = PulseSampler::new(&Qubit::diagonal(0.0), &cfg(0.5), &det).unwrap();
        let mut rng = stream_rng(9, 0, 0);
        for _ in 0..3000 {
            let r = sample_pulse(&sampler, &det, &mut rng);
            let expect = det.coincidence_mask.iter().all(|d| r.clicked(*d));
            assert_eq!(r.coincidence, expect);
        }
    }

    #[test]
    fn records_are_reproducible() {
        let det = DetectorConfig::ideal(1, 42);
        let sampler = PulseSampler::new(&Qubit::diagonal(0.3), &cfg(0.5), &det).unwrap();
        let draw = || {
            let mut rng = stream_rng(42, 0, 0);
            (0..500).map(|_| sample_pulse(&sampler, &det, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn photon_mean_matches_sum_rule() {
        let c = cfg(0.5);
        let det = DetectorConfig::ideal(200_000, 5);
        let s = run(&Qubit::new(0.6, 0.8, 1.0).unwrap(), &c, &det).unwrap();
        let t = &s.tally;
        let m = t.heralds as f64;
        let mean = (t.photons_h + t.photons_v) as f64 / m;
        let var = (t.photons_hh + t.photons_vv + 2 * t.photons_hv) as f64 / m - mean * mean;
        let se = (var / m).sqrt();
        assert!((mean - 3.0 * c.gain.nbar).abs() < 3.0 * se, "{mean} vs {}", 3.0 * c.gain.nbar);
    }

    #[test]
    fn lower_efficiency_lowers_rates() {
        let c = cfg(1.13);
        let q = Qubit::diagonal(0.0);
        let rates: Vec<f64> = [1.0, 0.5, 0.18]
            .iter()
            .map(|&qe| {
                let det = DetectorConfig {
                    qe,
                    ..DetectorConfig::ideal(50_000, 11)
                };
                run(&q, &c, &det).unwrap().xi_h
            })
            .collect();
        assert!(rates[0] > rates[1] && rates[1] > rates[2], "{rates:?}");
        assert!(rates.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn rejects_bad_config() {
        let mut det = DetectorConfig::ideal(10, 0);
        det.qe = 1.5;
        assert!(det.validate().is_err());
        let mut det = DetectorConfig::ideal(0, 0);
        assert!(det.validate().is_err());
        det.pulses = 1;
        det.coincidence_mask = [Detector::Trigger, Detector::D2].into_iter().collect();
        assert!(det.validate().is_err());
    }

    #[test]
    fn mask_parsing() {
        assert_eq!(parse_mask("2fold").unwrap(), two_fold_mask());
        assert_eq!(parse_mask("DT,D2,D2*,D1").unwrap(), four_fold_mask());
        assert!(parse_mask("DT,D9").is_err());
    }

    #[test]
    fn path_run_is_deterministic() {
        let path = BlochPath::uniform(Axis::Z, 0.0, 1.0, 3, Qubit::diagonal(0.0)).unwrap();
        let det = DetectorConfig::ideal(3000, 8);
        let a = run_path(&path, &cfg(0.5), &det).unwrap();
        let b = run_path(&path, &cfg(0.5), &det).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.rows[0].stats.tally, a.rows[1].stats.tally);
    }

    #[test]
    fn calibration_rejects_unattainable() {
        let det = DetectorConfig::ideal(1000, 1);
        let err = calibrate_visibility_loss(0.5, &Qubit::diagonal(0.0), &cfg(0.5), &det, 1e-2).unwrap_err();
        assert!(matches!(err, QiopaError::UnattainableTarget { .. }));
    }
}
