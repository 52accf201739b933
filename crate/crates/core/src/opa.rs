//! Amplified output states.
//!
//! The injected photon and the vacuum on `k2` are driven by a singlet-type
//! two-mode squeezing interaction that creates pairs on `(1h, 2v)` and
//! `(1v, 2h)` with opposite signs. Both pair channels are independent
//! two-mode squeezers, which gives the closed-form output built by
//! [`amplify`]. [`propagate_hamiltonian`] integrates the same interaction
//! numerically and serves as an independent check.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::pair_tail;
use crate::error::{QiopaError, Result};
use crate::fock::{FockIndex4, FockState4, GainParams, Mode};
use crate::polarization::Qubit;

/// Largest pair-number tail probability a cutoff may leave out.
pub const TAIL_RULE: f64 = 1e-9;

/// Extra pairs kept by the propagator above the configured cutoff.
pub const PROPAGATOR_PAD: usize = 8;

/// Cutoff used by the low-gain preset.
pub const LOW_GAIN_CUTOFF: usize = 12;
/// Cutoff used by the high-gain preset.
pub const HIGH_GAIN_CUTOFF: usize = 100;

/// Dropped tail targeted by the default cutoff.
pub const DEFAULT_TAIL: f64 = 1e-15;

/// Smallest cutoff whose dropped tail is below `tail`.
pub fn cutoff_for_tail(gain: &GainParams, tail: f64) -> usize {
    let mut n = 0;
    while pair_tail(gain, n + 1) >= tail {
        n += 1;
    }
    n
}

/// Smallest cutoff whose dropped tail is below [`TAIL_RULE`].
pub fn minimal_cutoff(gain: &GainParams) -> usize {
    cutoff_for_tail(gain, TAIL_RULE)
}

/// Gain and pair-number truncation of the amplifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifierConfig {
    pub gain: GainParams,
    pub cutoff: usize,
}

impl AmplifierConfig {
    pub fn new(gain: GainParams, cutoff: usize) -> Result<Self> {
        let tail = pair_tail(&gain, cutoff + 1);
        if tail >= TAIL_RULE {
            return Err(QiopaError::CutoffTooSmall {
                given: cutoff,
                required: minimal_cutoff(&gain),
                tail,
            });
        }
        Ok(AmplifierConfig { gain, cutoff })
    }

    /// Uses the low-gain cutoff or the one dropping less than
    /// [`DEFAULT_TAIL`], whichever is larger. Without gain nothing is
    /// amplified and the cutoff is zero.
    pub fn with_default_cutoff(gain: GainParams) -> Self {
        let cutoff = if gain.g == 0.0 {
            0
        } else {
            LOW_GAIN_CUTOFF.max(cutoff_for_tail(&gain, DEFAULT_TAIL))
        };
        AmplifierConfig { gain, cutoff }
    }

    pub fn from_gain(g: f64) -> Result<Self> {
        Ok(Self::with_default_cutoff(GainParams::new(g)?))
    }

    /// Dropped probability mass, `sum_{n > cutoff} p(n)`.
    pub fn truncation_error(&self) -> f64 {
        pair_tail(&self.gain, self.cutoff + 1)
    }
}

fn cap(cfg: &AmplifierConfig) -> u32 {
    cfg.cutoff as u32 + 1
}

/// The `|H>`-injected output branch.
pub fn horizontal_branch(cfg: &AmplifierConfig) -> FockState4 {
    branch(cfg, true, Complex64::new(1.0, 0.0))
}

/// The `|V>`-injected output branch.
pub fn vertical_branch(cfg: &AmplifierConfig) -> FockState4 {
    branch(cfg, false, Complex64::new(1.0, 0.0))
}

/// Amplitudes `w * gamma (-G)^i G^j sqrt(i+1)` on `|i+1, j, j, i>` for the
/// horizontal branch, and `w * gamma (-G)^i G^j sqrt(j+1)` on
/// `|i, j+1, j, i>` for the vertical one, with `i + j <= cutoff`.
fn branch(cfg: &AmplifierConfig, horizontal: bool, weight: Complex64) -> FockState4 {
    let mut out = FockState4::new(cfg.cutoff, cap(cfg));
    if weight == Complex64::new(0.0, 0.0) {
        return out;
    }
    let g = &cfg.gain;
    let n = cfg.cutoff as u32;
    for i in 0..=n {
        let ai = g.gamma * (-g.tanh).powi(i as i32);
        for j in 0..=(n - i) {
            let aij = ai * g.tanh.powi(j as i32);
            let (idx, stim) = if horizontal {
                (FockIndex4::new(i + 1, j, j, i), (i + 1) as f64)
            } else {
                (FockIndex4::new(i, j + 1, j, i), (j + 1) as f64)
            };
            out.add(idx, weight * aij * stim.sqrt());
        }
    }
    out
}

/// Output state for the injected qubit `q`.
pub fn amplify(q: &Qubit, cfg: &AmplifierConfig) -> FockState4 {
    let [a, b] = q.amplitudes();
    branch(cfg, true, a).sum(&branch(cfg, false, b))
}

/// Output for vacuum input: `C^-2 (-G)^i G^j` on `|i, j, j, i>`.
pub fn vacuum_output(cfg: &AmplifierConfig) -> FockState4 {
    let g = &cfg.gain;
    let mut out = FockState4::new(cfg.cutoff, cap(cfg));
    let norm = g.c.powi(-2);
    let n = cfg.cutoff as u32;
    for i in 0..=n {
        for j in 0..=(n - i) {
            let amp = norm * (-g.tanh).powi(i as i32) * g.tanh.powi(j as i32);
            out.add(FockIndex4::new(i, j, j, i), Complex64::new(amp, 0.0));
        }
    }
    out
}

/// Pair-creation terms of the generator: `(a, b, sign)` contributes
/// `sign * (a^dagger b^dagger - a b)`.
const COUPLINGS: [(Mode, Mode, f64); 2] = [(Mode::V1, Mode::H2, 1.0), (Mode::H1, Mode::V2, -1.0)];

/// Real antisymmetric generator in compressed-row form over a closed basis.
struct Generator {
    basis: Vec<FockIndex4>,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Generator {
    /// Breadth-first closure of `seeds` under the couplings, keeping kets
    /// with at most `max_photons` photons in total.
    fn build(seeds: &[FockIndex4], max_photons: u32) -> Self {
        let mut position: HashMap<FockIndex4, usize> = HashMap::new();
        let mut basis = Vec::new();
        for s in seeds {
            if !position.contains_key(s) {
                position.insert(*s, basis.len());
                basis.push(*s);
            }
        }
        let mut row_start = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut k = 0;
        while k < basis.len() {
            let idx = basis[k];
            let mut row: Vec<(FockIndex4, f64)> = Vec::with_capacity(4);
            for (a, b, sign) in COUPLINGS {
                let (na, nb) = (idx.get(a), idx.get(b));
                if idx.total() + 2 <= max_photons {
                    let amp = (((na + 1) * (nb + 1)) as f64).sqrt();
                    row.push((idx.with(a, na + 1).with(b, nb + 1), sign * amp));
                }
                if na > 0 && nb > 0 {
                    let amp = ((na * nb) as f64).sqrt();
                    row.push((idx.with(a, na - 1).with(b, nb - 1), -sign * amp));
                }
            }
            for (target, v) in row {
                let col = *position.entry(target).or_insert_with(|| {
                    basis.push(target);
                    basis.len() - 1
                });
                cols.push(col);
                vals.push(v);
            }
            row_start.push(cols.len());
            k += 1;
        }
        // Entries are stored per source ket; transpose into rows of K.
        let n = basis.len();
        let mut counts = vec![0usize; n + 1];
        for &c in &cols {
            counts[c + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut t_cols = vec![0usize; cols.len()];
        let mut t_vals = vec![0.0; cols.len()];
        let mut fill = counts.clone();
        for src in 0..n {
            for e in row_start[src]..row_start[src + 1] {
                let dst = cols[e];
                t_cols[fill[dst]] = src;
                t_vals[fill[dst]] = vals[e];
                fill[dst] += 1;
            }
        }
        Generator {
            basis,
            row_start: counts,
            cols: t_cols,
            vals: t_vals,
        }
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in self.row_start[r]..self.row_start[r + 1] {
                acc += x[self.cols[e]] * self.vals[e];
            }
            *o = acc;
        }
    }

    /// Gershgorin bound on the spectral radius.
    fn norm_bound(&self) -> f64 {
        (0..self.basis.len())
            .map(|r| {
                self.vals[self.row_start[r]..self.row_start[r + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// `exp(t K) x` by `steps` Taylor-series steps.
    fn evolve(&self, x: &[Complex64], t: f64, steps: usize) -> Vec<Complex64> {
        let h = t / steps as f64;
        let mut psi = x.to_vec();
        let mut term = vec![Complex64::new(0.0, 0.0); psi.len()];
        let mut next = term.clone();
        for _ in 0..steps {
            term.copy_from_slice(&psi);
            let scale = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for k in 1..=200 {
                self.apply(&term, &mut next);
                let f = h / k as f64;
                let mut size = 0.0;
                for (p, (tn, nx)) in psi.iter_mut().zip(term.iter_mut().zip(next.iter())) {
                    *tn = nx * f;
                    *p += *tn;
                    size += tn.norm_sqr();
                }
                if size.sqrt() <= 1e-18 * scale {
                    break;
                }
            }
        }
        psi
    }
}

/// Propagation tolerance: step doubling must agree to this infidelity.
pub const CONVERGENCE_TOL: f64 = 1e-10;

/// Step count that keeps each Taylor step within unit generator norm.
pub fn recommended_steps(cfg: &AmplifierConfig) -> usize {
    let max_photons = 2 * (cfg.cutoff + PROPAGATOR_PAD) as u32 + 1;
    // Every ket couples to at most four neighbours with weight <= max_photons / 2 + 1.
    let bound = 4.0 * (max_photons as f64 / 2.0 + 1.0);
    ((cfg.gain.g * bound).ceil() as usize).max(1)
}

fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    let overlap: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    overlap.norm_sqr() / (na * nb)
}

/// Numerically integrates the amplifier interaction from `q` on `k1` and
/// vacuum on `k2` for an effective time equal to the gain.
///
/// The run is repeated with twice the step count; disagreement beyond
/// [`CONVERGENCE_TOL`] is reported as [`QiopaError::NonConvergence`].
pub fn propagate_hamiltonian(q: &Qubit, cfg: &AmplifierConfig, steps: usize) -> Result<FockState4> {
    let steps = steps.max(1);
    let pairs = cfg.cutoff + PROPAGATOR_PAD;
    let max_photons = 2 * pairs as u32 + 1;
    let seeds = [FockIndex4::new(1, 0, 0, 0), FockIndex4::new(0, 1, 0, 0)];
    let gen = Generator::build(&seeds, max_photons);
    let [a, b] = q.amplitudes();
    let mut x = vec![Complex64::new(0.0, 0.0); gen.basis.len()];
    x[0] = a;
    x[1] = b;

    let t = cfg.gain.g;
    let coarse = gen.evolve(&x, t, steps);
    let fine = gen.evolve(&x, t, 2 * steps);
    let infidelity = 1.0 - fidelity(&coarse, &fine);
    if !(infidelity.abs() <= CONVERGENCE_TOL) {
        return Err(QiopaError::NonConvergence {
            steps,
            doubled: 2 * steps,
            infidelity,
        });
    }
    let mut amps = BTreeMap::new();
    for (idx, amp) in gen.basis.iter().zip(fine) {
        if amp.norm() >= crate::fock::DEFAULT_PRUNE {
            amps.insert(*idx, amp);
        }
    }
    Ok(FockState4::from_parts(amps, cfg.cutoff, pairs as u32 + 1))
}

/// Spectral-radius bound of the truncated generator, exposed for diagnostics.
pub fn generator_norm_bound(cfg: &AmplifierConfig) -> f64 {
    let max_photons = 2 * (cfg.cutoff + PROPAGATOR_PAD) as u32 + 1;
    let seeds = [FockIndex4::new(1, 0, 0, 0), FockIndex4::new(0, 1, 0, 0)];
    Generator::build(&seeds, max_photons).norm_bound()
}
