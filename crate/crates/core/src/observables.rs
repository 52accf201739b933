//! First-order correlation functions on the anticloning mode.
//!
//! The two detected fields are the diagonal combinations of the `k2`
//! polarizations, `c1 = (b_h + b_v)/sqrt2` and `c2 = (b_h - b_v)/sqrt2`.
//! With the singlet sign convention of the amplifier, `c2` carries the
//! constructive fringe `nbar + nbar/2 (1 + 2 alpha beta cos phi)` and is
//! reported as the `H` channel; `c1` is the `V` channel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QiopaError, Result};
use crate::fock::{diagonal_analyzer, number_expectation, rotate_mode_pair, FockState4, GainParams, Mode, ModePair};
use crate::opa::{amplify, AmplifierConfig};
use crate::polarization::{BlochPath, Qubit};

/// Mean photon numbers of the two detected channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G1Pair {
    pub g2h: f64,
    pub g2v: f64,
    pub nbar: f64,
}

impl G1Pair {
    /// `g2h - g2v`
    pub fn delta(&self) -> f64 {
        self.g2h - self.g2v
    }

    pub fn sum(&self) -> f64 {
        self.g2h + self.g2v
    }
}

/// `G_H = nbar + nbar/2 (1 + 2ab cos phi)`, `G_V = nbar + nbar/2 (1 - 2ab cos phi)`.
pub fn g1_closed_form(q: &Qubit, gain: &GainParams) -> G1Pair {
    let n = gain.nbar;
    let fringe = 2.0 * q.alpha * q.beta * q.phi.cos();
    G1Pair {
        g2h: n + 0.5 * n * (1.0 + fringe),
        g2v: n + 0.5 * n * (1.0 - fringe),
        nbar: n,
    }
}

/// Detected-channel means of an arbitrary state, by rotating the `k2` pair
/// onto the analyzer modes and summing occupations.
pub fn detected_means(state: &FockState4, nbar: f64) -> Result<G1Pair> {
    let rotated = rotate_mode_pair(state, ModePair::Second, &diagonal_analyzer())?;
    Ok(G1Pair {
        // c1 lands on the first slot of the pair, c2 on the second.
        g2h: number_expectation(&rotated, Mode::V2),
        g2v: number_expectation(&rotated, Mode::H2),
        nbar,
    })
}

/// Brute-force `G1` from the amplified state.
pub fn g1_oracle(q: &Qubit, cfg: &AmplifierConfig) -> Result<G1Pair> {
    detected_means(&amplify(q, cfg), cfg.gain.nbar)
}

/// Fringe visibility `2 alpha beta / 3`, evaluated as
/// `(1 - (alpha - beta)^2) / 3` so that `alpha = beta` gives exactly `1/3`.
pub fn visibility(q: &Qubit) -> f64 {
    (1.0 - (q.alpha - q.beta).powi(2)) / 3.0
}

/// `G_H` over the vacuum-input level `nbar`.
pub fn signal_to_noise(q: &Qubit, gain: &GainParams) -> Result<f64> {
    if gain.nbar == 0.0 {
        return Err(QiopaError::UndefinedRatio);
    }
    Ok(g1_closed_form(q, gain).g2h / gain.nbar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeRow {
    pub angle: f64,
    pub delta: f64,
    pub g2h: f64,
    pub g2v: f64,
}

/// Analytic fringe pattern along a Bloch path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeTable {
    pub gain: GainParams,
    pub path: String,
    pub rows: Vec<FringeRow>,
}

impl FringeTable {
    /// `(max - min)/(max + min)` of the `H` channel over the path.
    pub fn visibility(&self) -> f64 {
        let (lo, hi) = self
            .rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.g2h), hi.max(r.g2h)));
        if hi + lo == 0.0 {
            0.0
        } else {
            (hi - lo) / (hi + lo)
        }
    }
}

pub fn fringe_sweep(path: &BlochPath, gain: &GainParams) -> FringeTable {
    let qubits = path.qubits();
    let rows = path
        .angles
        .par_iter()
        .zip(qubits.par_iter())
        .map(|(&angle, q)| {
            let g = g1_closed_form(q, gain);
            FringeRow {
                angle,
                delta: g.delta(),
                g2h: g.g2h,
                g2v: g.g2v,
            }
        })
        .collect();
    FringeTable {
        gain: *gain,
        path: path.describe(),
        rows,
    }
}
