//! Reduced density matrices of the two output modes, their entropies, and
//! the photon-pair distribution.
//!
//! Reduced states are block diagonal in the photon number of the kept mode,
//! so they are stored as one Hermitian matrix per photon-number sector. A
//! sector with `t` photons is written on the basis `|m>_h |t-m>_v`,
//! `m = 0..=t`. For the cloning mode the sector holding `n` amplified pairs
//! has `t = n + 1`; for the anticloning mode `t = n`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QiopaError, Result};
use crate::fock::{inner_product, FockIndex4, FockState4, GainParams, ModePair};
use crate::opa::AmplifierConfig;
use crate::polarization::Qubit;

/// Eigenvalues below this are treated as zero in the entropy sum.
pub const ENTROPY_FLOOR: f64 = 1e-15;
/// Eigenvalues below minus this are reported as a numerical failure.
pub const NEGATIVITY_TOL: f64 = 1e-9;

/// `sum_{n >= from} p(n)` in closed form.
///
/// Uses `sum_{m>=0} C(m+k+2, 2) x^m` split as
/// `C(k+2,2)/(1-x) + (k+2) x/(1-x)^2 + x^2/(1-x)^3`, with `1/(1-x) = C^2`.
pub fn pair_tail(gain: &GainParams, from: usize) -> f64 {
    let x = gain.ratio();
    let c2 = gain.c * gain.c;
    let k = from as f64;
    let head = x.powi(from as i32) * gain.gamma * gain.gamma;
    head * ((k + 1.0) * (k + 2.0) / 2.0 * c2 + (k + 2.0) * x * c2 * c2 + x * x * c2 * c2 * c2)
}

/// One photon-number block of a reduced density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    /// Photons in the kept mode pair.
    pub photons: usize,
    pub weight: f64,
    /// Order `photons + 1`, indexed by the horizontal occupation.
    pub matrix: DMatrix<Complex64>,
}

impl Sector {
    /// `weight * matrix`.
    pub fn scaled(&self) -> DMatrix<Complex64> {
        self.matrix.map(|z| z * self.weight)
    }

    pub fn trace(&self) -> f64 {
        self.weight * self.matrix.diagonal().iter().map(|z| z.re).sum::<f64>()
    }

    /// Eigenvalues of `weight * matrix`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = self.scaled();
        let herm = (&m + m.adjoint()).map(|z| z * 0.5);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.matrix;
        (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Reduced density matrix of one output mode, stored by sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorDensity {
    pub mode: ModePair,
    pub sectors: Vec<Sector>,
}

impl SectorDensity {
    pub fn sector(&self, photons: usize) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.photons == photons)
    }

    pub fn trace(&self) -> f64 {
        self.sectors.iter().map(Sector::trace).sum()
    }

    /// `rho[(photons, row, col)]` including the sector weight.
    pub fn element(&self, photons: usize, row: usize, col: usize) -> Complex64 {
        self.sector(photons)
            .and_then(|s| s.matrix.get((row, col)).map(|z| z * s.weight))
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Largest elementwise difference, counting missing sectors as zero.
    pub fn max_abs_diff(&self, other: &SectorDensity) -> Result<f64> {
        if self.mode != other.mode {
            return Err(QiopaError::ShapeMismatch("densities of different modes".into()));
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.paired(other) {
            let d = match (a, b) {
                (Some(a), Some(b)) => (a.scaled() - b.scaled()).iter().map(|z| z.norm()).fold(0.0, f64::max),
                (Some(s), None) | (None, Some(s)) => s.scaled().iter().map(|z| z.norm()).fold(0.0, f64::max),
                (None, None) => 0.0,
            };
            worst = worst.max(d);
        }
        Ok(worst)
    }

    fn paired<'a>(&'a self, other: &'a SectorDensity) -> Vec<(Option<&'a Sector>, Option<&'a Sector>)> {
        let mut keys: Vec<usize> = self
            .sectors
            .iter()
            .chain(other.sectors.iter())
            .map(|s| s.photons)
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter().map(|k| (self.sector(k), other.sector(k))).collect()
    }

    /// Eigenvalues of every sector, in sector order.
    pub fn spectrum(&self) -> Vec<f64> {
        self.sectors.iter().flat_map(Sector::eigenvalues).collect()
    }
}

/// Assembles overlapping 2x2 blocks into an order-`size` matrix; block `k`
/// acts on rows/columns `(k, k+1)`.
fn accumulate_blocks(size: usize, blocks: impl Iterator<Item = (usize, [[Complex64; 2]; 2])>) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(size, size, Complex64::new(0.0, 0.0));
    for (k, b) in blocks {
        for r in 0..2 {
            for c in 0..2 {
                if k + r < size && k + c < size {
                    m[(k + r, k + c)] += b[r][c];
                }
            }
        }
    }
    m
}

/// Reduced state of the cloning mode from the per-pair 2x2 block expansion.
///
/// Sector `n` carries weight `gamma^2 G^{2n}` and, for `i = 0..=n`, the block
/// `[[|b|^2 (n-i+1), a* b sqrt((i+1)(n-i+1))], [a b* ..., |a|^2 (i+1)]]` on
/// `{|i>_h|n-i+1>_v, |i+1>_h|n-i>_v}`.
pub fn rho1_closed_form(q: &Qubit, cfg: &AmplifierConfig) -> SectorDensity {
    let [a, b] = q.amplitudes();
    let (aa, bb) = (a.norm_sqr(), b.norm_sqr());
    let cross = a.conj() * b;
    let g = &cfg.gain;
    let sectors = (0..=cfg.cutoff)
        .map(|n| {
            let blocks = (0..=n).map(|i| {
                let (up, down) = ((n - i + 1) as f64, (i + 1) as f64);
                let off = cross * (up * down).sqrt();
                let diag = |v: f64| Complex64::new(v, 0.0);
                (i, [[diag(bb * up), off], [off.conj(), diag(aa * down)]])
            });
            Sector {
                photons: n + 1,
                weight: g.gamma * g.gamma * g.ratio().powi(n as i32),
                matrix: accumulate_blocks(n + 2, blocks),
            }
        })
        .collect();
    SectorDensity {
        mode: ModePair::First,
        sectors,
    }
}

/// Reduced state of the anticloning mode from its 2x2 block expansion.
///
/// Sector `n` carries weight `gamma^2 G^{2n}` and, for `i = 0..=n+1`, the
/// block `[[|b|^2 (n-i+1), -a* b sqrt((n-i+1) i)], [-a b* ..., |a|^2 i]]` on
/// `{|n-i>_h|i>_v, |n-i+1>_h|i-1>_v}`. Kets with a negative occupation only
/// appear with a vanishing coefficient and are skipped.
pub fn rho2_closed_form(q: &Qubit, cfg: &AmplifierConfig) -> SectorDensity {
    let [a, b] = q.amplitudes();
    let (aa, bb) = (a.norm_sqr(), b.norm_sqr());
    let cross = a.conj() * b;
    let g = &cfg.gain;
    let sectors = (0..=cfg.cutoff)
        .map(|n| {
            let size = n + 1;
            let mut m = DMatrix::from_element(size, size, Complex64::new(0.0, 0.0));
            for i in 0..=(n + 1) {
                // Matrix index is the horizontal occupation.
                let first = if i <= n { Some(n - i) } else { None };
                let second = if i >= 1 { Some(n + 1 - i) } else { None };
                let up = (n + 1 - i) as f64;
                let down = i as f64;
                let off = -cross * (up * down).sqrt();
                let entries = [
                    (first, first, Complex64::new(bb * up, 0.0)),
                    (first, second, off),
                    (second, first, off.conj()),
                    (second, second, Complex64::new(aa * down, 0.0)),
                ];
                for (r, c, v) in entries {
                    if let (Some(r), Some(c)) = (r, c) {
                        m[(r, c)] += v;
                    }
                }
            }
            Sector {
                photons: n,
                weight: g.gamma * g.gamma * g.ratio().powi(n as i32),
                matrix: m,
            }
        })
        .collect();
    SectorDensity {
        mode: ModePair::Second,
        sectors,
    }
}

/// Brute-force reduced density matrix of `keep`, tracing out the other mode.
///
/// Fails with [`QiopaError::NotBlockDiagonal`] if a traced-out configuration
/// is correlated with kept kets of different photon number.
pub fn partial_trace(state: &FockState4, keep: ModePair) -> Result<SectorDensity> {
    let (kh, kv) = keep.modes();
    let (th, tv) = keep.other().modes();
    // traced occupation -> list of (kept h, kept v, amplitude)
    let mut groups: BTreeMap<(u32, u32), Vec<(u32, u32, Complex64)>> = BTreeMap::new();
    for (idx, amp) in state.iter() {
        groups
            .entry((idx.get(th), idx.get(tv)))
            .or_default()
            .push((idx.get(kh), idx.get(kv), *amp));
    }
    let mut sectors: BTreeMap<usize, DMatrix<Complex64>> = BTreeMap::new();
    for kets in groups.values() {
        let t = (kets[0].0 + kets[0].1) as usize;
        if kets.iter().any(|(h, v, _)| (h + v) as usize != t) {
            return Err(QiopaError::NotBlockDiagonal);
        }
        let m = sectors
            .entry(t)
            .or_insert_with(|| DMatrix::from_element(t + 1, t + 1, Complex64::new(0.0, 0.0)));
        for (hr, _, ar) in kets {
            for (hc, _, ac) in kets {
                m[(*hr as usize, *hc as usize)] += ar * ac.conj();
            }
        }
    }
    Ok(SectorDensity {
        mode: keep,
        sectors: sectors
            .into_iter()
            .map(|(photons, matrix)| Sector {
                photons,
                weight: 1.0,
                matrix,
            })
            .collect(),
    })
}

/// Von Neumann entropy `-tr(rho log2 rho)` in bits.
pub fn entropy(rho: &SectorDensity) -> Result<f64> {
    let mut s = 0.0;
    for sector in &rho.sectors {
        for lambda in sector.eigenvalues() {
            if lambda < -NEGATIVITY_TOL {
                return Err(QiopaError::NegativeEigenvalue(lambda));
            }
            if lambda > ENTROPY_FLOOR {
                s -= lambda * lambda.log2();
            }
        }
    }
    Ok(s.max(0.0))
}

/// Hilbert-Schmidt distance `tr[(a - b)^2]` between two reduced densities.
pub fn hs_distance(a: &SectorDensity, b: &SectorDensity) -> Result<f64> {
    if a.mode != b.mode {
        return Err(QiopaError::ShapeMismatch("densities of different modes".into()));
    }
    let mut d = 0.0;
    for (x, y) in a.paired(b) {
        let diff = match (x, y) {
            (Some(x), Some(y)) => x.scaled() - y.scaled(),
            (Some(s), None) => s.scaled(),
            (None, Some(s)) => -s.scaled(),
            (None, None) => continue,
        };
        // tr(D^2) for Hermitian D is the squared Frobenius norm.
        d += diff.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok(d)
}

/// Hilbert-Schmidt distance between the pure-state density operators
/// `|a><a| / <a|a>` and `|b><b| / <b|b>`.
pub fn hs_distance_pure(a: &FockState4, b: &FockState4) -> Result<f64> {
    let (na, nb) = (a.norm_sqr(), b.norm_sqr());
    if na == 0.0 || nb == 0.0 {
        return Err(QiopaError::ShapeMismatch("zero state has no projector".into()));
    }
    let purity = |s: &FockState4, n: f64| inner_product(s, s).norm_sqr() / (n * n);
    let overlap = inner_product(a, b).norm_sqr() / (na * nb);
    Ok(purity(a, na) + purity(b, nb) - 2.0 * overlap)
}

/// Probability `p(n)` of `n` amplified pairs, `n = 0..=cutoff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistribution {
    pub probabilities: Vec<f64>,
    pub gain: GainParams,
}

impl PairDistribution {
    pub fn cutoff(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().rev().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .rev()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn cumulative(&self) -> Vec<f64> {
        self.probabilities
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }
}

/// `p(n) = gamma^2 G^{2n} (n+1)(n+2)/2`, the trace of sector `n`.
pub fn pair_distribution(cfg: &AmplifierConfig) -> PairDistribution {
    let g = &cfg.gain;
    let w = g.gamma * g.gamma;
    let x = g.ratio();
    let probabilities = (0..=cfg.cutoff)
        .map(|n| w * x.powi(n as i32) * ((n + 1) * (n + 2)) as f64 / 2.0)
        .collect();
    PairDistribution {
        probabilities,
        gain: cfg.gain,
    }
}

/// `sum_{k >= threshold} p(k)`, with the part beyond the stored cutoff added
/// in closed form.
pub fn tail_probability(dist: &PairDistribution, threshold: usize) -> f64 {
    if threshold > dist.cutoff() {
        return pair_tail(&dist.gain, threshold);
    }
    let stored: f64 = dist.probabilities[threshold..].iter().rev().sum();
    stored + pair_tail(&dist.gain, dist.cutoff() + 1)
}

/// The kets of sector `photons` of a reduced density, for diagnostics.
pub fn sector_basis(mode: ModePair, photons: usize) -> Vec<FockIndex4> {
    let t = photons as u32;
    (0..=t)
        .map(|m| match mode {
            ModePair::First => FockIndex4::new(m, t - m, 0, 0),
            ModePair::Second => FockIndex4::new(0, 0, m, t - m),
        })
        .collect()
}
