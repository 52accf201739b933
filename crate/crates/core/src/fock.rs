//! Truncated four-mode Fock space.
//!
//! The four bosonic modes are the horizontal and vertical polarizations of the
//! cloning mode `k1` and the anticloning mode `k2`. States are stored sparsely,
//! keyed by occupation tuple, because the amplifier output only populates a
//! two-parameter family of the full index space.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QiopaError, Result};

/// Amplitudes with magnitude below this are not stored.
pub const DEFAULT_PRUNE: f64 = 1e-15;

/// Tolerance used when checking that a 2x2 matrix is unitary.
pub const UNITARY_TOL: f64 = 1e-12;

/// One of the four field modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    H1,
    V1,
    H2,
    V2,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::H1, Mode::V1, Mode::H2, Mode::V2];

    fn slot(self) -> usize {
        match self {
            Mode::H1 => 0,
            Mode::V1 => 1,
            Mode::H2 => 2,
            Mode::V2 => 3,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::H1 => "1h",
            Mode::V1 => "1v",
            Mode::H2 => "2h",
            Mode::V2 => "2v",
        };
        f.write_str(s)
    }
}

/// A polarization pair belonging to one spatial mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModePair {
    /// Cloning mode `k1`: (1h, 1v).
    First,
    /// Anticloning mode `k2`: (2h, 2v).
    Second,
}

impl ModePair {
    pub fn modes(self) -> (Mode, Mode) {
        match self {
            ModePair::First => (Mode::H1, Mode::V1),
            ModePair::Second => (Mode::H2, Mode::V2),
        }
    }

    pub fn other(self) -> ModePair {
        match self {
            ModePair::First => ModePair::Second,
            ModePair::Second => ModePair::First,
        }
    }
}

/// Occupation numbers `(n1h, n1v, n2h, n2v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct FockIndex4(pub [u32; 4]);

impl FockIndex4 {
    pub const VACUUM: FockIndex4 = FockIndex4([0; 4]);

    pub fn new(n1h: u32, n1v: u32, n2h: u32, n2v: u32) -> Self {
        FockIndex4([n1h, n1v, n2h, n2v])
    }

    pub fn get(&self, mode: Mode) -> u32 {
        self.0[mode.slot()]
    }

    pub fn with(mut self, mode: Mode, value: u32) -> Self {
        self.0[mode.slot()] = value;
        self
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Occupations of the two polarizations of `pair`.
    pub fn pair(&self, pair: ModePair) -> (u32, u32) {
        let (h, v) = pair.modes();
        (self.get(h), self.get(v))
    }

    pub fn max_occupation(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for FockIndex4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "|{a},{b},{c},{d}>")
    }
}

/// Amplifier gain and the constants derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainParams {
    pub g: f64,
    /// `cosh g`
    pub c: f64,
    /// `tanh g`
    pub tanh: f64,
    /// `cosh(g)^-3`, the overall amplitude prefactor of the injected output.
    pub gamma: f64,
    /// `sinh(g)^2`, mean photon number per squeezed mode.
    pub nbar: f64,
}

impl GainParams {
    pub fn new(g: f64) -> Result<Self> {
        if !g.is_finite() || g < 0.0 {
            return Err(QiopaError::InvalidGain(g));
        }
        let c = g.cosh();
        let s = g.sinh();
        Ok(GainParams {
            g,
            c,
            tanh: g.tanh(),
            gamma: c.powi(-3),
            nbar: s * s,
        })
    }

    /// `tanh(g)^2`, the ratio between successive pair-number weights.
    pub fn ratio(&self) -> f64 {
        self.tanh * self.tanh
    }
}

/// Convenience wrapper matching the operation name used across the crate.
pub fn make_gain(g: f64) -> Result<GainParams> {
    GainParams::new(g)
}

/// Sparse complex amplitudes over four-mode occupation tuples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FockState4 {
    amplitudes: BTreeMap<FockIndex4, Complex64>,
    /// Largest pair number retained when the state was generated.
    cutoff: usize,
    /// Largest occupation any single mode may hold.
    mode_cap: u32,
    prune: f64,
}

impl FockState4 {
    pub fn new(cutoff: usize, mode_cap: u32) -> Self {
        FockState4 {
            amplitudes: BTreeMap::new(),
            cutoff,
            mode_cap,
            prune: DEFAULT_PRUNE,
        }
    }

    pub fn with_prune(mut self, prune: f64) -> Self {
        self.prune = prune;
        self
    }

    /// Single basis ket with unit amplitude.
    pub fn basis(index: FockIndex4, cutoff: usize) -> Self {
        let mut s = FockState4::new(cutoff, index.max_occupation().max(cutoff as u32 + 1));
        s.amplitudes.insert(index, Complex64::new(1.0, 0.0));
        s
    }

    pub fn vacuum(cutoff: usize) -> Self {
        Self::basis(FockIndex4::VACUUM, cutoff)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn mode_cap(&self) -> u32 {
        self.mode_cap
    }

    pub fn prune_threshold(&self) -> f64 {
        self.prune
    }

    /// Adds `amp` to the amplitude of `index`, dropping the entry when the
    /// result falls below the prune threshold.
    ///
    /// # Panics
    /// If any occupation of `index` exceeds the mode cap.
    pub fn add(&mut self, index: FockIndex4, amp: Complex64) {
        assert!(
            index.max_occupation() <= self.mode_cap,
            "{index} exceeds mode cap {}",
            self.mode_cap
        );
        let entry = self.amplitudes.entry(index).or_insert(Complex64::new(0.0, 0.0));
        *entry += amp;
        if entry.norm() < self.prune {
            self.amplitudes.remove(&index);
        }
    }

    pub fn amplitude(&self, index: &FockIndex4) -> Complex64 {
        self.amplitudes
            .get(index)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockIndex4, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: Complex64) -> FockState4 {
        let mut out = FockState4 {
            amplitudes: BTreeMap::new(),
            ..*self
        };
        for (idx, amp) in &self.amplitudes {
            out.add(*idx, amp * factor);
        }
        out
    }

    /// `self + other`, keeping the larger cutoff and cap.
    pub fn sum(&self, other: &FockState4) -> FockState4 {
        let mut out = FockState4 {
            amplitudes: self.amplitudes.clone(),
            cutoff: self.cutoff.max(other.cutoff),
            mode_cap: self.mode_cap.max(other.mode_cap),
            prune: self.prune,
        };
        for (idx, amp) in &other.amplitudes {
            out.add(*idx, *amp);
        }
        out
    }

    pub(crate) fn from_parts(
        amplitudes: BTreeMap<FockIndex4, Complex64>,
        cutoff: usize,
        mode_cap: u32,
    ) -> Self {
        FockState4 {
            amplitudes,
            cutoff,
            mode_cap,
            prune: DEFAULT_PRUNE,
        }
    }
}

/// `<a|b>`, antilinear in the first argument.
pub fn inner_product(a: &FockState4, b: &FockState4) -> Complex64 {
    // Iterate over the smaller support.
    if a.len() <= b.len() {
        a.iter()
            .filter_map(|(idx, amp)| b.amplitudes.get(idx).map(|bv| amp.conj() * bv))
            .sum()
    } else {
        b.iter()
            .filter_map(|(idx, bv)| a.amplitudes.get(idx).map(|amp| amp.conj() * bv))
            .sum()
    }
}

/// Expectation value of the number operator of `mode`.
pub fn number_expectation(state: &FockState4, mode: Mode) -> f64 {
    state
        .iter()
        .map(|(idx, amp)| amp.norm_sqr() * idx.get(mode) as f64)
        .sum()
}

/// A 2x2 complex matrix acting on the creation operators of a mode pair.
pub type Matrix2 = [[Complex64; 2]; 2];

/// Largest deviation of `u^dagger u` from the identity.
pub fn unitarity_defect(u: &Matrix2) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..2 {
                acc += u[k][r].conj() * u[k][c];
            }
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

/// Transfer matrix of a mode-pair rotation restricted to `total` photons.
///
/// Column `m` holds the image of `|m, total-m>` expanded on `|p, total-p>`.
/// Built by repeated application of the transformed creation operators, which
/// avoids the cancellation-prone closed-form sum.
fn transfer_matrices(u: &Matrix2, max_total: u32) -> Vec<Vec<Vec<Complex64>>> {
    let zero = Complex64::new(0.0, 0.0);
    let mut out: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(max_total as usize + 1);
    out.push(vec![vec![Complex64::new(1.0, 0.0)]]);
    // a_h^dagger -> u00 c_h^dagger + u10 c_v^dagger
    // a_v^dagger -> u01 c_h^dagger + u11 c_v^dagger
    let raise = |prev: &Vec<Complex64>, col: usize, n: usize| -> Vec<Complex64> {
        let (uh, uv) = (u[0][col], u[1][col]);
        let mut next = vec![zero; n + 1];
        for (p, &d) in prev.iter().enumerate() {
            if d == zero {
                continue;
            }
            next[p + 1] += d * uh * ((p + 1) as f64).sqrt();
            next[p] += d * uv * ((n - p) as f64).sqrt();
        }
        next
    };
    for n in 1..=max_total as usize {
        let prev = &out[n - 1];
        // |m, n-m> = (sqrt(m) a_h^dagger |m-1, n-m> + sqrt(n-m) a_v^dagger |m, n-m-1>) / n
        let cols = (0..=n)
            .map(|m| {
                let mut col = vec![zero; n + 1];
                if m > 0 {
                    let w = (m as f64).sqrt() / n as f64;
                    for (x, y) in col.iter_mut().zip(raise(&prev[m - 1], 0, n)) {
                        *x += y * w;
                    }
                }
                if m < n {
                    let w = ((n - m) as f64).sqrt() / n as f64;
                    for (x, y) in col.iter_mut().zip(raise(&prev[m], 1, n)) {
                        *x += y * w;
                    }
                }
                col
            })
            .collect();
        out.push(cols);
    }
    out
}

/// Applies a passive linear-optics transformation to one mode pair.
///
/// The creation operators transform as `a_k^dagger -> sum_l u[l][k] c_l^dagger`,
/// so that the output's number expectations in the new modes are those of
/// `c_l = sum_k u[l][k] a_k`.
pub fn rotate_mode_pair(state: &FockState4, pair: ModePair, u: &Matrix2) -> Result<FockState4> {
    let defect = unitarity_defect(u);
    if defect > UNITARY_TOL {
        return Err(QiopaError::NonUnitary(defect));
    }
    let (mh, mv) = pair.modes();
    let max_total = state
        .iter()
        .map(|(idx, _)| idx.get(mh) + idx.get(mv))
        .max()
        .unwrap_or(0);
    let transfer = transfer_matrices(u, max_total);
    let mut amps: BTreeMap<FockIndex4, Complex64> = BTreeMap::new();
    for (idx, amp) in state.iter() {
        let (h, v) = (idx.get(mh), idx.get(mv));
        let total = h + v;
        let column = &transfer[total as usize][h as usize];
        for (p, coeff) in column.iter().enumerate() {
            if coeff.norm_sqr() == 0.0 {
                continue;
            }
            let target = idx.with(mh, p as u32).with(mv, total - p as u32);
            *amps.entry(target).or_insert(Complex64::new(0.0, 0.0)) += amp * coeff;
        }
    }
    amps.retain(|_, a| a.norm() >= state.prune);
    let cap = state.mode_cap.max(max_total);
    Ok(FockState4 {
        amplitudes: amps,
        cutoff: state.cutoff,
        mode_cap: cap,
        prune: state.prune,
    })
}

/// Symmetric 50/50 analyzer `c1 = (h+v)/sqrt2`, `c2 = (h-v)/sqrt2`.
pub fn diagonal_analyzer() -> Matrix2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_gain_is_identity_case() {
        let p = make_gain(0.0).unwrap();
        assert_eq!(p.c, 1.0);
        assert_eq!(p.tanh, 0.0);
        assert_eq!(p.gamma, 1.0);
        assert_eq!(p.nbar, 0.0);
    }

    #[test]
    fn rejects_bad_gain() {
        assert!(make_gain(-0.1).is_err());
        assert!(make_gain(f64::NAN).is_err());
        assert!(make_gain(f64::INFINITY).is_err());
    }

    #[test]
    fn gain_identity_within_few_ulp() {
        for g in [0.0, 0.07, 0.3, 0.5, 1.13, 2.0] {
            let p = make_gain(g).unwrap();
            let id = p.c * p.c * (1.0 - p.tanh * p.tanh);
            assert!((id - 1.0).abs() <= 4.0 * f64::EPSILON, "g={g}: {id}");
            assert!(p.gamma > 0.0 && p.gamma <= 1.0);
            assert!(p.tanh >= 0.0 && p.tanh < 1.0);
        }
    }

    #[test]
    fn vacuum_expectations() {
        let v = FockState4::vacuum(4);
        for m in Mode::ALL {
            assert_eq!(number_expectation(&v, m), 0.0);
        }
        assert_eq!(inner_product(&v, &v), c(1.0, 0.0));
    }

    #[test]
    fn identity_rotation_leaves_state() {
        let mut s = FockState4::new(4, 5);
        s.add(FockIndex4::new(1, 2, 3, 0), c(0.6, 0.0));
        s.add(FockIndex4::new(0, 0, 2, 2), c(0.0, 0.8));
        let id = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        let r = rotate_mode_pair(&s, ModePair::Second, &id).unwrap();
        assert_eq!(r.len(), s.len());
        for (idx, amp) in s.iter() {
            assert!((r.amplitude(idx) - amp).norm() < 1e-15);
        }
    }

    #[test]
    fn single_photon_beam_splitter() {
        let s = FockState4::basis(FockIndex4::new(0, 0, 1, 0), 1);
        let r = rotate_mode_pair(&s, ModePair::Second, &diagonal_analyzer()).unwrap();
        let h = r.amplitude(&FockIndex4::new(0, 0, 1, 0));
        let v = r.amplitude(&FockIndex4::new(0, 0, 0, 1));
        assert_relative_eq!(h.re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(v.re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn hong_ou_mandel_bunching() {
        // |1,1> through a balanced splitter has no |1,1> component.
        let s = FockState4::basis(FockIndex4::new(1, 1, 0, 0), 2);
        let r = rotate_mode_pair(&s, ModePair::First, &diagonal_analyzer()).unwrap();
        assert!(r.amplitude(&FockIndex4::new(1, 1, 0, 0)).norm() < 1e-15);
        assert_relative_eq!(r.amplitude(&FockIndex4::new(2, 0, 0, 0)).norm_sqr(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(r.amplitude(&FockIndex4::new(0, 2, 0, 0)).norm_sqr(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn rejects_non_unitary() {
        let s = FockState4::vacuum(1);
        let bad = [[c(1.0, 0.0), c(0.1, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        assert!(matches!(
            rotate_mode_pair(&s, ModePair::First, &bad),
            Err(QiopaError::NonUnitary(_))
        ));
    }

    #[test]
    fn large_total_rotation_is_unitary() {
        // A 120-photon ket rotated forth and back returns to itself.
        let s = FockState4::basis(FockIndex4::new(0, 0, 70, 50), 120);
        let u = diagonal_analyzer();
        let r = rotate_mode_pair(&s, ModePair::Second, &u).unwrap();
        assert_relative_eq!(r.norm_sqr(), 1.0, epsilon = 1e-10);
        // The analyzer matrix is its own inverse.
        let back = rotate_mode_pair(&r, ModePair::Second, &u).unwrap();
        assert_relative_eq!(back.amplitude(&FockIndex4::new(0, 0, 70, 50)).re, 1.0, epsilon = 1e-10);
    }

    fn arb_state() -> impl Strategy<Value = FockState4> {
        prop::collection::vec(((0u32..5, 0u32..5, 0u32..5, 0u32..5), (-1.0f64..1.0, -1.0f64..1.0)), 1..12)
            .prop_map(|entries| {
                let mut s = FockState4::new(8, 8);
                for ((a, b, cc, d), (re, im)) in entries {
                    s.add(FockIndex4::new(a, b, cc, d), Complex64::new(re, im));
                }
                s
            })
    }

    fn arb_unitary() -> impl Strategy<Value = Matrix2> {
        (0.0f64..std::f64::consts::PI, -3.2f64..3.2, -3.2f64..3.2, -3.2f64..3.2).prop_map(|(t, a, b, d)| {
            let (s, co) = t.sin_cos();
            let e = |x: f64| Complex64::from_polar(1.0, x);
            [[e(a) * co, -e(a + b - d) * s], [e(d) * s, e(b) * co]]
        })
    }

    proptest! {
        #[test]
        fn rotation_preserves_norm_and_pair_totals(s in arb_state(), u in arb_unitary(), second in any::<bool>()) {
            let pair = if second { ModePair::Second } else { ModePair::First };
            let r = rotate_mode_pair(&s, pair, &u).unwrap();
            prop_assert!((r.norm_sqr() - s.norm_sqr()).abs() < 1e-10);
            let totals = |st: &FockState4| {
                let (a, b) = pair.modes();
                let mut t: Vec<_> = st.iter().map(|(i, _)| (i.get(a) + i.get(b), i.get(pair.other().modes().0), i.get(pair.other().modes().1))).collect();
                t.sort();
                t.dedup();
                t
            };
            for t in totals(&r) {
                prop_assert!(totals(&s).contains(&t));
            }
        }

        #[test]
        fn inner_product_is_conjugate_symmetric(a in arb_state(), b in arb_state()) {
            let ab = inner_product(&a, &b);
            let ba = inner_product(&b, &a);
            prop_assert!((ab - ba.conj()).norm() < 1e-12);
            let aa = inner_product(&a, &a);
            prop_assert!(aa.im.abs() < 1e-12 && aa.re >= 0.0);
        }
    }
}
