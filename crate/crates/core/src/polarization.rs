//! Injected polarization qubit and the SU(2) / Jones-matrix transformations
//! applied to it before amplification.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QiopaError, Result};
use crate::fock::{unitarity_defect, Matrix2, UNITARY_TOL};

/// Allowed deviation of `alpha^2 + beta^2` from one.
pub const NORM_TOL: f64 = 1e-12;

/// Single-photon polarization qubit `alpha|H> + beta e^{i phi}|V>`.
///
/// Stored in canonical form: `alpha, beta >= 0`, `phi` in `(-pi, pi]`. The
/// global phase discarded by canonicalization is kept for bookkeeping only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qubit {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
    #[serde(default)]
    pub global_phase: f64,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

impl Qubit {
    pub fn new(alpha: f64, beta: f64, phi: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && phi.is_finite()) {
            return Err(QiopaError::InvalidQubit("non-finite parameter".into()));
        }
        if alpha < 0.0 || beta < 0.0 {
            return Err(QiopaError::InvalidQubit(format!(
                "alpha and beta must be non-negative, got ({alpha}, {beta})"
            )));
        }
        let norm = alpha * alpha + beta * beta;
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QiopaError::InvalidQubit(format!(
                "alpha^2 + beta^2 = {norm}, expected 1"
            )));
        }
        let phi = if beta == 0.0 { 0.0 } else { wrap_phase(phi) };
        Ok(Qubit {
            alpha,
            beta,
            phi,
            global_phase: 0.0,
        })
    }

    pub fn horizontal() -> Self {
        Qubit::new(1.0, 0.0, 0.0).unwrap()
    }

    pub fn vertical() -> Self {
        Qubit::new(0.0, 1.0, 0.0).unwrap()
    }

    /// Equal-weight superposition with relative phase `phi`.
    pub fn diagonal(phi: f64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Qubit::new(s, s, phi).unwrap()
    }

    /// Canonicalizes arbitrary (non-zero) amplitudes on `|H>`, `|V>`.
    pub fn from_amplitudes(h: Complex64, v: Complex64) -> Result<Self> {
        let norm = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(QiopaError::InvalidQubit("zero or non-finite amplitudes".into()));
        }
        let (h, v) = (h / norm, v / norm);
        let alpha = h.norm();
        let beta = v.norm();
        // With one amplitude vanishing the relative phase is a pure gauge.
        let (phi, global) = if beta == 0.0 {
            (0.0, h.arg())
        } else if alpha == 0.0 {
            (0.0, v.arg())
        } else {
            (wrap_phase(v.arg() - h.arg()), h.arg())
        };
        Ok(Qubit {
            alpha,
            beta,
            phi,
            global_phase: wrap_phase(global),
        })
    }

    /// Amplitudes `(alpha, beta e^{i phi})`, excluding the global phase.
    pub fn amplitudes(&self) -> [Complex64; 2] {
        [
            Complex64::new(self.alpha, 0.0),
            Complex64::from_polar(self.beta, self.phi),
        ]
    }

    pub fn with_global_phase(mut self, phase: f64) -> Self {
        self.global_phase = wrap_phase(phase);
        self
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(alpha={}, beta={}, phi={})", self.alpha, self.beta, self.phi)
    }
}

/// Bloch-sphere rotation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl FromStr for Axis {
    type Err = QiopaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(QiopaError::InvalidPath(format!("unknown axis '{other}'"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Unitary 2x2 Jones matrix in the `{H, V}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationUnitary(Matrix2);

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

impl PolarizationUnitary {
    /// Wraps `m`, rejecting non-unitary input.
    pub fn new(m: Matrix2) -> Result<Self> {
        let defect = unitarity_defect(&m);
        if defect > UNITARY_TOL {
            return Err(QiopaError::NonUnitary(defect));
        }
        Ok(PolarizationUnitary(m))
    }

    pub fn identity() -> Self {
        PolarizationUnitary([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.0
    }

    /// Matrix product `self * rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &PolarizationUnitary) -> PolarizationUnitary {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        PolarizationUnitary(out)
    }

    pub fn determinant(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.0)
    }

    /// Largest elementwise distance to `other`.
    pub fn distance(&self, other: &PolarizationUnitary) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }

    /// Distance to `other` after removing the best global phase.
    pub fn projective_distance(&self, other: &PolarizationUnitary) -> f64 {
        // tr(A^dagger B) carries the relative phase when A ~ B.
        let mut tr = ZERO;
        for r in 0..2 {
            for c in 0..2 {
                tr += self.0[r][c].conj() * other.0[r][c];
            }
        }
        let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { ONE };
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] * phase - other.0[r][c]).norm());
            }
        }
        worst
    }
}

/// `exp(-i sigma_axis angle / 2)`.
pub fn su2_rotation(axis: Axis, angle: f64) -> PolarizationUnitary {
    let (s, c) = (angle / 2.0).sin_cos();
    let cc = Complex64::new(c, 0.0);
    let m = match axis {
        Axis::X => [[cc, -I * s], [-I * s, cc]],
        Axis::Y => [[cc, Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), cc]],
        Axis::Z => [
            [Complex64::from_polar(1.0, -angle / 2.0), ZERO],
            [ZERO, Complex64::from_polar(1.0, angle / 2.0)],
        ],
    };
    PolarizationUnitary(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveplateKind {
    Half,
    Quarter,
}

impl WaveplateKind {
    pub fn retardance(self) -> f64 {
        match self {
            WaveplateKind::Half => PI,
            WaveplateKind::Quarter => PI / 2.0,
        }
    }
}

/// Ideal retarder with its fast axis at `theta` from horizontal.
pub fn waveplate(kind: WaveplateKind, theta: f64) -> PolarizationUnitary {
    let (s, c) = theta.sin_cos();
    let half = kind.retardance() / 2.0;
    let fast = Complex64::from_polar(1.0, -half);
    let slow = Complex64::from_polar(1.0, half);
    // R(-theta) diag(fast, slow) R(theta)
    let m = [
        [fast * c * c + slow * s * s, (fast - slow) * c * s],
        [(fast - slow) * c * s, fast * s * s + slow * c * c],
    ];
    PolarizationUnitary(m)
}

/// Variable retarder adding phase `delta` to the vertical component.
pub fn babinet(delta: f64) -> PolarizationUnitary {
    PolarizationUnitary([[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, delta)]])
}

/// Applies `u` to `q` and returns the canonicalized result.
pub fn apply(u: &PolarizationUnitary, q: &Qubit) -> Qubit {
    let [h, v] = q.amplitudes();
    let g = Complex64::from_polar(1.0, q.global_phase);
    let m = u.matrix();
    let nh = (m[0][0] * h + m[0][1] * v) * g;
    let nv = (m[1][0] * h + m[1][1] * v) * g;
    // Unitary input on a normalized vector cannot produce zero amplitudes.
    Qubit::from_amplitudes(nh, nv).expect("unitary image of a normalized qubit")
}

/// Sequence of rotations about one axis applied to a fixed starting qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochPath {
    pub axis: Axis,
    pub angles: Vec<f64>,
    pub start: Qubit,
}

impl BlochPath {
    pub fn new(axis: Axis, angles: Vec<f64>, start: Qubit) -> Result<Self> {
        if angles.len() < 2 {
            return Err(QiopaError::InvalidPath("need at least two points".into()));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(QiopaError::InvalidPath("non-finite angle".into()));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(QiopaError::InvalidPath("angles must be strictly increasing".into()));
        }
        Ok(BlochPath { axis, angles, start })
    }

    /// Evenly spaced path `start_angle + k * step`, `k = 0..count`.
    pub fn uniform(axis: Axis, start_angle: f64, step: f64, count: usize, start: Qubit) -> Result<Self> {
        if !(step > 0.0) {
            return Err(QiopaError::InvalidPath(format!("step must be positive, got {step}")));
        }
        let angles = (0..count).map(|k| start_angle + step * k as f64).collect();
        BlochPath::new(axis, angles, start)
    }

    /// Parses `axis:start:step:count`.
    pub fn parse(spec: &str, start: Qubit) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 4 {
            return Err(QiopaError::InvalidPath(format!(
                "expected axis:start:step:count, got '{spec}'"
            )));
        }
        let axis: Axis = parts[0].parse()?;
        let num = |s: &str, what: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| QiopaError::InvalidPath(format!("bad {what} '{s}'")))
        };
        let start_angle = num(parts[1], "start angle")?;
        let step = num(parts[2], "step")?;
        let count: usize = parts[3]
            .trim()
            .parse()
            .map_err(|_| QiopaError::InvalidPath(format!("bad count '{}'", parts[3])))?;
        BlochPath::uniform(axis, start_angle, step, count, start)
    }

    /// Qubit at each point of the path.
    pub fn qubits(&self) -> Vec<Qubit> {
        self.angles
            .iter()
            .map(|&a| apply(&su2_rotation(self.axis, a), &self.start))
            .collect()
    }

    pub fn describe(&self) -> String {
        format!(
            "axis={} start={} angles={}..{} ({} points)",
            self.axis,
            self.start,
            self.angles[0],
            self.angles[self.angles.len() - 1],
            self.angles.len()
        )
    }
}
