//! Figures reported for the original experiment, kept next to the
//! computed values so reports can show the two side by side.

use serde::{Deserialize, Serialize};

/// Gain of the low-gain regime.
pub const LOW_GAIN: f64 = 0.07;
/// Gain of the high-gain regime.
pub const HIGH_GAIN: f64 = 1.13;
/// Overall detector quantum efficiency.
pub const DETECTOR_QE: f64 = 0.18;

/// Reported mean number of pairs in the low-gain regime.
pub const REPORTED_MEAN_PAIRS_LOW: f64 = 0.009;
/// Reported mean number of pairs in the high-gain regime.
pub const REPORTED_MEAN_PAIRS_HIGH: f64 = 4.0;
/// Pair-number threshold of the reported tail probability.
pub const REPORTED_TAIL_THRESHOLD: usize = 8;
/// Reported probability of at least `REPORTED_TAIL_THRESHOLD` pairs at high gain.
pub const REPORTED_TAIL_HIGH: f64 = 0.14;
/// Ideal fringe visibility for an equal-weight qubit.
pub const REPORTED_IDEAL_VISIBILITY: f64 = 0.33;
/// Measured visibilities, two-fold scheme (low, high gain).
pub const MEASURED_VISIBILITY_TWO_FOLD: (f64, f64) = (0.04, 0.04);
/// Measured visibilities, four-fold scheme (low, high gain).
pub const MEASURED_VISIBILITY_FOUR_FOLD: (f64, f64) = (0.25, 0.07);

/// Relative deviation above which a computed value is flagged.
pub const DISCREPANCY_THRESHOLD: f64 = 0.05;

/// A computed quantity next to its reported counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub computed: f64,
    pub reported: f64,
    pub relative_deviation: f64,
    pub discrepant: bool,
}

impl Comparison {
    pub fn new(computed: f64, reported: f64) -> Self {
        let relative_deviation = (computed - reported) / reported;
        Comparison {
            computed,
            reported,
            relative_deviation,
            discrepant: relative_deviation.abs() > DISCREPANCY_THRESHOLD,
        }
    }

    pub fn flag(&self) -> &'static str {
        if self.discrepant {
            "DISCREPANT"
        } else {
            "consistent"
        }
    }
}
