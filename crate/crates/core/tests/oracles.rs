//! Checks against values frozen from an independent arbitrary-precision
//! evaluation, plus end-to-end report and sampler behaviour.

use approx::assert_relative_eq;
use qiopa_core::density::{pair_distribution, pair_tail, tail_probability};
use qiopa_core::detector::{calibrate_visibility_loss, four_fold_mask, fringe_visibility, run, DetectorConfig};
use qiopa_core::export::{entropy_report, pairs_csv, pairs_report};
use qiopa_core::opa::{minimal_cutoff, AmplifierConfig, HIGH_GAIN_CUTOFF, LOW_GAIN_CUTOFF};
use qiopa_core::{make_gain, GainParams, Qubit, QiopaError};

#[test]
fn gain_parameters_match_frozen_values() {
    let cases = [
        (0.07, 0.06988589031642898589, 0.004908008564008271946662),
        (0.5, 0.46211715726000975850, 0.27154031740762188924),
        (1.13, 0.81101926209968140547, 1.92185991287978572211),
    ];
    for (g, tanh, nbar) in cases {
        let p = make_gain(g).unwrap();
        assert_relative_eq!(p.tanh, tanh, max_relative = 1e-15);
        assert_relative_eq!(p.nbar, nbar, max_relative = 1e-14);
    }
    assert_relative_eq!(make_gain(0.07).unwrap().gamma, 0.99268289598079330188, max_relative = 1e-15);
    assert_relative_eq!(make_gain(1.13).unwrap().gamma, 0.20022159416359232315, max_relative = 1e-14);
}

#[test]
fn tails_match_frozen_values() {
    let hg = make_gain(1.13).unwrap();
    assert_relative_eq!(pair_tail(&hg, 8), 0.27869384034497827782, max_relative = 1e-13);
    assert_relative_eq!(pair_tail(&hg, 12), 0.0934, max_relative = 1e-3);
    assert_relative_eq!(pair_tail(&make_gain(0.5).unwrap(), 8), 1.2785049386253e-4, max_relative = 1e-12);
    assert!(pair_tail(&make_gain(0.07).unwrap(), 8) < 1.5e-17);

    let cfg = AmplifierConfig::new(hg, HIGH_GAIN_CUTOFF).unwrap();
    assert!(cfg.truncation_error() < 3e-16);
    assert!((59..=63).contains(&minimal_cutoff(&hg)));
    assert!(minimal_cutoff(&make_gain(0.07).unwrap()) <= 6);
    let d = pair_distribution(&cfg);
    assert_relative_eq!(tail_probability(&d, 8), 0.27869384034497827782, max_relative = 1e-13);
}

#[test]
fn mean_pair_numbers_are_flagged_against_reported_values() {
    let low = pairs_report(&AmplifierConfig::new(make_gain(0.07).unwrap(), LOW_GAIN_CUTOFF).unwrap(), 8);
    assert_relative_eq!(low.mean, 0.014724025692024815840, max_relative = 1e-13);
    assert_eq!(low.mean_reference.unwrap().flag(), "DISCREPANT");
    assert!(low.tail_reference.is_none());

    let high = pairs_report(&AmplifierConfig::new(make_gain(1.13).unwrap(), HIGH_GAIN_CUTOFF).unwrap(), 8);
    assert_relative_eq!(high.mean, 5.76557973863935716634, max_relative = 1e-13);
    let csv = pairs_csv(&high);
    assert!(csv.contains("# tail_reported=0.14\n"));
    assert!(csv.contains("# tail_status=DISCREPANT\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), HIGH_GAIN_CUTOFF + 2);
}

#[test]
fn entropy_report_is_symmetric_and_grows_with_gain() {
    let q = Qubit::new(0.6, 0.8, 1.0).unwrap();
    let lo = entropy_report(&q, &AmplifierConfig::from_gain(0.07).unwrap()).unwrap();
    let hi = entropy_report(&q, &AmplifierConfig::from_gain(1.13).unwrap()).unwrap();
    assert!(lo.abs_difference < 1e-9 && hi.abs_difference < 1e-9);
    assert!(hi.s1 > lo.s1);
    assert_eq!(lo.hs_distance_branches, 2.0);
}

#[test]
fn invalid_gain_and_cutoff_are_rejected() {
    assert!(matches!(GainParams::new(-0.1), Err(QiopaError::InvalidGain(_))));
    assert!(matches!(GainParams::new(f64::NAN), Err(QiopaError::InvalidGain(_))));
    let err = AmplifierConfig::new(make_gain(1.13).unwrap(), 20).unwrap_err();
    assert!(matches!(err, QiopaError::CutoffTooSmall { given: 20, .. }));
}

#[test]
fn injection_probability_scales_visibility() {
    // With a fraction p of injected pulses the ideal visibility is p / (2 + p).
    let cfg = AmplifierConfig::new(make_gain(1.13).unwrap(), HIGH_GAIN_CUTOFF).unwrap();
    let q = Qubit::diagonal(0.0);
    let det = DetectorConfig {
        p_inject: 0.5,
        ..DetectorConfig::ideal(400_000, 5)
    };
    let s = run(&q, &cfg, &det).unwrap();
    let expected = 0.5 / 2.5;
    assert!((s.visibility - expected).abs() < 4.0 * s.visibility_stderr, "{s:?}");
}

#[test]
fn four_fold_heralding_runs() {
    let cfg = AmplifierConfig::new(make_gain(1.13).unwrap(), HIGH_GAIN_CUTOFF).unwrap();
    let det = DetectorConfig {
        qe: 0.18,
        coincidence_mask: four_fold_mask(),
        ..DetectorConfig::ideal(100_000, 9)
    };
    let s = run(&Qubit::diagonal(0.0), &cfg, &det).unwrap();
    assert!(s.tally.coincidences > 0);
    assert!(s.tally.coincidences <= s.tally.heralds);

    // Squeezed vacuum leaves no fringe in the qubit phase.
    let vacuum = DetectorConfig { p_inject: 0.0, ..det.clone() };
    let (v, se) = fringe_visibility(&Qubit::diagonal(0.0), &cfg, &vacuum).unwrap().visibility();
    assert!(v < 3.0 * se, "{v} +- {se}");
    let (v4, se4) = fringe_visibility(&Qubit::diagonal(0.0), &cfg, &det).unwrap().visibility();
    assert!(v4 > 0.25, "{v4} +- {se4}");
}

#[test]
fn calibration_recovers_injection_probability() {
    let cfg = AmplifierConfig::new(make_gain(1.13).unwrap(), HIGH_GAIN_CUTOFF).unwrap();
    let q = Qubit::diagonal(0.0);
    let template = DetectorConfig::ideal(100_000, 77);
    let target = 0.25;
    let c = calibrate_visibility_loss(target, &q, &cfg, &template, 1e-4).unwrap();
    // p / (2 + p) = 0.25 at p = 2/3
    assert!((c.p_inject - 2.0 / 3.0).abs() < 0.05, "{c:?}");
    assert!(c.ci_low <= c.p_inject && c.p_inject <= c.ci_high);
    assert!(matches!(
        calibrate_visibility_loss(0.5, &q, &cfg, &template, 1e-4),
        Err(QiopaError::UnattainableTarget { .. })
    ));
}
