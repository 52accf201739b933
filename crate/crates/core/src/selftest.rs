//! Quick invariant checks run by `qiopa --selftest`.

use std::f64::consts::PI;

use crate::density::{entropy, rho1_closed_form, rho2_closed_form};
use crate::fock::inner_product;
use crate::observables::{g1_closed_form, g1_oracle};
use crate::opa::{amplify, horizontal_branch, vertical_branch, AmplifierConfig};
use crate::polarization::Qubit;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn qubits() -> Vec<Qubit> {
    vec![
        Qubit::horizontal(),
        Qubit::diagonal(0.0),
        Qubit::new(0.6, 0.8, 2.1).unwrap(),
        Qubit::new(0.96, 0.28, -PI / 3.0).unwrap(),
    ]
}

/// Normalization, branch orthogonality, the `G1` sum rule and oracle, and
/// entropy symmetry at a few gains.
pub fn run() -> Vec<Check> {
    let mut out = Vec::new();
    for g in [0.07, 0.5, 1.13] {
        let cfg = match AmplifierConfig::from_gain(g) {
            Ok(c) => c,
            Err(e) => {
                out.push(check(format!("config g={g}"), false, e.to_string()));
                continue;
            }
        };
        let eps = cfg.truncation_error();
        for q in qubits() {
            let norm = amplify(&q, &cfg).norm_sqr();
            out.push(check(
                format!("normalization g={g} q={q}"),
                norm <= 1.0 + 1e-12 && norm >= 1.0 - eps - 1e-12,
                format!("norm^2={norm} tail={eps:e}"),
            ));

            let closed = g1_closed_form(&q, &cfg.gain);
            let sum_err = (closed.sum() - 3.0 * cfg.gain.nbar).abs();
            out.push(check(format!("sum rule g={g} q={q}"), sum_err <= 1e-10, format!("error={sum_err:e}")));

            match g1_oracle(&q, &cfg) {
                Ok(o) => {
                    let err = (o.g2h - closed.g2h).abs().max((o.g2v - closed.g2v).abs());
                    out.push(check(format!("G1 oracle g={g} q={q}"), err <= 1e-8, format!("error={err:e}")));
                }
                Err(e) => out.push(check(format!("G1 oracle g={g} q={q}"), false, e.to_string())),
            }

            match (entropy(&rho1_closed_form(&q, &cfg)), entropy(&rho2_closed_form(&q, &cfg))) {
                (Ok(s1), Ok(s2)) => out.push(check(
                    format!("entropy symmetry g={g} q={q}"),
                    (s1 - s2).abs() <= 1e-9,
                    format!("S1={s1} S2={s2}"),
                )),
                (Err(e), _) | (_, Err(e)) => out.push(check(format!("entropy g={g} q={q}"), false, e.to_string())),
            }
        }
        let overlap = inner_product(&horizontal_branch(&cfg), &vertical_branch(&cfg)).norm();
        out.push(check(format!("orthogonality g={g}"), overlap == 0.0, format!("|<a|b>|={overlap}")));
    }
    out
}
