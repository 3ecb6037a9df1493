//! Scripted scenarios for the bundled examples with golden expectations.

use crate::commands::{exit, Outcome};
use crate::report::{fmt_sig, to_rounded_value};
use anyhow::{bail, Result};
use quadcvx::convexcut::{get_z_max, CutError, ZMaxOptions};
use quadcvx::fixtures::example;
use quadcvx::linalg::ToleranceConfig;
use quadcvx::nonconvexity::{nonconvexity_certificate, CertificateKind, CertifyOptions};
use quadcvx::oracles::boundary_oracle;
use serde::Serialize;
use serde_json::json;

/// Expected `z_max` with its tolerance, or `None` when `get_z_max` must
/// reject the map as having trivial `b`.
fn golden_z_max(id: u8) -> Option<(f64, f64)> {
    match id {
        1 => Some((1.0 / 3.0, 1e-3)),
        2 => Some((0.0283, 1e-3)),
        3 => Some((std::f64::consts::FRAC_1_SQRT_2, 1e-3)),
        4 => Some((1.451, 2e-3)),
        5 => Some((0.007325, 5e-4)),
        6 => Some((0.001059, 5e-4)),
        7 => Some((0.0935, 1e-3)),
        8 => Some((0.00768, 5e-4)),
        9 => Some((0.0335, 1e-3)),
        _ => None,
    }
}

/// Iterations of the certificate search in every scenario.
const CERTIFY_ITERS: usize = 100;

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: String,
    expected: String,
    observed: String,
    pass: bool,
}

fn within(name: &str, observed: f64, target: f64, tol: f64) -> Check {
    Check {
        name: name.into(),
        expected: format!("{} +- {}", fmt_sig(target), fmt_sig(tol)),
        observed: fmt_sig(observed),
        pass: (observed - target).abs() <= tol,
    }
}

pub fn run_example(id: u8, seed: Option<u64>, tol: &ToleranceConfig) -> Result<Outcome> {
    let Some(e) = example(id) else {
        bail!("unknown example {id}; valid ids are 1 to 10");
    };
    let map = e.map()?;
    let seed = seed.unwrap_or(e.seed);
    let mut checks = Vec::new();

    let cert = nonconvexity_certificate(&map, &CertifyOptions { seed, max_iters: CERTIFY_ITERS }, tol)?;
    let want_kind = if map.is_homogeneous() { CertificateKind::Homogeneous } else { CertificateKind::Inhomogeneous };
    checks.push(Check {
        name: "nonconvexity certificate".into(),
        expected: format!("{want_kind:?} certificate within {CERTIFY_ITERS} iterations"),
        observed: match &cert {
            Some(c) => format!("{:?} certificate, defect {}", c.kind, fmt_sig(c.defect)),
            None => "none".into(),
        },
        pass: cert.as_ref().is_some_and(|c| c.kind == want_kind && c.verify(&map, tol)),
    });

    if id == 7 {
        let d = [-1.0, -2.0, -3.0, -4.0, -5.0];
        let t = boundary_oracle(&map, &[0.0; 5], &d, tol).map(|bp| bp.t_input);
        checks.push(match t {
            Ok(t) => within("boundary t from 0 along (-1,-2,-3,-4,-5)", t, 0.1196, 1e-3),
            Err(err) => Check {
                name: "boundary t from 0 along (-1,-2,-3,-4,-5)".into(),
                expected: "0.1196 +- 0.001".into(),
                observed: err.to_string(),
                pass: false,
            },
        });
    }

    let c_plus = e.c_plus.expect("every bundled example has c+");
    let opts = ZMaxOptions {
        seed,
        restarts: e.restarts,
        z_guess: e.z_guess,
        ..ZMaxOptions::default()
    };
    let zres = get_z_max(&map, c_plus, &opts, tol);
    let mut z_summary = json!(null);
    match (golden_z_max(id), &zres) {
        (Some((target, t)), Ok(r)) => {
            checks.push(within("z_max", r.z_max, target, t));
            z_summary = json!({"z_max": r.z_max, "c_star": r.c_star, "starts": r.starts.len()});
        }
        (Some((target, t)), Err(err)) => checks.push(Check {
            name: "z_max".into(),
            expected: format!("{} +- {}", fmt_sig(target), fmt_sig(t)),
            observed: err.to_string(),
            pass: false,
        }),
        (None, res) => checks.push(Check {
            name: "z_max rejects trivial b".into(),
            expected: CutError::TrivialB.to_string(),
            observed: match res {
                Ok(r) => format!("z_max = {}", fmt_sig(r.z_max)),
                Err(err) => err.to_string(),
            },
            pass: matches!(res, Err(CutError::TrivialB)),
        }),
    }

    let all = checks.iter().all(|c| c.pass);
    let result = json!({
        "example": id,
        "name": e.name,
        "c_plus": c_plus,
        "restarts": e.restarts,
        "checks": checks,
        "certificate": cert,
        "z_max": z_summary,
    });
    Ok(Outcome {
        status: if all { "Match".into() } else { "Mismatch".into() },
        code: if all { exit::OK } else { exit::MISMATCH },
        fingerprint: Some(map.fingerprint()),
        seed: Some(seed),
        result: to_rounded_value(&result),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_example_is_an_input_error() {
        assert!(run_example(11, None, &ToleranceConfig::default()).is_err());
        assert!(run_example(0, None, &ToleranceConfig::default()).is_err());
    }

    #[test]
    fn example_three_matches() {
        let out = run_example(3, None, &ToleranceConfig::default()).unwrap();
        assert_eq!(out.status, "Match", "{}", out.result);
    }
}
