//! Command implementations. Each returns an `Outcome` or an input error.

use crate::report::{fmt_sig, to_rounded_value};
use anyhow::{anyhow, bail, Context, Result};
use quadcvx::convexcut::{get_z_max, CutError, ZMaxOptions};
use quadcvx::linalg::{FieldTag, ToleranceConfig, C64};
use quadcvx::nonconvexity::{nonconvexity_certificate, CertifyOptions};
use quadcvx::oracles::{boundary_oracle, get_c_from_d, infeasibility_oracle, sweep_section, OracleError};
use quadcvx::quadmap::{parse_real, MapFile, QuadraticMap};
use quadcvx::sdpcore::SdpStatus;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};
use std::path::Path;

pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 1;
    pub const INDETERMINATE: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const UNBOUNDED: i32 = 4;
    pub const TRIVIAL_B: i32 = 5;
    pub const MISMATCH: i32 = 6;
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: String,
    pub code: i32,
    pub fingerprint: Option<String>,
    pub seed: Option<u64>,
    pub result: Value,
}

impl Outcome {
    fn new(status: &str, code: i32, map: &QuadraticMap, seed: Option<u64>, result: Value) -> Self {
        Outcome {
            status: status.to_string(),
            code,
            fingerprint: Some(map.fingerprint()),
            seed,
            result,
        }
    }
}

/// Reads and validates a map file, keeping the raw schema for diagnostics.
pub fn load_map(path: &Path, tol: &ToleranceConfig) -> Result<(QuadraticMap, MapFile)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_map(&text, tol).with_context(|| format!("{}", path.display()))
}

pub fn parse_map(text: &str, tol: &ToleranceConfig) -> Result<(QuadraticMap, MapFile)> {
    let file: MapFile = serde_json::from_str(text).map_err(|e| anyhow!("schema error: {e}"))?;
    let map = file.clone().into_map(tol).map_err(|e| anyhow!("schema error: {e}"))?;
    Ok((map, file))
}

/// Parses a comma-separated vector; entries may be decimals or rationals `p/q`.
pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| parse_real(t).map_err(|_| anyhow!("cannot parse {t:?} as a number")))
        .collect()
}

/// Parses a section constraint `k=v` with a 1-based coordinate index.
pub fn parse_fix(s: &str) -> Result<(usize, f64)> {
    let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("expected K=VALUE, got {s:?}"))?;
    let k: usize = k.trim().parse().map_err(|_| anyhow!("coordinate index {k:?} is not a positive integer"))?;
    if k == 0 {
        bail!("coordinate indices start at 1");
    }
    let v = parse_real(v).map_err(|_| anyhow!("cannot parse {v:?} as a number"))?;
    Ok((k - 1, v))
}

fn expect_len(v: &[f64], m: usize, what: &str) -> Result<()> {
    if v.len() != m {
        bail!("{what} has {} entries, expected m = {m}", v.len());
    }
    Ok(())
}

pub fn validate(map: &QuadraticMap, file: &MapFile, tol: &ToleranceConfig) -> Result<Outcome> {
    let deviations = file.hermitian_deviations()?;
    let triv = map.is_b_trivial(tol.trivial)?;
    let (status, code, definite, c_plus) = match map.find_definite_direction(tol) {
        Ok(Some(c)) => ("Valid", exit::OK, Some(true), Some(c)),
        Ok(None) => ("Valid", exit::OK, Some(false), None),
        Err(_) => ("Indeterminate", exit::INDETERMINATE, None, None),
    };
    let result = json!({
        "field": map.field(),
        "n": map.n(),
        "m": map.m(),
        "hermitian_deviation": deviations,
        "homogeneous": map.is_homogeneous(),
        "b_trivial": triv.trivial,
        "b_residual": triv.residual,
        "definite": definite,
        "c_plus": c_plus,
    });
    Ok(Outcome::new(status, code, map, None, to_rounded_value(&result)))
}

/// Random image point `f(x)` with Gaussian `x`.
fn random_image_point(map: &QuadraticMap, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let x: Vec<C64> = (0..map.n())
        .map(|_| match map.field() {
            FieldTag::Real => C64::real(rng.sample(StandardNormal)),
            FieldTag::Complex => C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
        })
        .collect();
    Ok(map.evaluate(&x)?)
}

pub fn feasible(map: &QuadraticMap, y0: &[f64], tol: &ToleranceConfig) -> Result<Outcome> {
    expect_len(y0, map.m(), "y0")?;
    match infeasibility_oracle(map, y0, tol) {
        Ok(Some(cert)) => {
            let verified = cert.verify(map);
            let result = json!({"y0": y0, "certificate": cert, "verified": verified});
            Ok(Outcome::new("CertifiedInfeasible", exit::INFEASIBLE, map, None, to_rounded_value(&result)))
        }
        Ok(None) => Ok(Outcome::new("NoCertificate", exit::OK, map, None, to_rounded_value(&json!({"y0": y0})))),
        Err(OracleError::Indeterminate(st)) => Ok(Outcome::new(
            "Indeterminate",
            exit::INDETERMINATE,
            map,
            None,
            json!({"y0": to_rounded_value(&y0), "solver_status": st}),
        )),
        Err(e) => Err(e.into()),
    }
}

/// Runs the infeasibility oracle on `count` random image points.
pub fn self_check(map: &QuadraticMap, count: usize, seed: u64, tol: &ToleranceConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut certified = Vec::new();
    let mut indeterminate = 0usize;
    for i in 0..count {
        let y = random_image_point(map, &mut rng)?;
        match infeasibility_oracle(map, &y, tol) {
            Ok(Some(_)) => certified.push(json!({"index": i, "y0": y})),
            Ok(None) => {}
            Err(OracleError::Indeterminate(_)) => indeterminate += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let (status, code) = if !certified.is_empty() {
        ("FalseCertificate", exit::INFEASIBLE)
    } else if indeterminate > 0 {
        ("Indeterminate", exit::INDETERMINATE)
    } else {
        ("Consistent", exit::OK)
    };
    let result = json!({
        "points": count,
        "certified": certified.len(),
        "indeterminate": indeterminate,
        "certified_points": certified,
    });
    Ok(Outcome::new(status, code, map, Some(seed), to_rounded_value(&result)))
}

pub fn boundary(map: &QuadraticMap, y: &[f64], d: &[f64], tol: &ToleranceConfig) -> Result<Outcome> {
    expect_len(y, map.m(), "y")?;
    expect_len(d, map.m(), "d")?;
    let input = json!({"y": y, "d": d});
    match boundary_oracle(map, y, d, tol) {
        Ok(bp) => {
            let result = json!({"input": input, "boundary": bp});
            Ok(Outcome::new("Optimal", exit::OK, map, None, to_rounded_value(&result)))
        }
        Err(OracleError::Unbounded) => {
            Ok(Outcome::new("Unbounded", exit::UNBOUNDED, map, None, to_rounded_value(&json!({"input": input}))))
        }
        Err(OracleError::Indeterminate(st)) => Ok(Outcome::new(
            "Indeterminate",
            exit::INDETERMINATE,
            map,
            None,
            json!({"input": to_rounded_value(&input), "solver_status": st}),
        )),
        Err(e) => Err(e.into()),
    }
}

pub fn support(map: &QuadraticMap, y: &[f64], d: &[f64], tol: &ToleranceConfig) -> Result<Outcome> {
    expect_len(y, map.m(), "y")?;
    expect_len(d, map.m(), "d")?;
    let input = json!({"y": y, "d": d});
    match get_c_from_d(map, y, d, tol) {
        Ok(sv) => {
            let result = json!({"input": input, "support": sv});
            Ok(Outcome::new("Optimal", exit::OK, map, None, to_rounded_value(&result)))
        }
        // No supporting hyperplane meets the ray: the primal is unbounded.
        Err(OracleError::NoSupportingHyperplane(SdpStatus::Infeasible)) => {
            Ok(Outcome::new("Unbounded", exit::UNBOUNDED, map, None, to_rounded_value(&json!({"input": input}))))
        }
        Err(OracleError::NoSupportingHyperplane(st)) | Err(OracleError::Indeterminate(st)) => Ok(Outcome::new(
            "Indeterminate",
            exit::INDETERMINATE,
            map,
            None,
            json!({"input": to_rounded_value(&input), "solver_status": st}),
        )),
        Err(e) => Err(e.into()),
    }
}

pub fn certify(map: &QuadraticMap, seed: u64, iters: usize, tol: &ToleranceConfig) -> Result<Outcome> {
    let opts = CertifyOptions { seed, max_iters: iters };
    let cert = nonconvexity_certificate(map, &opts, tol)?;
    let verified = cert.as_ref().map(|c| c.verify(map, tol));
    let status = if cert.is_some() { "Certified" } else { "NoCertificate" };
    let result = json!({"iterations": iters, "certificate": cert, "verified": verified});
    Ok(Outcome::new(status, exit::OK, map, Some(seed), to_rounded_value(&result)))
}

#[derive(Debug, Clone)]
pub struct ZMaxArgs {
    pub c_plus: Option<Vec<f64>>,
    pub seed: u64,
    pub restarts: usize,
    pub z_guess: Option<f64>,
}

pub fn zmax(map: &QuadraticMap, args: &ZMaxArgs, tol: &ToleranceConfig) -> Result<Outcome> {
    let c_plus = match &args.c_plus {
        Some(c) => {
            expect_len(c, map.m(), "c+")?;
            c.clone()
        }
        None => map
            .find_definite_direction(tol)?
            .ok_or_else(|| anyhow!("the map has no definite direction; pass --cplus"))?,
    };
    let opts = ZMaxOptions {
        seed: args.seed,
        restarts: args.restarts,
        z_guess: args.z_guess,
        ..ZMaxOptions::default()
    };
    match get_z_max(map, &c_plus, &opts, tol) {
        Ok(r) => Ok(Outcome::new("Optimal", exit::OK, map, Some(args.seed), to_rounded_value(&r))),
        Err(CutError::TrivialB) => Ok(Outcome::new(
            "TrivialB",
            exit::TRIVIAL_B,
            map,
            Some(args.seed),
            json!({"error": CutError::TrivialB.to_string()}),
        )),
        Err(CutError::NoCMinusFound) => Ok(Outcome::new(
            "NoCMinusFound",
            exit::INDETERMINATE,
            map,
            Some(args.seed),
            json!({"error": CutError::NoCMinusFound.to_string()}),
        )),
        Err(e) => Err(e.into()),
    }
}

/// Section sweep: the outcome plus CSV text with one row per ray.
pub fn sweep(map: &QuadraticMap, fixed: &[(usize, f64)], rays: usize, tol: &ToleranceConfig) -> Result<(Outcome, String)> {
    let sec = sweep_section(map, fixed, rays, tol)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["angle_rad".to_string(), "t".to_string()];
    header.extend((1..=map.m()).map(|k| format!("y{k}")));
    header.extend(["rank_estimate".to_string(), "on_F".to_string()]);
    w.write_record(&header)?;
    for row in &sec.rows {
        let mut rec = vec![fmt_sig(row.angle), fmt_sig(row.t)];
        rec.extend(row.point.iter().map(|v| fmt_sig(*v)));
        rec.push(row.rank_estimate.to_string());
        rec.push(format!("{:?}", row.on_f));
        w.write_record(&rec)?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?;
    let not_rank_one = sec.rows.iter().filter(|r| r.rank_estimate != 1).count();
    let result = json!({
        "free": sec.free.iter().map(|k| k + 1).collect::<Vec<_>>(),
        "fixed": fixed.iter().map(|(k, v)| json!({"coordinate": k + 1, "value": v})).collect::<Vec<_>>(),
        "center": sec.center,
        "rays": rays,
        "rays_not_rank_one": not_rank_one,
    });
    Ok((Outcome::new("Ok", exit::OK, map, None, to_rounded_value(&result)), csv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use quadcvx::fixtures::example;

    #[test]
    fn vectors_accept_rationals_and_negatives() {
        assert_eq!(parse_vector("1,-2.5,1/4").unwrap(), vec![1.0, -2.5, 0.25]);
        assert!(parse_vector("1,x").is_err());
        assert!(parse_vector("").is_err());
    }

    #[test]
    fn section_constraints_are_one_based() {
        assert_eq!(parse_fix("3=1/3").unwrap(), (2, 1.0 / 3.0));
        assert!(parse_fix("0=1").is_err());
        assert!(parse_fix("3").is_err());
    }

    #[test]
    fn malformed_map_is_a_schema_error() {
        let tol = ToleranceConfig::default();
        let bad = r#"{"field":"real","n":2,"m":1,"A":[[[1,0],[0]]],"b":[[0,0]]}"#;
        let err = parse_map(bad, &tol).unwrap_err().to_string();
        assert!(err.contains("A[0] row 1"), "{err}");
        let missing = "{\"field\":\"real\",\n\"n\":2}";
        let err = parse_map(missing, &tol).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn validate_reports_triviality_and_definiteness() {
        let tol = ToleranceConfig::default();
        for (id, trivial) in [(1u8, false), (10, true)] {
            let (map, file) = parse_map(example(id).unwrap().json, &tol).unwrap();
            let out = validate(&map, &file, &tol).unwrap();
            assert_eq!(out.code, exit::OK);
            assert_eq!(out.result["b_trivial"], json!(trivial));
            assert_eq!(out.result["definite"], json!(true));
        }
    }

    #[test]
    fn feasibility_exit_codes() {
        let tol = ToleranceConfig::default();
        let map = example(1).unwrap().map().unwrap();
        assert_eq!(feasible(&map, &[0.0, 0.0, -1.0], &tol).unwrap().code, exit::INFEASIBLE);
        assert_eq!(feasible(&map, &[0.0, 0.0, 0.0], &tol).unwrap().code, exit::OK);
        assert!(feasible(&map, &[0.0, 0.0], &tol).is_err());
    }

    #[test]
    fn trivial_b_has_its_own_exit_code() {
        let tol = ToleranceConfig::default();
        let e = example(10).unwrap();
        let args = ZMaxArgs {
            c_plus: e.c_plus.map(|c| c.to_vec()),
            seed: 0,
            restarts: 10,
            z_guess: None,
        };
        assert_eq!(zmax(&e.map().unwrap(), &args, &tol).unwrap().code, exit::TRIVIAL_B);
    }
}
