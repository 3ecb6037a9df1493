//! End-to-end tests of the `quadcvx` binary: outputs and exit codes.

use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn example(id: u8) -> String {
    fixture(&format!("example{id:02}.json"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadcvx")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn validate_reports_triviality_and_definiteness() {
    let out = run(&["validate", &example(10)]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["result"]["b_trivial"], Value::Bool(true));
    assert_eq!(r["result"]["definite"], Value::Bool(true));

    let r = report(&run(&["validate", &example(1)]));
    assert_eq!(r["result"]["b_trivial"], Value::Bool(false));
    assert_eq!(r["result"]["definite"], Value::Bool(true));
    assert_eq!(r["map_fingerprint"].as_str().map(str::len), Some(64));
}

#[test]
fn malformed_map_is_a_schema_error() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join("non_square.json");
    std::fs::write(&path, r#"{"field":"real","n":2,"m":1,"A":[[[1,0],[0]]],"b":[[0,0]]}"#).unwrap();
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("schema error") && err.contains("A[0] row 1"), "{err}");
}

#[test]
fn feasibility_exit_codes() {
    let out = run(&["feasible", &example(1), "--y0", "0,0,-1"]);
    assert_eq!(code(&out), 3);
    assert_eq!(report(&out)["result"]["verified"], Value::Bool(true));
    assert_eq!(code(&run(&["feasible", &example(1), "--y0", "0,0,0"])), 0);
    let out = run(&["feasible", &example(7), "--self-check", "50", "--seed", "7"]);
    assert_eq!(code(&out), 0);
    assert_eq!(report(&out)["result"]["certified"], Value::from(0));
    assert_eq!(code(&run(&["feasible", &example(1)])), 1);
}

#[test]
fn boundary_and_support_for_example_seven() {
    let out = run(&["boundary", &example(7), "--d", "-1,-2,-3,-4,-5"]);
    assert_eq!(code(&out), 0);
    let t = num(&report(&out)["result"]["boundary"]["t_input"]);
    assert!((t - 0.1196).abs() < 1e-3, "t = {t}");

    let out = run(&["support", &example(7), "--d", "-1,-2,-3,-4,-5"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let c: Vec<f64> = r["result"]["support"]["c_unit"].as_array().unwrap().iter().map(num).collect();
    let expected = [-0.0128, 0.1989, 0.1827, 0.3844, 0.8827];
    for (a, b) in c.iter().zip(expected) {
        assert!((a - b).abs() < 1e-2, "{c:?}");
    }
}

#[test]
fn unbounded_ray_and_zero_direction() {
    let paraboloid = fixture("convex_paraboloid.json");
    let out = run(&["boundary", &paraboloid, "--y", "1,0,0", "--d", "1,0,0"]);
    assert_eq!(code(&out), 4);
    assert_eq!(report(&out)["status"], Value::from("Unbounded"));
    assert_eq!(code(&run(&["support", &paraboloid, "--y", "1,0,0", "--d", "1,0,0"])), 4);
    let out = run(&["boundary", &example(7), "--d", "0,0,0,0,0"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn certify_examples() {
    for id in [2u8, 3, 10] {
        let out = run(&["certify", &example(id), "--seed", &id.to_string()]);
        assert_eq!(code(&out), 0);
        let r = report(&out);
        assert_eq!(r["status"], Value::from("Certified"), "example {id}");
        assert_eq!(r["result"]["verified"], Value::Bool(true));
    }
    let r = report(&run(&["certify", &fixture("convex_homogeneous_m2.json")]));
    assert_eq!(r["status"], Value::from("NoCertificate"));
    assert_eq!(code(&run(&["certify", &example(2), "--seed", "abc"])), 1);
}

#[test]
fn zmax_examples() {
    let out = run(&["zmax", &example(1), "--cplus", "0,0,1", "--restarts", "60", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    let z = num(&report(&out)["result"]["z_max"]);
    assert!((z - 1.0 / 3.0).abs() < 1e-3, "z = {z}");

    let out = run(&["zmax", &example(10), "--cplus", "0,0,0,1"]);
    assert_eq!(code(&out), 5);
    assert_eq!(report(&out)["status"], Value::from("TrivialB"));

    let out = run(&["zmax", &example(5), "--cplus", "1,0,0,0", "--seed", "5"]);
    let z = num(&report(&out)["result"]["z_max"]);
    assert!((z - 0.007325).abs() < 5e-4, "z = {z}");
}

fn turn_signs(pts: &[[f64; 2]]) -> (f64, f64) {
    let n = pts.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let (a, b, c) = (pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        lo = lo.min(cross);
        hi = hi.max(cross);
    }
    (lo, hi)
}

#[test]
fn sweep_section_csv() {
    let out = run(&["sweep-section", &example(1), "--fix", "3=1/3", "--rays", "72"]);
    assert_eq!(code(&out), 0);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["angle_rad", "t", "y1", "y2", "y3", "rank_estimate", "on_F"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 72);
    let pts: Vec<[f64; 2]> = rows.iter().map(|r| [r[2].parse().unwrap(), r[3].parse().unwrap()]).collect();
    let (lo, hi) = turn_signs(&pts);
    assert!(lo >= -1e-6 || hi <= 1e-6, "turns {lo} {hi}");

    assert_eq!(code(&run(&["sweep-section", &example(1), "--fix", "3=4", "--rays", "0"])), 1);
    assert_eq!(code(&run(&["sweep-section", &example(1), "--rays", "8"])), 1);
}

#[test]
fn run_example_scenarios() {
    for id in ["1", "3", "5", "10"] {
        let out = run(&["run-example", id]);
        assert_eq!(code(&out), 0, "example {id}: {}", String::from_utf8_lossy(&out.stdout));
        assert_eq!(report(&out)["status"], Value::from("Match"));
    }
    assert_eq!(code(&run(&["run-example", "11"])), 1);
}

#[test]
fn reports_are_deterministic_and_written_to_file() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join("certify_report.json");
    let args = ["certify", &example(2), "--seed", "4", "--json-out", path.to_str().unwrap()];
    let strip = |out: &Output| {
        let mut v = report(out);
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    let first = run(&args);
    let second = run(&args);
    assert_eq!(strip(&first), strip(&second));
    let from_file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(from_file, report(&second));
    assert_eq!(from_file["seed"], Value::from(4));
}
