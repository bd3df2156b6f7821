use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn quadric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadric"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_quadric"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const SPHERE: &str = r#"{"A":[[1,0,0],[0,1,0],[0,0,1]],"b":[0,0,0],"c":-1}"#;

#[test]
fn classify_unit_sphere() {
    let v = json(&quadric(&["classify", SPHERE]));
    assert_eq!(v["family"], "A");
    assert_eq!(v["k"], 3);
    assert_eq!(v["convex_components"], 1);
    assert_eq!(v["component_count"], 2);
    assert_eq!(v["convex_quadric"]["corollary_case"], 1);
}

#[test]
fn empty_locus_exits_two() {
    let out = quadric(&["classify", r#"{"A":[[1]],"b":[0],"c":1}"#]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty real locus"));
}

#[test]
fn schema_errors_exit_three() {
    assert_eq!(quadric(&["classify", r#"{"A":[[1,2]],"b":[0],"c":1}"#]).status.code(), Some(3));
    assert_eq!(quadric(&["classify", r#"{"b":[0]}"#]).status.code(), Some(3));
    assert_eq!(quadric(&["classify", "/no/such/file.json"]).status.code(), Some(3));
    assert_eq!(quadric(&["classify", "--tol", "-1", SPHERE]).status.code(), Some(3));
    assert_eq!(quadric(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(quadric(&["scan", "--dirs", "many"]).status.code(), Some(3));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(quadric(&["--help"]).status.code(), Some(0));
    assert_eq!(quadric(&["--version"]).status.code(), Some(0));
    assert_eq!(quadric(&["scan", "--help"]).status.code(), Some(0));
}

#[test]
fn point_on_hyperplane_exits_four() {
    let input = r#"{"E1":[[0,1,0]],"E2":[[1,0,0]],
        "H1":{"u":[1,0,0],"delta":0},"H2":{"u":[0,1,0],"delta":0},"v":[0,1,1]}"#;
    let out = quadric(&["pencil", input]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("v on H1 or H2"));
}

#[test]
fn canonical_round_trip_is_byte_stable() {
    // a rotated, shifted and rescaled hyperboloid of one sheet
    let input = r#"{"A":[[2.0,0.6,0.0],[0.6,-1.0,0.3],[0.0,0.3,0.5]],"b":[0.4,-0.2,1.0],"c":-3.0}"#;
    let first = json(&quadric(&["canonical", input]));

    let eq = quadric(&["canonical", "--inverse", &first.to_string()]);
    let second_out = quadric(&["canonical", std::str::from_utf8(&eq.stdout).unwrap()]);
    let second = json(&second_out);
    for key in ["family", "n", "k", "r", "a"] {
        assert_eq!(first[key], second[key], "{key}");
    }

    // from here on the form is a fixed point, byte for byte
    let eq2 = quadric(&["canonical", "--inverse", std::str::from_utf8(&second_out.stdout).unwrap()]);
    let third_out = quadric(&["canonical", std::str::from_utf8(&eq2.stdout).unwrap()]);
    assert_eq!(second_out.stdout, third_out.stdout);
}

#[test]
fn ambient_inverse_recovers_input_up_to_scale() {
    let input = r#"{"A":[[1.0,0.5],[0.5,2.0]],"b":[1.0,0.0],"c":-4.0}"#;
    let form = json(&quadric(&["canonical", input]));
    let back = json(&quadric(&["canonical", "--inverse", "--ambient", &form.to_string()]));
    let orig: Value = serde_json::from_str(input).unwrap();
    let flat = |v: &Value| -> Vec<f64> {
        let mut out: Vec<f64> = v["A"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap().clone()).map(|x| x.as_f64().unwrap()).collect();
        out.extend(v["b"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()));
        out.push(v["c"].as_f64().unwrap());
        out
    };
    for (a, b) in flat(&orig).iter().zip(flat(&back)) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn section_of_sphere_is_a_circle() {
    let input = format!(r#"{{"quadric":{SPHERE},"hyperplane":{{"u":[0,0,1],"delta":0.6}}}}"#);
    let v = json(&quadric(&["section", &input]));
    assert_eq!(v["empty"], false);
    assert_eq!(v["degenerate_to_plane"], false);
    // restricted equation y₁² + y₂² − 0.64 = 0
    assert!((v["coeffs"]["c"].as_f64().unwrap() + 0.64).abs() < 1e-12);
}

#[test]
fn revolve_reads_stdin() {
    let input = r#"{"points":[[0.6,0.8,0.0]],
        "spec":{"L1_basis":[[1,0,0]],"L2_basis":[[1,0,0],[0,1,0]],"L3_basis":[[1,0,0],[0,1,0],[0,0,1]]},
        "samples_per_circle":12}"#;
    let v = json(&with_stdin(&["revolve"], input));
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 12);
    for p in pts {
        let n2: f64 = p.as_array().unwrap().iter().map(|x| x.as_f64().unwrap().powi(2)).sum();
        assert!((n2 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn scan_ellipsoid_with_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("dirs.csv");
    let report = dir.path().join("report.json");
    let input = r#"{"body":{"kind":"quadric","shape":"ellipsoid","coeffs":[1.0,2.0,0.5]},
        "delta":{"kind":"constant","delta":0.2}}"#;
    let out = quadric(&[
        "scan", "--dirs", "60", "--seed", "3", "--workers", "2",
        "--csv", csv.to_str().unwrap(), "--output", report.to_str().unwrap(), input,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["verdict"]["kind"], "all_quadric");
    assert_eq!(v["n_dirs"], 60);
    assert_eq!(v["errors"], 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("index,u1,u2,u3,delta,status"));
    assert_eq!(text.lines().count(), 61);
}

#[test]
fn scan_flags_perturbed_body() {
    let input = r#"{"body":{"kind":"perturbed","semi_axes":[1.0,1.2,0.9],"epsilon":0.1},
        "delta":{"kind":"constant","delta":0.0}}"#;
    let v = json(&quadric(&["scan", "--dirs", "40", input]));
    assert_eq!(v["verdict"]["kind"], "violation");
}

#[test]
fn sample_points_lie_on_section() {
    let input = r#"{"body":{"kind":"quadric","shape":"ellipsoid","coeffs":[1,1,1]},
        "hyperplane":{"u":[0,0,1],"delta":0.0},"m":8}"#;
    let v = json(&quadric(&["sample", "--seed", "9", input]));
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 8);
    for p in pts {
        let p: Vec<f64> = p.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(p[2].abs() < 1e-12);
        assert!((p.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let miss = r#"{"body":{"kind":"quadric","shape":"ellipsoid","coeffs":[1,1,1]},
        "hyperplane":{"u":[0,0,1],"delta":2.0},"m":8}"#;
    assert_eq!(quadric(&["sample", miss]).status.code(), Some(4));
}
