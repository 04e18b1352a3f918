use std::fs;
use std::path::{Path, PathBuf};

use tachibana::cli::{run_with, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK};
use tachibana::invariants::InvariantReport;

const TORUS2: &str = r#"{"kind":"flat_torus","dims":2,"periods":[6.283185307179586,6.283185307179586]}"#;
const TORUS3: &str = r#"{"kind":"flat_torus","dims":3,"periods":[6.283185307179586,6.283185307179586,6.283185307179586]}"#;
const SPHERE: &str = r#"{"kind":"conformal_sphere"}"#;

fn manifold(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut full = vec!["tachibana"];
    full.extend_from_slice(args);
    let code = run_with(full, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn report(path: &Path) -> InvariantReport {
    InvariantReport::from_json(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn torus_invariants_report() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifold(dir.path(), "t2.json", TORUS2);
    let out = dir.path().join("rep.json");
    let (code, _) = run(&[
        "invariants", "--manifold", m.to_str().unwrap(), "--r", "1", "--cutoff", "4", "--resolution", "16", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let rep = report(&out);
    assert_eq!(rep.numbers.values(), (2, 2, 2, 2, 2));
    assert!(rep.certifying);
    assert!(fs::read_to_string(&out).unwrap().contains("\"yano_report_v1\""));
}

#[test]
fn sphere_invariants_report() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifold(dir.path(), "s2.json", SPHERE);
    let (code, text) = run(&["invariants", "--manifold", m.to_str().unwrap(), "--r", "1", "--cutoff", "8", "--resolution", "24"]);
    assert_eq!(code, EXIT_OK);
    let rep = InvariantReport::from_json(&text).unwrap();
    let (b, t, k, p, _) = rep.numbers.values();
    assert_eq!((b, t, k, p), (0, 6, 3, 3));
}

#[test]
fn missing_manifold_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rep.json");
    let missing = dir.path().join("nope.json");
    let (code, _) = run(&["invariants", "--manifold", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(!out.exists());
}

#[test]
fn malformed_inputs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = manifold(dir.path(), "bad.json", r#"{"kind":"flat_torus","dims":2,"periods":[1.0]}"#);
    assert_eq!(run(&["invariants", "--manifold", bad.to_str().unwrap()]).0, EXIT_CONFIG);
    let m = manifold(dir.path(), "t2.json", TORUS2);
    let low = run(&["invariants", "--manifold", m.to_str().unwrap(), "--cutoff", "4", "--resolution", "3"]);
    assert_eq!(low.0, EXIT_CONFIG);
    assert_eq!(run(&["invariants", "--manifold", m.to_str().unwrap(), "--r", "3"]).0, EXIT_CONFIG);
    assert_eq!(run(&["frobnicate"]).0, EXIT_CONFIG);
}

#[test]
fn spectrum_csv() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifold(dir.path(), "s2.json", SPHERE);
    let (code, csv) = run(&["spectrum", "--manifold", m.to_str().unwrap(), "--r", "1", "--cutoff", "6", "--which", "hodge"]);
    assert_eq!(code, EXIT_OK);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,eigenvalue"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    assert!((values[0] - 2.0).abs() < 1e-8);

    let m = manifold(dir.path(), "t3.json", TORUS3);
    let (_, csv) = run(&["spectrum", "--manifold", m.to_str().unwrap(), "--r", "2", "--cutoff", "1"]);
    let near_zero = csv.lines().skip(1).filter(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() < 1e-9).count();
    assert_eq!(near_zero, 3);

    let (code, _) = run(&["spectrum", "--manifold", m.to_str().unwrap(), "--which", "nonsense"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn multi_degree_jobs_write_one_file_per_degree() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifold(dir.path(), "t3.json", TORUS3);
    let out = dir.path().join("t3.json.out");
    let (code, _) = run(&["invariants", "--manifold", m.to_str().unwrap(), "--cutoff", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    for r in [1, 2] {
        let rep = report(&dir.path().join(format!("t3.json_r{r}.out")));
        assert_eq!(rep.r, r);
        assert!(rep.duality.unwrap().holds());
    }
}

#[test]
fn table_marks_ambiguous_cells() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifold(dir.path(), "t2.json", TORUS2);
    let good = dir.path().join("good.json");
    let vague = dir.path().join("vague.json");
    let ms = m.to_str().unwrap();
    assert_eq!(run(&["invariants", "--manifold", ms, "--out", good.to_str().unwrap()]).0, EXIT_OK);
    let (table, code) = {
        let (c, t) = run(&["table", good.to_str().unwrap()]);
        (t, c)
    };
    assert_eq!(code, EXIT_OK);
    assert!(!table.contains('?'));

    let code = run(&["invariants", "--manifold", ms, "--gap-min", "1e300", "--out", vague.to_str().unwrap()]).0;
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(!report(&vague).certifying);
    let (code, table) = run(&["table", good.to_str().unwrap(), vague.to_str().unwrap()]);
    assert_ne!(code, EXIT_OK);
    assert!(table.contains('?'), "{table}");
}

#[test]
fn verify_passes_on_models() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [("t2.json", TORUS2), ("s2.json", SPHERE)] {
        let m = manifold(dir.path(), name, body);
        let (code, text) = run(&["verify", "--manifold", m.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK, "{text}");
        assert!(text.contains("PASS") && !text.contains("FAIL"));
    }
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifold(dir.path(), "s2.json", SPHERE);
    let args = ["invariants", "--manifold", m.to_str().unwrap(), "--cutoff", "6"];
    let (_, a) = run(&args);
    let (_, b) = run(&args);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}
