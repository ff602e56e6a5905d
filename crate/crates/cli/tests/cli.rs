use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const HYPERBOLA: &str =
    r#""variety": {"label": "xy=1", "r": 2, "polynomials": ["x1*x2 - 1"], "dim": 1, "deg": 2}"#;

fn lehmer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lehmer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn run_to(dir: &TempDir, config: &str, format: &str, extra: &[&str]) -> (Output, String) {
    let out = dir.path().join(format!("out.{format}"));
    let out_s = out.to_string_lossy().into_owned();
    let mut args = vec!["run", "--config", config, "--out", &out_s, "--format", format];
    args.extend_from_slice(extra);
    let status = lehmer(&args);
    let text = std::fs::read_to_string(&out).unwrap_or_default();
    (status, text)
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = vec![reader
        .headers()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect()];
    for rec in reader.records() {
        rows.push(rec.unwrap().iter().map(str::to_string).collect());
    }
    rows
}

#[test]
fn visible_on_hyperbola_mod_7() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "v.json",
        &format!(r#"{{ {HYPERBOLA}, "primes": [7], "task": {{"kind": "visible"}} }}"#),
    );
    let (status, text) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    let rows = csv_rows(&text);
    assert_eq!(rows[0][3], "exact");
    assert_eq!(rows[1][1], "7");
    assert_eq!(rows[1][3], "3");
    assert!(!rows[1][8].is_empty(), "budget_formula tag present");
}

#[test]
fn json_output_has_report_fields() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "v.json",
        &format!(r#"{{ {HYPERBOLA}, "primes": {{"from": 5, "to": 13}}, "task": {{"kind": "visible"}} }}"#),
    );
    let (status, text) = run_to(&dir, &cfg, "json", &[]);
    assert_eq!(status.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let results = doc["results"].as_array().unwrap();
    assert_eq!(results.len(), 4);
    for field in [
        "label",
        "p",
        "kind",
        "exact",
        "main_term",
        "deviation",
        "budget",
        "normalized",
        "budget_formula",
    ] {
        assert!(results[0].get(field).is_some(), "missing {field}");
    }
    assert_eq!(results[1]["p"], 7);
    assert_eq!(results[1]["exact"], 3);
}

#[test]
fn classical_ladder_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "l.json",
        r#"{"primes": {"from": 3, "to": 4999}, "task": {"kind": "ladder", "quantity": "lehmer-classical"}}"#,
    );
    let (status, text) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(0));
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["p", "count", "main_term", "deviation", "budget", "budget_formula"]);
    let r13 = rows.iter().find(|r| r[0] == "13").unwrap();
    assert_eq!(r13[1], "6");
    assert_eq!(rows.last().unwrap()[0], "4999");
    for row in &rows[1..] {
        let dev: f64 = row[3].parse().unwrap();
        let budget: f64 = row[4].parse().unwrap();
        assert!(dev.abs() <= budget, "p={}", row[0]);
    }
}

#[test]
fn malformed_polynomial_exits_1_with_position() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{"variety": {"label": "bad", "r": 2, "polynomials": ["x1 * * x2"], "dim": 1, "deg": 2},
            "primes": [7], "task": {"kind": "points"}}"#,
    );
    let (status, _) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&status.stderr);
    assert!(stderr.contains("position"), "{stderr}");
}

#[test]
fn unknown_keys_exit_1() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bad.json",
        &format!(r#"{{ {HYPERBOLA}, "primes": [7], "colour": "red", "task": {{"kind": "visible"}} }}"#),
    );
    let (status, _) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(1));
}

#[test]
fn composite_prime_exits_1() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bad.json",
        &format!(r#"{{ {HYPERBOLA}, "primes": [9], "task": {{"kind": "visible"}} }}"#),
    );
    let (status, _) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(1));
}

#[test]
fn single_threaded_output_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "e.json",
        r#"{"variety": {"label": "z=xy", "r": 3, "polynomials": ["x3 - x1*x2"], "dim": 2, "deg": 2},
            "primes": [11, 13], "task": {"kind": "expsum", "u": {"sample": 25}, "bound": "katz", "delta_assert": -1}}"#,
    );
    let (first, a) = run_to(&dir, &cfg, "json", &["--threads", "1", "--seed", "9"]);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let (_, b) = run_to(&dir, &cfg, "json", &["--threads", "1", "--seed", "9"]);
    assert_eq!(a, b);
    let (_, c) = run_to(&dir, &cfg, "json", &["--threads", "1", "--seed", "10"]);
    assert_ne!(a, c);
    let doc: serde_json::Value = serde_json::from_str(&a).unwrap();
    let results = doc["results"].as_array().unwrap();
    assert_eq!(results.len(), 50);
    for rec in results {
        assert_eq!(rec["bound_kind"], "katz");
        assert!(rec["ratio"].as_f64().unwrap() <= 1.0);
    }
}

#[test]
fn kloosterman_full_sweep() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "k.json",
        &format!(
            r#"{{ {HYPERBOLA}, "primes": [7], "task": {{"kind": "expsum", "u": "all", "bound": "weil-kloosterman"}} }}"#
        ),
    );
    let (status, text) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(0));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1 + 49);
    assert_eq!(rows[1][2], "0;0");
    assert_eq!(rows[1][8], "trivial");
    let one_one = rows.iter().find(|r| r[2] == "1;1").unwrap();
    let re: f64 = one_one[3].parse().unwrap();
    let oracle = 4.0 * (std::f64::consts::TAU / 7.0).cos() + 2.0 * (2.0 * std::f64::consts::TAU / 7.0).cos();
    assert!((re - oracle).abs() < 1e-9);
    assert!(rows[2..].iter().all(|r| r[8] == "weil-kloosterman" && r[7].parse::<f64>().unwrap() <= 1.0));
}

#[test]
fn lemma1_task() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "l1.json",
        r#"{"primes": [5, 101], "region": [["0", "2/5"]], "task": {"kind": "lemma1", "a": 1, "b": 0}}"#,
    );
    let (status, text) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(0));
    let rows = csv_rows(&text);
    let total: f64 = rows[1][5].parse().unwrap();
    assert!((total - 4.472_135_955).abs() < 1e-8);
    assert_eq!(rows[1][7], "true");

    let cfg = write_config(
        &dir,
        "l2.json",
        r#"{"primes": [5], "task": {"kind": "lemma1", "a": 10, "b": 3}}"#,
    );
    let (status, _) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(1));
}

#[test]
fn family_sweep_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "f.json",
        r#"{"variety": {"label": "xy-c", "r": 2, "polynomials": ["x1*x2"], "dim": 1, "deg": 2},
            "primes": [7], "task": {"kind": "family", "sieve_k": 2}}"#,
    );
    let (status, text) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&status.stderr);
    assert!(stderr.contains("sieve mass 15"), "{stderr}");
    let rows = csv_rows(&text);
    assert_eq!(
        rows[0],
        ["p", "c", "points", "visible", "deviation", "total_deviation", "averaging_budget", "budget_formula"]
    );
    assert_eq!(&rows[1][1..4], ["0", "13", "2"]);
    for row in &rows[2..8] {
        assert_eq!(row[2], "6");
    }
    assert_eq!(&rows[8][1..3], ["total", "49"]);
    assert_eq!(rows[9][1], "sieve-mass(k=2)");
}

#[test]
fn family_scale_guard() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "big.json",
        r#"{"variety": {"label": "big", "r": 4, "polynomials": ["x1"], "dim": 3, "deg": 1},
            "primes": [401], "task": {"kind": "family"}}"#,
    );
    let (status, _) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&status.stderr).contains("scale guard"));
}

#[test]
fn points_dump_writes_side_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "p.json",
        &format!(r#"{{ {HYPERBOLA}, "primes": [7], "task": {{"kind": "points", "dump": true}} }}"#),
    );
    let (status, text) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(0));
    assert_eq!(csv_rows(&text)[1][3], "6");
    let dump = std::fs::read_to_string(Path::new(dir.path()).join("out.points-p7.csv")).unwrap();
    assert_eq!(dump, "x1,x2\n1,1\n2,4\n3,5\n4,2\n5,3\n6,6\n");

    let status = lehmer(&["run", "--config", &cfg]);
    assert_eq!(status.status.code(), Some(1));
}

#[test]
fn lang_weil_ladder_task() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "lw.json",
        r#"{"variety": {"label": "y^2=x^3+x", "r": 2, "polynomials": ["x2^2 - x1^3 - x1"], "dim": 1, "deg": 3},
            "primes": {"from": 3, "to": 200}, "task": {"kind": "ladder", "quantity": "lang-weil"}}"#,
    );
    let (status, text) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(0));
    let rows = csv_rows(&text);
    assert_eq!(rows[0].last().unwrap(), "exceeds");
    let p5 = rows.iter().find(|r| r[1] == "5").unwrap();
    assert_eq!(p5[3], "3");
    assert!(!String::from_utf8_lossy(&status.stderr).contains("irreducible"));
}

#[test]
fn lehmer_and_visible_lehmer_tasks() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "lh.json",
        &format!(
            r#"{{ {HYPERBOLA}, "primes": [13], "task": {{"kind": "lehmer", "moduli": [2, 2], "residues": [0, 1]}} }}"#
        ),
    );
    let (status, text) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(0));
    assert_eq!(csv_rows(&text)[1][3], "3");

    let cfg = write_config(
        &dir,
        "vl.json",
        &format!(
            r#"{{ {HYPERBOLA}, "primes": [7], "task": {{"kind": "visible-lehmer", "a": 2, "residues": [1, 1]}} }}"#
        ),
    );
    let (status, text) = run_to(&dir, &cfg, "csv", &[]);
    assert_eq!(status.status.code(), Some(0));
    assert_eq!(csv_rows(&text)[1][3], "3");
}

#[test]
fn selftest_passes_and_fault_is_detected() {
    let ok = lehmer(&["selftest"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = lehmer(&["selftest", "--inject-fault", "moebius"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("Möbius/direct mismatch"));
}
