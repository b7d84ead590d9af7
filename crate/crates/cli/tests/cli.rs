use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_concordia")).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn validated(schema: &str, text: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{schema}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let instance: Value = serde_json::from_str(text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}\n{text}");
    instance
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn estimate_extremes() {
    let out = run_ok(&["estimate", "--input", fixture("comonotone3.csv").to_str().unwrap(), "--generator", "spearman"]);
    let v = validated("estimate", &out);
    assert_eq!(v["kappa_hat"], 1.0);
    assert_eq!(v["exact"]["kappa_hat"], "1");
    assert_eq!(v["exact"]["m_form"], "7/24");
    assert_eq!(v["n"], 3);

    for generator in ["spearman", "gini", "eq:0.3"] {
        let out = run_ok(&["estimate", "--input", fixture("countermonotone12.csv").to_str().unwrap(), "--generator", generator]);
        let v = validated("estimate", &out);
        assert_eq!(v["exact"]["kappa_hat"], "-1", "{generator}");
        assert_eq!(v["generator"], generator);
    }
}

#[test]
fn estimate_error_exit_codes() {
    let out = run(&["estimate", "--input", fixture("bad_line7.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 7"));

    let out = run(&["estimate", "--input", fixture("single_row.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["estimate", "--input", fixture("three_rows.csv").to_str().unwrap(), "--generator", fixture("e.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&["estimate", "--input", fixture("three_rows.csv").to_str().unwrap(), "--generator", "kendall"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn estimate_csv_format() {
    let out = run_ok(&["estimate", "--input", fixture("comonotone3.csv").to_str().unwrap(), "--format", "csv"]);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let kappa = headers.iter().position(|h| h == "kappa_hat").unwrap();
    assert_eq!(row[kappa].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn exact_values() {
    let kappa = |copula: &str, generator: &str| {
        let out = run_ok(&["exact", "--copula", fixture(copula).to_str().unwrap(), "--generator", generator]);
        f(&validated("exact", &out)["kappa"])
    };
    assert!((kappa("m.json", "spearman") - 1.0).abs() < 1e-12);
    assert!(kappa("e.json", "spearman").abs() < 1e-12);
    assert!((kappa("m_pi_mixture.json", "gini") - 0.5).abs() < 1e-12);
    assert!((kappa("pi.json", "gini")).abs() < 1e-12);
}

/// Bilinear interpolation of a grid's cumulative mass, independent of the library.
fn grid_cdf(m: usize, mass: &[f64], x: f64, y: f64) -> f64 {
    let corner = |i: usize, j: usize| -> f64 { (0..i).flat_map(|a| (0..j).map(move |b| (a, b))).map(|(a, b)| mass[a * m + b]).sum() };
    let (sx, sy) = (x * m as f64, y * m as f64);
    let (i, j) = ((sx.floor() as usize).min(m - 1), (sy.floor() as usize).min(m - 1));
    let (fx, fy) = (sx - i as f64, sy - j as f64);
    corner(i, j) * (1.0 - fx) * (1.0 - fy)
        + corner(i + 1, j) * fx * (1.0 - fy)
        + corner(i, j + 1) * (1.0 - fx) * fy
        + corner(i + 1, j + 1) * fx * fy
}

#[test]
fn exact_grid_matches_quadrature() {
    let spec: Value = serde_json::from_str(&std::fs::read_to_string(fixture("m_pi_grid16.json")).unwrap()).unwrap();
    let m = spec["m"].as_u64().unwrap() as usize;
    let mass: Vec<f64> = spec["mass"].as_array().unwrap().iter().map(f).collect();
    // [C, (M+W)/2] = (1/2) ∫ C(t,t) dt + (1/2) ∫ C(t,1-t) dt, by the midpoint rule.
    let steps = 64_000;
    let h = 1.0 / steps as f64;
    let integral: f64 = (0..steps)
        .map(|k| {
            let t = (k as f64 + 0.5) * h;
            0.5 * (grid_cdf(m, &mass, t, t) + grid_cdf(m, &mass, t, 1.0 - t)) * h
        })
        .sum();
    let out = run_ok(&["exact", "--copula", fixture("m_pi_grid16.json").to_str().unwrap(), "--generator", "gini"]);
    let v = validated("exact", &out);
    assert!((f(&v["biconvex"]) - integral).abs() < 1e-8);
    assert!((f(&v["kappa"]) - (8.0 * integral - 2.0)).abs() < 1e-7);
    // The checkerboard of M loses a little concordance, so the value sits just below 1/2.
    assert!(f(&v["kappa"]) < 0.5 && f(&v["kappa"]) > 0.45);
}

#[test]
fn exact_discretized_route() {
    let out = run_ok(&["exact", "--copula", fixture("m_pi_grid16.json").to_str().unwrap(), "--resolution", "16"]);
    let v = validated("exact", &out);
    assert_eq!(v["method"], "discretized");
}

#[test]
fn check_invariance_and_axioms() {
    let out = run_ok(&["check", "--copula", fixture("e.json").to_str().unwrap(), "--subgroup", "Gamma"]);
    let v = validated("check", &out);
    assert_eq!(v["invariant"], true);
    assert!(v["axioms"].is_null());

    let out = run_ok(&["check", "--copula", fixture("m_pi_mixture.json").to_str().unwrap(), "--subgroup", "GammaPi", "--generator", "gini"]);
    let v = validated("check", &out);
    assert_eq!(v["axioms"]["passed"], true);

    let out = run(&["check", "--copula", fixture("m.json").to_str().unwrap(), "--subgroup", "Gamma"]);
    assert_eq!(out.status.code(), Some(1));
    let v = validated("check", &String::from_utf8(out.stdout).unwrap());
    assert_eq!(v["invariant"], false);
    assert!(f(&v["max_deviation"]) > 0.1);

    let out = run(&["check", "--copula", fixture("m.json").to_str().unwrap(), "--subgroup", "Delta"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn minimal_sample_sizes() {
    let na = |g: &str| validated("na", &run_ok(&["na", "--generator", g]))["n_a"].as_u64().unwrap();
    assert_eq!(na("eq:0.5"), 2);
    assert_eq!(na("spearman"), 2);
    assert_eq!(na("gini"), 2);
    assert_eq!(na(fixture("gini_generator.json").to_str().unwrap()), 2);
    assert!(na(fixture("e.json").to_str().unwrap()) >= 4);
}

fn study(args: &[&str], threads: Option<&str>) -> String {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_concordia"));
    cmd.arg("study").arg("--input").arg(fixture("study.json")).args(args);
    if let Some(t) = threads {
        cmd.env("CONCORDIA_THREADS", t);
    }
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn study_report_is_schema_stable_and_thread_independent() {
    let text = study(&[], None);
    let v = validated("study", &text);
    assert_eq!(v["records"].as_array().unwrap().len(), 16);
    assert!((f(&v["target_kappa"]) - 0.7).abs() < 1e-12);
    assert_eq!(text, study(&[], Some("1")));
    assert_ne!(text, study(&["--seed", "7"], None));
}

#[test]
fn study_round_trips_through_sample_and_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let config: Value = serde_json::from_str(&std::fs::read_to_string(fixture("study.json")).unwrap()).unwrap();
    let copula_path = dir.path().join("copula.json");
    std::fs::write(&copula_path, config["copula"].to_string()).unwrap();
    let report_path = dir.path().join("report.json");
    study(&["--out", report_path.to_str().unwrap()], None);
    let report = validated("study", &std::fs::read_to_string(&report_path).unwrap());

    let resolution = config["resolution"].to_string();
    for record in report["records"].as_array().unwrap().iter().step_by(3) {
        let csv_path = dir.path().join("sample.csv");
        run_ok(&[
            "sample",
            "--copula",
            copula_path.to_str().unwrap(),
            "--n",
            &record["n"].to_string(),
            "--seed",
            &record["seed"].to_string(),
            "--resolution",
            &resolution,
            "--out",
            csv_path.to_str().unwrap(),
        ]);
        let out = run_ok(&["estimate", "--input", csv_path.to_str().unwrap(), "--generator", "spearman"]);
        let estimate = validated("estimate", &out);
        assert_eq!(estimate["kappa_hat"].to_string(), record["kappa_hat"].to_string());
    }
}

#[test]
fn csv_study_output() {
    let text = study(&["--format", "csv"], None);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["n", "replication", "seed", "kappa_hat", "error"]);
    assert_eq!(rdr.records().count(), 16);
}
