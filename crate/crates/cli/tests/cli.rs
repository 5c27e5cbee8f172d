use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use scalelaw_core::{AllocationPlan, CoefficientSet, DivergenceReport, FitResult, LawId};

fn scalelaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scalelaw"))
        .args(args)
        .env_remove("SCALELAW_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = scalelaw(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = scalelaw(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eval_unit_inputs() {
    assert_eq!(stdout(&["eval", "--law", "hoffmann", "--published", "-n", "1", "-d", "1"]), "818.79\n");
    assert_eq!(
        stdout(&["eval", "--law", "generalized", "--published", "-n", "1", "-d", "1", "-s", "0"]),
        "818.79\n"
    );
}

#[test]
fn eval_accepts_suffixes() {
    let a = stdout(&["eval", "--law", "hoffmann", "-n", "70B", "-d", "1.4T"]);
    let b = stdout(&["eval", "--law", "hoffmann", "-n", "70e9", "-d", "1.4e12"]);
    assert_eq!(a, b);
    assert_eq!(a, "1.93665\n");
}

#[test]
fn eval_rejects_full_sparsity() {
    let (rc, err) = code(&["eval", "--law", "generalized", "-n", "1e9", "-d", "1e10", "-s", "1.0"]);
    assert_eq!(rc, 2);
    assert!(err.contains("sparsity out of [0,1)"), "{err}");
}

#[test]
fn flag_errors_are_input_errors() {
    assert_eq!(code(&["eval", "--law", "hoffmann", "-n", "1", "-d", "1", "--bogus"]).0, 3);
    assert_eq!(code(&["eval", "--law", "nope", "-n", "1", "-d", "1"]).0, 3);
    assert_eq!(code(&["eval", "--law", "hoffmann", "-n", "12Q", "-d", "1"]).0, 3);
    assert_eq!(code(&["isoflop", "--law", "hoffmann", "-C", "1e20", "--samples", "1"]).0, 3);
}

#[test]
fn eval_with_coefficient_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    let mut set = scalelaw_core::laws::Hoffmann::PUBLISHED;
    set.e = 2.0;
    fs::write(&file, CoefficientSet::Hoffmann(set).to_json()).unwrap();
    let out = stdout(&["eval", "--law", "hoffmann", "--coeffs", path(&file), "-n", "1", "-d", "1"]);
    assert_eq!(out, "819.1\n");
    assert_eq!(code(&["eval", "--law", "kaplan", "--coeffs", path(&file), "-n", "1", "-d", "1"]).0, 3);
}

#[test]
fn plan_generalized_dense_matches_hoffmann() {
    let g: AllocationPlan = serde_json::from_str(&stdout(&[
        "plan",
        "--law",
        "generalized",
        "--published",
        "-C",
        "1e20",
        "-s",
        "0",
    ]))
    .unwrap();
    let h: AllocationPlan =
        serde_json::from_str(&stdout(&["plan", "--law", "hoffmann", "-C", "1e20"])).unwrap();
    assert_eq!(g, h);
}

#[test]
fn plan_sparsity_grid() {
    let out = stdout(&["plan", "--law", "generalized", "-C", "1e20", "--sparsity-grid", "0,0.5,0.9,0.98"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["s_best"], 0.98);
    assert_eq!(v["candidates"].as_array().unwrap().len(), 4);
    let plan: AllocationPlan = serde_json::from_value(v["plan"].clone()).unwrap();
    assert!(((6.0 * plan.n_opt * plan.d_opt - 1e20) / 1e20).abs() < 1e-9);
}

#[test]
fn plan_rejects_zero_budget() {
    assert_eq!(code(&["plan", "--law", "hoffmann", "-C", "0"]).0, 2);
}

#[test]
fn isoflop_csv_shows_spike() {
    let out = stdout(&[
        "isoflop", "--law", "frantar", "-C", "1e20", "-s", "0.98", "--n-min", "1e7", "--n-max", "1e10",
        "--format", "csv",
    ]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,d,loss"));
    let losses: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(losses.len(), 256);
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(losses[0] / min > 1.2, "ratio {}", losses[0] / min);
    assert!(losses[losses.len() - 1] > min);
}

#[test]
fn isoflop_svg_parses() {
    let out =
        stdout(&["isoflop", "--law", "generalized", "-C", "1e20", "-s", "0", "-s", "0.9", "--format", "svg"]);
    let doc = roxmltree::Document::parse(&out).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
}

#[test]
fn isoflop_two_sparsities_two_series() {
    let out = stdout(&[
        "isoflop",
        "--law",
        "generalized",
        "-C",
        "1e20",
        "-s",
        "0.5",
        "-s",
        "0.9",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[1]["sparsity"], 0.9);

    let csv = stdout(&[
        "isoflop",
        "--law",
        "generalized",
        "-C",
        "1e20",
        "-s",
        "0.5",
        "-s",
        "0.9",
        "--format",
        "csv",
    ]);
    let mut series: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    series.dedup();
    assert_eq!(series, ["0.5", "0.9"]);
}

#[test]
fn compare_reports() {
    let report = |a: &str, b: &str, grid: &str| -> DivergenceReport {
        serde_json::from_str(&stdout(&["compare", "--law-a", a, "--law-b", b, "--grid", grid, "-s", "0"]))
            .unwrap()
    };
    assert!(report("generalized", "hoffmann", "hoffmann9").max_abs_diff <= 1e-12);
    assert!(report("frantar_reform", "hoffmann", "hoffmann9").max_abs_diff > 1.0);
    assert!(report("abnar", "hoffmann", "abnar35").max_abs_diff > 0.0);
}

#[test]
fn tables_round_trip_as_coefficient_documents() {
    let out = stdout(&["tables"]);
    let tables: Vec<serde_json::Value> = serde_json::from_str(&out).unwrap();
    assert_eq!(tables.len(), 6);
    for (t, law) in tables.iter().zip(LawId::ALL) {
        let set: CoefficientSet = serde_json::from_value(t.clone()).unwrap();
        assert_eq!(set, scalelaw_core::published_coefficients(law));
    }
    assert!(out.contains("\"a\": 16612.50"));
    assert!(out.contains("\"a_D\": 6.90e8"));
}

fn write_space(dir: &Path) -> std::path::PathBuf {
    // 3 points per dimension put the middle point on the truth
    let space = r#"{
        "e": {"lower": 0.845, "upper": 2.535, "scale": "linear"},
        "a": {"lower": 203.2, "upper": 812.8, "scale": "log"},
        "b": {"lower": 205.35, "upper": 821.4, "scale": "log"},
        "alpha": {"lower": 0.17, "upper": 0.51, "scale": "linear"},
        "beta": {"lower": 0.14, "upper": 0.42, "scale": "linear"}
    }"#;
    let file = dir.join("space.json");
    fs::write(&file, space).unwrap();
    file
}

#[test]
fn fit_grid_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("r.csv");
    let synth = stdout(&["synth", "--law", "hoffmann", "--grid", "hoffmann9"]);
    fs::write(&records, synth).unwrap();
    let space = write_space(dir.path());
    let trace = dir.path().join("trace.csv");
    let out = stdout(&[
        "fit",
        "--law",
        "hoffmann",
        "--records",
        path(&records),
        "--space",
        path(&space),
        "--method",
        "grid",
        "--points-per-dim",
        "3",
        "--trace",
        path(&trace),
    ]);
    let fit = FitResult::from_json(&out).unwrap();
    assert!(fit.objective <= 1e-6, "{}", fit.objective);
    assert_eq!(fit.evaluations, 243);
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count(), 244);
}

#[test]
fn fit_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("r.csv");
    fs::write(&records, stdout(&["synth", "--law", "hoffmann", "--grid", "hoffmann9", "--noise", "0.05"]))
        .unwrap();
    let args = [
        "fit",
        "--law",
        "hoffmann",
        "--records",
        path(&records),
        "--method",
        "smbo",
        "--budget",
        "60",
        "--seed",
        "3",
    ];
    assert_eq!(stdout(&args), stdout(&args));
    let refined = stdout(&[
        "fit",
        "--law",
        "hoffmann",
        "--records",
        path(&records),
        "--method",
        "random",
        "--budget",
        "50",
        "--refine",
    ]);
    let fit = FitResult::from_json(&refined).unwrap();
    assert_eq!(fit.method, "random+local_refine");
    assert!(fit.evaluations > 50);
}

#[test]
fn seed_env_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("r.csv");
    fs::write(&records, stdout(&["synth", "--law", "hoffmann", "--grid", "hoffmann9", "--noise", "0.05"]))
        .unwrap();
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_scalelaw"));
        cmd.args([
            "fit",
            "--law",
            "hoffmann",
            "--records",
            path(&records),
            "--method",
            "random",
            "--budget",
            "20",
        ]);
        cmd.args(extra);
        match env {
            Some(v) => cmd.env("SCALELAW_SEED", v),
            None => cmd.env_remove("SCALELAW_SEED"),
        };
        FitResult::from_json(&String::from_utf8(cmd.output().unwrap().stdout).unwrap()).unwrap().seed
    };
    assert_eq!(run(None, &[]), Some(0));
    assert_eq!(run(Some("9"), &[]), Some(9));
    assert_eq!(run(Some("9"), &["--seed", "4"]), Some(4));
}

#[test]
fn fit_reports_bad_records() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("r.csv");
    fs::write(&records, "n_active,d_tokens,loss\n1e9,2e10,2.5\n").unwrap();
    let (rc, err) = code(&["fit", "--law", "hoffmann", "--records", path(&records)]);
    assert_eq!(rc, 3);
    assert!(err.contains("sparsity"), "{err}");
    assert_eq!(code(&["fit", "--law", "hoffmann", "--records", "/nonexistent.csv"]).0, 3);
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("grid.csv");
    stdout(&["grid", "--source", "frantar48", "-o", path(&file)]);
    let text = fs::read_to_string(&file).unwrap();
    assert_eq!(text.lines().count(), 49);
}

#[test]
fn workers_do_not_change_results() {
    let a = stdout(&["isoflop", "--law", "abnar", "-C", "1e21", "-s", "0.9", "--workers", "1"]);
    let b = stdout(&["isoflop", "--law", "abnar", "-C", "1e21", "-s", "0.9", "--workers", "3"]);
    assert_eq!(a, b);
}
