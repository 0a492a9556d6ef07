use std::fs;
use std::path::Path;

use serde_json::Value;
use tuckreg::cli::run;

fn tuckreg(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["tuckreg"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn bound_reports_hand_computed_values() {
    let (code, out, _) = tuckreg(&["bound", "--dims", "50,50,30", "--rank", "3,3,3", "--sparsity", "6,6,4"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let g = 27.0 * 24f64.ln() + 48.0 * 1200f64.ln();
    let m = 75.0 * 450f64.ln().powi(2) / 0.25;
    assert!((v["log_cover_g"].as_f64().unwrap() - g).abs() <= 1e-12 * g);
    assert!((v["sample_complexity"].as_f64().unwrap() - m).abs() <= 1e-12 * m);
    assert_eq!(v["dof_comparison"]["structured_dof"], 81.0);
    assert_eq!(v["dof_comparison"]["tucker_dof"], 477.0);
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bound.json");
    fs::write(&cfg, r#"{"dims": [50, 50, 30], "rank": [3, 3, 3], "sparsity": [6, 6, 4], "delta": 0.25}"#).unwrap();
    let (code, out, err) = tuckreg(&["bound", "--config", p(&cfg)]);
    assert_eq!(code, 0, "{err}");
    let quarter = json(&out)["sample_complexity"].as_f64().unwrap();
    // command-line flags win over the file
    let (_, out, _) = tuckreg(&["bound", "--config", p(&cfg), "--delta", "0.5"]);
    let half = json(&out)["sample_complexity"].as_f64().unwrap();
    assert!((quarter / half - 4.0).abs() < 1e-12);
}

#[test]
fn generate_fit_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model");
    let model2 = dir.path().join("model2");
    let data = dir.path().join("data");
    let fit = dir.path().join("fit");
    let structure = ["--dims", "6,6,6", "--rank", "2,2,2", "--sparsity", "3,3,3"];
    let gen = |out: &Path| {
        let mut args = vec!["gen", "model", "--seed", "3", "--out", p(out)];
        args.extend_from_slice(&structure);
        tuckreg(&args)
    };
    assert_eq!(gen(&model).0, 0);
    assert_eq!(gen(&model2).0, 0);
    for f in ["core.tnsr", "factor_1.tnsr", "factor_2.tnsr", "factor_3.tnsr", "manifest.json"] {
        assert_eq!(fs::read(model.join(f)).unwrap(), fs::read(model2.join(f)).unwrap(), "{f}");
    }

    let (code, _, err) = tuckreg(&["gen", "data", "--model", p(&model), "--m", "180", "--seed", "4", "--out", p(&data)]);
    assert_eq!(code, 0, "{err}");
    let (code, out, err) = tuckreg(&[
        "fit", "--data", p(&data), "--rank", "2,2,2", "--sparsity", "3,3,3", "--out", p(&fit),
    ]);
    assert_eq!(code, 0, "{err}");
    let report = json(&out);
    assert!(report["normalized_error"].as_f64().unwrap() < 1e-3);
    assert!(fit.join("estimate.tnsr").is_file());
    assert!(fit.join("report.json").is_file());

    let (code, out, _) = tuckreg(&["eval", "error", "--truth", p(&model), "--estimate", p(&fit)]);
    assert_eq!(code, 0);
    let e = json(&out)["normalized_error"].as_f64().unwrap();
    assert!((e - report["normalized_error"].as_f64().unwrap()).abs() < 1e-15);
}

#[test]
fn classify_reports_rates() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("p.txt");
    let labels = dir.path().join("l.txt");
    fs::write(&preds, "0.9 0.2\n0.8, 0.7").unwrap();
    fs::write(&labels, "1 0 1 0").unwrap();
    let (code, out, _) = tuckreg(&["eval", "classify", "--predictions", p(&preds), "--labels", p(&labels)]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["sensitivity"], 1.0);
    assert_eq!(v["specificity"], 0.5);
    assert!((v["harmonic_mean"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn exit_codes_separate_usage_from_runtime_errors() {
    assert_eq!(tuckreg(&["bogus"]).0, 2);
    assert_eq!(tuckreg(&["bound", "--dims", "5"]).0, 2);
    // sparsity larger than the dimension is invalid input
    assert_eq!(tuckreg(&["bound", "--dims", "5", "--rank", "1", "--sparsity", "6"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let (code, _, err) = tuckreg(&["eval", "error", "--truth", p(&missing), "--estimate", p(&missing)]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"));
    assert_eq!(tuckreg(&["--help"]).0, 0);
}
