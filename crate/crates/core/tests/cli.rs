//! End-to-end CLI checks: outputs against golden files, exit codes, and
//! byte stability. Set `VS_UPDATE_GOLDEN=1` to rewrite the goldens.

use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vagueness"))
        .args(args)
        .env_remove("VS_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exited normally")
}

fn golden(name: &str, args: &[&str]) -> String {
    let got = stdout_ok(args);
    let path = golden_path(name);
    if std::env::var_os("VS_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {}", path.display()));
    assert_eq!(got, want, "output of {args:?} differs from {name}");
    got
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn posterior_around_row() {
    let out = golden("posterior_around40.csv", &["posterior", &data("attendance.json"), "around 40"]);
    let col: Vec<&str> = out.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(col, ["0.04", "0.08", "0.12", "0.16", "0.2", "0.16", "0.12", "0.08", "0.04"]);
}

#[test]
fn posterior_vacuous_interval_is_prior() {
    let out = stdout_ok(&["posterior", &data("attendance.json"), "between 0 80", "--format", "json"]);
    let v = json(&out);
    assert_eq!(v["posteriors"][0]["posterior"], v["prior"]);
}

#[test]
fn posterior_exit_codes() {
    assert_eq!(code(&["posterior", &data("attendance.json"), "between 90 100"]), 3);
    assert_eq!(code(&["posterior", &data("attendance.json"), "sort of 40"]), 2);
    assert_eq!(code(&["posterior", &data("missing.json"), "around 40"]), 2);
    assert_eq!(code(&["posterior", &data("attendance.json")]), 2);
}

#[test]
fn schema_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("attendance.json")).unwrap().replace("\"lambda\"", "\"lamda\"");
    let path = dir.path().join("typo.json");
    std::fs::write(&path, text).unwrap();
    let out = run(&["posterior", path.to_str().unwrap(), "around 40"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lamda") && err.contains("line"), "{err}");
}

#[test]
fn speak_attendance() {
    let out = golden("speak_attendance.json", &["speak", &data("attendance.json"), "o1"]);
    let v = json(&out);
    assert_eq!(v["best"]["message"]["label"], "around 40");
    let u = v["best"]["utility"].as_f64().unwrap();
    assert!((u + 0.65).abs() < 0.005);

    let text = stdout_ok(&["speak", &data("attendance.json"), "o1", "--paper-format"]);
    assert!(text.starts_with("best: around 40 (KL 0.65)\n"), "{text}");
}

#[test]
fn speak_soft_two_messages() {
    let out = golden(
        "speak_two_soft.json",
        &["speak", &data("attendance_two.json"), "o1", "--lambda", "1", "--soft"],
    );
    let v = json(&out);
    let d = v["softmax"]["distribution"].as_array().unwrap();
    assert_eq!(d[0]["message"], "around 40");
    assert!((d[0]["prob"].as_f64().unwrap() - 0.560).abs() < 0.005);
    assert!((d[1]["prob"].as_f64().unwrap() - 0.440).abs() < 0.005);
}

#[test]
fn speak_point_mass_and_no_truthful() {
    let v = json(&stdout_ok(&["speak", &data("pointmass.json"), "o"]));
    assert_eq!(v["best"]["message"]["kind"], "exact");
    assert_eq!(v["best"]["utility"], 0);

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("attendance_two.json"))
        .unwrap()
        .replace(r#"["around 40", "between 10 and 70"]"#, r#"["exactly 40", "between 30 and 50"]"#);
    let path = dir.path().join("liar.json");
    std::fs::write(&path, text).unwrap();
    assert_eq!(code(&["speak", path.to_str().unwrap(), "o1"]), 4);
    assert_eq!(code(&["speak", &data("attendance.json"), "nobody"]), 2);
}

#[test]
fn ibr_attendance() {
    let v = json(&stdout_ok(&["ibr", &data("attendance.json"), "--levels", "20", "--mode", "hardmax"]));
    assert_eq!(v["converged"], true);
    assert_eq!(v["fixed_point_check"]["holds"], true);
    assert_eq!(v["pure_fixed_point_sends"][0]["message"], "around 40");

    let v = json(&stdout_ok(&["ibr", &data("attendance.json"), "--levels", "1"]));
    assert_eq!(v["trace"]["levels"].as_array().unwrap().len(), 2);

    let v = json(&stdout_ok(&["ibr", &data("attendance.json"), "--mode", "softmax", "--levels", "200", "--tol", "1e-10"]));
    assert_eq!(v["converged"], true);
    assert_eq!(v["fixed_point_check"]["holds"], true);
}

#[test]
fn ibr_synonyms() {
    let out = golden("ibr_synonyms.json", &["ibr", &data("synonyms.json")]);
    let v = json(&out);
    assert_eq!(v["converged"], true);
    assert_eq!(v["pure_fixed_point_sends"][0]["message"], "X");
}

#[test]
fn game_reports() {
    let v = json(&golden("meaning_mixed.json", &["game", "meaning", &data("heights3.json"), "--mixed"]));
    assert_eq!(v["kind"], "COVER");
    assert_eq!(v["meaning"], serde_json::json!([["180", "185"], ["185", "190"]]));
    let v = json(&stdout_ok(&["game", "meaning", &data("heights3.json")]));
    assert_eq!(v["kind"], "PARTITION");

    let v = json(&golden("precision_vague.json", &["game", "precision", &data("question.json")]));
    assert_eq!(v["verdict"], "VagueWrtQuestion");
    assert_eq!(v["posteriors"][0]["cells"][1], 0.5);

    let v = json(&stdout_ok(&["game", "precision", &data("question.json"), "--profile", "precise"]));
    assert_eq!(v["verdict"], "Precise");
    let v = json(&stdout_ok(&["game", "precisify", &data("question.json")]));
    assert_eq!(v["verdict"], "Precise");
    assert_eq!(v["is_nash"], true);

    let v = json(&stdout_ok(&["game", "enumerate", &data("heights3.json")]));
    assert!((v["best_payoff"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-11);
    let v = json(&stdout_ok(&["game", "check", &data("heights3.json"), "--mixed"]));
    assert_eq!(v["is_nash"], true);
    let v = json(&stdout_ok(&["game", "dominance", &data("heights3.json")]));
    assert_eq!(v["verdict"], "PASS");

    assert_eq!(code(&["game", "precision", &data("heights3.json")]), 3);
    assert_eq!(code(&["game", "meaning", &data("heights3.json"), "--profile", "nope"]), 2);
}

#[test]
fn game_budget_exceeded() {
    let dir = tempfile::tempdir().unwrap();
    let n = 10;
    let game = serde_json::json!({
        "states": (0..n).collect::<Vec<_>>(),
        "prior": vec![1.0 / n as f64; n],
        "messages": (0..5).collect::<Vec<_>>(),
        "actions": (0..5).collect::<Vec<_>>(),
        "payoff": vec![vec![0.5; 5]; n],
    });
    let path = dir.path().join("big.json");
    std::fs::write(&path, game.to_string()).unwrap();
    assert_eq!(code(&["game", "enumerate", path.to_str().unwrap()]), 5);
}

#[test]
fn random_dominance_is_stable() {
    let args = ["game", "dominance", "--random", "--n", "12", "--seed", "7", "--supports", "300"];
    let a = stdout_ok(&args);
    let b = stdout_ok(&args);
    assert_eq!(a, b);
    assert_eq!(json(&a)["verdict"], "PASS");
    let c = stdout_ok(&["game", "dominance", "--random", "--n", "12", "--seed", "7", "--supports", "300", "--threads", "2"]);
    assert_eq!(a, c);
}

#[test]
fn scenarios() {
    let v = json(&golden("scenario_attendance.json", &["scenario", "around-table1"]));
    assert_eq!(v["kl_two_decimals"], serde_json::json!(["0.89", "0.65"]));
    assert_eq!(v["utilities"]["winner"]["label"], "around 40");

    let csv = golden("scenario_tall_uniform.csv", &["scenario", "tall-uniform", "--format", "csv"]);
    assert!(csv.starts_with("support,prior,p_o,posterior_tall,"));
    let v = json(&stdout_ok(&["scenario", "tall-uniform"]));
    assert_eq!(v["verdict"], "PASS");

    let v = json(&golden("scenario_tall_gaussian.json", &["scenario", "tall-gaussian"]));
    assert_eq!(v["ratio_inequality"], "PASS");

    let v = json(&stdout_ok(&["scenario", "optimality-search", "--seed", "3"]));
    let searches = v["searches"].as_array().unwrap();
    assert!(!searches[0]["witnesses"].as_array().unwrap().is_empty());
    assert!(searches[2]["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn outputs_are_byte_stable() {
    for args in [
        vec!["scenario".to_string(), "optimality-search".into(), "--format".into(), "csv".into()],
        vec!["ibr".into(), data("attendance.json"), "--mode".into(), "softmax".into(), "--levels".into(), "50".into()],
        vec!["posterior".into(), data("tall_gaussian.json"), "tall".into(), "short".into()],
    ] {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(stdout_ok(&args), stdout_ok(&args), "{args:?}");
    }
}
