use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_cartan-split");

const CONFIG: &str = r#"{
    "domain": {"kind": "ellipse", "a": 1.0, "b": 0.6},
    "strip": [-0.3, 0.3],
    "map": {"coeffs0": [[0, 0], [1, 0], [1e-4, 0], [-3e-5, 0]]},
    "h": 0.015625,
    "m2": 4.0
}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).args(args).current_dir(dir).env_remove("CARTAN_SPLIT_OUT").output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn split_writes_trace_and_summary_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", CONFIG);
    let out = run(tmp.path(), &["split", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read(tmp.path().join("out/trace.csv")).unwrap();
    let summary = fs::read(tmp.path().join("out/split.json")).unwrap();
    let head = String::from_utf8_lossy(&trace).lines().next().unwrap().to_string();
    assert_eq!(head, "m,R_m,eps_in,eps_out,bound,alpha_norm,beta_norm,residual,de_ok");
    let v: serde_json::Value = serde_json::from_slice(&summary).unwrap();
    assert!(v["trace"]["residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["mode"], "practical");

    let again = run(tmp.path(), &["split", "--config", &cfg]);
    assert!(again.status.success());
    assert_eq!(fs::read(tmp.path().join("out/trace.csv")).unwrap(), trace);
    assert_eq!(fs::read(tmp.path().join("out/split.json")).unwrap(), summary);

    let table = run(tmp.path(), &["table", "--trace", "out/trace.csv"]);
    assert!(table.status.success());
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("out/in^2"));
    assert_eq!(text.lines().count(), String::from_utf8_lossy(&trace).lines().count());
}

#[test]
fn output_dir_follows_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", CONFIG);
    let target = tmp.path().join("elsewhere");
    let out = Command::new(BIN)
        .args(["constants", "--config", &cfg])
        .current_dir(tmp.path())
        .env("CARTAN_SPLIT_OUT", &target)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(target.join("constants.json")).unwrap()).unwrap();
    assert_eq!(v["constants"]["m2"], 4.0);
    assert!(v["eps_eta"].as_f64().unwrap() > 0.0);
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn bad_configs_produce_error_records() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", &CONFIG.replace("[-0.3, 0.3]", "[0.3, -0.3]"));
    let out = run(tmp.path(), &["split", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"], "validation-error");
    assert!(rec["message"].as_str().unwrap().contains("strip bounds"));

    let cfg = write_config(tmp.path(), "broken.json", "{\n  \"domain\": {\"kind\": \"disc\", \"radius\": 1.0},\n  \"strip\": [0, }");
    let target = tmp.path().join("err");
    let out = Command::new(BIN)
        .args(["split", "--config", &cfg])
        .env("CARTAN_SPLIT_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let rec: serde_json::Value = serde_json::from_slice(&fs::read(target.join("error.json")).unwrap()).unwrap();
    assert_eq!(rec["error"], "parse-error");
    assert!(rec["message"].as_str().unwrap().contains("line 3"));
}

#[test]
fn large_input_is_refused_in_practical_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &CONFIG.replace("[1e-4, 0]", "[0.05, 0]"));
    let out = run(tmp.path(), &["split", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"], "threshold-error");
    assert!(tmp.path().join("out/error.json").exists());
}

#[test]
fn verify_single_suite_and_unknown_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["verify", "--suite", "sequence"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("PASS sequence"));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("out/verify.json")).unwrap()).unwrap();
    assert_eq!(v[0]["pass"], true);

    let out = run(tmp.path(), &["verify", "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));
}

#[test]
fn sweep_reports_moduli() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "f.json",
        r#"{
            "domain": {"kind": "disc", "radius": 1.0, "drift": [0.0, 0.05]},
            "strip": [-0.4, 0.4],
            "map": {"coeffs0": [[0, 0], [1, 0], [1e-4, 0]], "coeffs1": [[0, 0], [1, 0], [2e-4, 0]]},
            "h": 0.015625,
            "zeta_count": 3,
            "m2": 4.0
        }"#,
    );
    let out = run(tmp.path(), &["sweep", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("out/family.json")).unwrap()).unwrap();
    let r = &v["report"];
    assert_eq!(r["entries"].as_array().unwrap().len(), 3);
    assert_eq!(r["alpha_moduli"].as_array().unwrap().len(), 2);
    assert!(r["failed"].as_array().unwrap().is_empty());
}
