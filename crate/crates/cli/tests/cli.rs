use assert_cmd::Command;
use std::path::PathBuf;

fn case(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../core/corpus/cases/{name}.imp"))
}

fn stitch() -> Command {
    Command::cargo_bin("stitch").unwrap()
}

#[test]
fn repair_two_fault_add_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    stitch()
        .args(["repair", case("set-add-two-fault").to_str().unwrap(), "--method", "add", "--report"])
        .arg(&out)
        .assert()
        .code(0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["outcome"], "Fixed");
    assert!(v["fix"]["source"].as_str().unwrap().contains("this.size + 1"));
}

#[test]
fn detect_reports_faulty_with_exit_one() {
    let a = stitch()
        .args(["detect", case("set-add-two-fault").to_str().unwrap(), "--method", "add", "--cexs", "2"])
        .assert()
        .code(1);
    let v: serde_json::Value = serde_json::from_slice(&a.get_output().stdout).unwrap();
    assert_eq!(v["verdict"], "faulty");
    assert_eq!(v["counterexamples"].as_array().unwrap().len(), 2);
}

#[test]
fn repair_without_room_is_not_fixable() {
    let a = stitch()
        .args(["repair", case("set-add-two-fault").to_str().unwrap(), "--method", "add", "--max-depth", "1"])
        .args(["--ops", "CRCR", "--prune", "off"])
        .assert()
        .code(1);
    let v: serde_json::Value = serde_json::from_slice(&a.get_output().stdout).unwrap();
    assert_eq!(v["outcome"], "NotFixable");
}

#[test]
fn mutants_respects_operator_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ops.toml");
    std::fs::write(&cfg, "operators = [\"ROR\"]\n").unwrap();
    let a = stitch()
        .args(["mutants", case("set-add-two-fault").to_str().unwrap(), "--method", "add", "--config"])
        .arg(&cfg)
        .assert()
        .code(0);
    let v: serde_json::Value = serde_json::from_slice(&a.get_output().stdout).unwrap();
    for s in v["statements"].as_array().unwrap() {
        for m in s["mutations"].as_array().unwrap() {
            assert_eq!(m["operator"], "ROR");
        }
    }
}

#[test]
fn usage_errors_exit_above_two() {
    stitch().arg("bogus").assert().code(3);
    stitch()
        .args(["detect", case("set-add-two-fault").to_str().unwrap(), "--method", "missing"])
        .assert()
        .code(3);
    stitch()
        .args(["repair", case("set-add-two-fault").to_str().unwrap(), "--method", "add", "--ops", "XYZ"])
        .assert()
        .code(3);
}
