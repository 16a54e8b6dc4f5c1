use std::process::Command;

fn fedalign() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fedalign"))
}

const SMALL: &str = "
algorithms = [\"FedAvgPriority\", \"FedALIGN\"]
[data]
n_clients = 6
n_priority = 2
features = 5
classes = 3
samples_per_client = 30
[federation]
rounds = 5
";

#[test]
fn run_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out");
    let status = fedalign()
        .args(["run", cfg.to_str().unwrap(), "--seed-override", "9", "--no-diagnostics", "--output-dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("FedALIGN_seed9.csv").exists());
    let table_csv = dir.path().join("table.csv");
    let output = fedalign()
        .arg("compare")
        .arg(out.join("summary.json"))
        .arg("--csv")
        .arg(&table_csv)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("FedALIGN") && text.contains("FedAvgPriority"), "{text}");
    assert!(std::fs::read_to_string(table_csv).unwrap().starts_with("algorithm,runs"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[data]\nn_clients = 2\nn_priority = 3\n[federation]\nrounds = 0\n").unwrap();
    let output = fedalign().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(err.contains("data.n_priority") && err.contains("federation.rounds"), "{err}");
}

#[test]
fn runtime_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("missing.toml");
    std::fs::write(&cfg, "[data]\nsource = \"csv\"\npath = \"absent.csv\"\nn_shards = 4\nn_priority = 1\n").unwrap();
    let output = fedalign().arg("run").arg(&cfg).arg("--output-dir").arg(dir.path()).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn compare_needs_two_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("one.toml");
    std::fs::write(&cfg, SMALL.replace("\"FedAvgPriority\", ", "")).unwrap();
    let out = dir.path().join("out");
    let status =
        fedalign().args(["run", "--no-diagnostics"]).arg(&cfg).arg("--output-dir").arg(&out).status().unwrap();
    assert!(status.success());
    let output = fedalign().arg("compare").arg(out.join("summary.json")).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8(output.stderr).unwrap().contains("at least 2 algorithms"));
}

#[test]
fn presets_list_and_show() {
    let output = fedalign().args(["presets", "list"]).output().unwrap();
    let names = String::from_utf8(output.stdout).unwrap();
    assert!(names.lines().any(|l| l == "synth-low-noise"), "{names}");
    let output = fedalign().args(["presets", "show", "fedprox"]).output().unwrap();
    assert!(String::from_utf8(output.stdout).unwrap().contains("prox_mu = 1.0"));
    let output = fedalign().args(["presets", "show", "nope"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}
