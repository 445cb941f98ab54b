use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_priroagg"))
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn run_then_replay() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(configs().join("rlr_attack.toml"))
        .args(["--seed", "11", "--out"])
        .arg(out.path())
        .status()
        .unwrap();
    assert!(status.success());
    let metrics = std::fs::read_to_string(out.path().join("metrics.jsonl")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    assert!(metrics.lines().all(|l| l.contains("\"verdict\":\"rerun\"")));
    assert!(out.path().join("timings.jsonl").exists());

    let tx = out.path().join("transcript.bin");
    let replayed = bin().args(["replay", "--transcript"]).arg(&tx).output().unwrap();
    assert!(replayed.status.success());
    let lines = String::from_utf8(replayed.stdout).unwrap();
    assert_eq!(lines.lines().count(), 3);
    assert!(lines.lines().all(|l| l.contains("\"verdict\":\"rerun\"")));

    let mut bytes = std::fs::read(&tx).unwrap();
    bytes[40] ^= 1;
    std::fs::write(&tx, bytes).unwrap();
    let bad = bin().args(["replay", "--transcript"]).arg(&tx).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("rejected transcript"));
}

#[test]
fn invalid_config_exits_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[protocol]\nn = 10\nd = 4\nk = 8\nt = 3\n").unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error: config"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn bench_prints_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.toml");
    std::fs::write(&grid, "dims = [4, 8]\nns = [6]\nrepeats = 1\n").unwrap();
    let out = bin().args(["bench", "--grid"]).arg(&grid).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["ratios"].as_array().unwrap().len(), 1);
}
