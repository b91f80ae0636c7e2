//! Smoke tests for the `fewbits` binary: each subcommand runs, writes the
//! promised files, and reruns byte-identically.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fewbits"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fewbits-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn rates_subcommand() {
    let out = bin()
        .args(["rates", "--m", "10000", "--n", "100", "--k", "10", "--l", "4", "--p", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("regime=high-n"), "{text}");

    let out = bin()
        .args(["rates", "--m", "100", "--n", "10", "--k", "4", "--l", "inf"])
        .output()
        .unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("central"));
}

#[test]
fn risk_writes_csv_and_manifest() {
    let csv = scratch("risk.csv");
    let run = || {
        let out = bin()
            .args([
                "risk", "--m", "64", "--n", "1", "--k", "8", "--l", "3", "--p", "2",
                "--protocol", "hash", "--family", "zipf:1.0", "--trials", "25", "--seed", "5",
                "--out",
            ])
            .arg(&csv)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read_to_string(&csv).unwrap()
    };
    let first = run();
    assert!(first.starts_with("param_value,mean_loss,std_error,predicted_rate,regime\n"));
    assert!(first.contains("n-equals-1"));
    let second = run();
    assert_eq!(first, second, "reruns must be byte-identical");

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{}.manifest.json", csv.display())).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config"]["protocol"], "hash");
    assert!(manifest["content_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn sweep_reports_slope() {
    let csv = scratch("sweep.csv");
    let out = bin()
        .args([
            "sweep", "--m", "64", "--n", "1", "--k", "8", "--l", "3", "--p", "2",
            "--protocol", "hash", "--family", "point", "--trials", "30", "--seed", "2",
            "--param", "m", "--grid", "64,128,256,512,1024", "--out",
        ])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("slope="), "{text}");
    let rows = fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 6);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{}.manifest.json", csv.display())).unwrap())
            .unwrap();
    assert!(manifest["slope"].as_f64().unwrap() < -0.5);
}

#[test]
fn worst_and_audit_subcommands() {
    let out = bin()
        .args([
            "worst", "--m", "32", "--n", "4", "--k", "4", "--l", "2", "--p", "2",
            "--protocol", "constant-uniform", "--trials", "10", "--seed", "1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("worst case"), "{text}");
    assert!(text.contains("sparse(1)"), "{text}");

    let out = bin()
        .args([
            "audit", "--m", "65", "--n", "4", "--k", "7", "--l", "3", "--p", "2",
            "--protocol", "asr", "--seed", "4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pass"), "{text}");
    assert!(text.contains("195 bits"), "{text}");
}

#[test]
fn config_file_merges_with_flag_overrides() {
    let path = scratch("run.toml");
    fs::write(
        &path,
        "m = 64\nn = 1\nk = 8\nl = 3\np = 2.0\nprotocol = \"hash\"\ntrials = 10\nseed = 3\n",
    )
    .unwrap();
    let out = bin()
        .args(["risk", "--config"])
        .arg(&path)
        .args(["--trials", "5"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("trials=5"), "{text}");

    let out = bin().args(["risk", "--m", "4"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing required parameter"));
}
