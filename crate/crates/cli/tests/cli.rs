use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "seed = 3\nsynth.users = 1500\nsynth.items = 120\nsynth.categories = 8\nmodel.hidden_size = 4\ntrain.max_epochs = 1\n";

fn sharecast(dir: &Path, args: &[&str]) -> Output {
    let config = dir.join("small.toml");
    std::fs::write(&config, SMALL).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sharecast"))
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .env("SHARECAST_LOG", "error")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn missing_snapshot_names_the_build_step() {
    let dir = tempfile::tempdir().unwrap();
    ok(&sharecast(dir.path(), &["gen"]));
    let out = sharecast(dir.path(), &["queries"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: missing network snapshot") && err.contains("network.snap") && err.contains("`build`"), "{err}");
}

#[test]
fn missing_seed_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sharecast"))
        .args(["--out", dir.path().to_str().unwrap(), "gen"])
        .env("SHARECAST_LOG", "error")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing config key `seed`"));
}

#[test]
fn locked_output_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("out")).unwrap();
    std::fs::write(dir.path().join("out/.lock"), "").unwrap();
    let out = sharecast(dir.path(), &["gen"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("locked"));
}

#[test]
fn full_pipeline_on_a_small_world() {
    let dir = tempfile::tempdir().unwrap();
    for step in ["gen", "build", "queries", "analyze", "baseline", "train", "eval"] {
        let line = ok(&sharecast(dir.path(), &[step]));
        assert!(line.starts_with(step) && line.ends_with('\n') && line.lines().count() == 1, "{line}");
    }
    let out = dir.path().join("out");
    for f in ["network.snap", "queries.txt", "report.txt", "model.ckpt", "eval.txt", "summary.json", "analytics/lift.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(!out.join(".lock").exists());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["test"]["all"]["auc_roc"].as_f64().is_some());

    let line = ok(&sharecast(dir.path(), &["ablate"]));
    assert!(line.starts_with("ablate: 10 rows"), "{line}");
    let table = std::fs::read_to_string(out.join("ablation.txt")).unwrap();
    assert_eq!(table.lines().count(), 11);

    let line = ok(&sharecast(dir.path(), &["ablate", "--variants", "-user,encoder-gru"]));
    assert!(line.starts_with("ablate: 3 rows"), "{line}");
    let bad = sharecast(dir.path(), &["ablate", "--variants", "-nothing"]);
    assert_eq!(bad.status.code(), Some(1));
}
