mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

fn anilp(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_anilp"))
        .args(args)
        .output()
        .unwrap();
    out.status.code().unwrap()
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec![
        sub,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    anilp(&args)
}

/// The shipped FS config trimmed to two family sizes and one `q`.
fn small_fs() -> Value {
    let text = std::fs::read_to_string(common::config_path("fs.json")).unwrap();
    let mut cfg: Value = serde_json::from_str(&text).unwrap();
    cfg["name"] = json!("small");
    cfg["fs"]["family_sizes"] = json!([1, 3]);
    cfg["fs"]["q"] = json!([2]);
    cfg
}

fn write(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

#[test]
fn passing_fs_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fs.json", &small_fs());
    assert_eq!(run("fs", &cfg, dir.path(), &[]), 0);
    let csv = std::fs::read_to_string(dir.path().join("small-fs.csv")).unwrap();
    assert!(csv.starts_with("# anilp-csv v1\nfamily_size,p,q,r,s,"));
    let summary: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("small-fs.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["passed"], json!(true));
}

#[test]
fn ratio_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_fs();
    cfg["fs"]["max_ratio"] = json!(1.0);
    let path = write(dir.path(), "fs.json", &cfg);
    assert_eq!(run("fs", &path, dir.path(), &[]), 1);
    assert!(dir.path().join("small-fs.csv").exists());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_fs();
    cfg["fs"]["unexpected"] = json!(1);
    let path = write(dir.path(), "unknown.json", &cfg);
    assert_eq!(run("fs", &path, dir.path(), &[]), 2);

    let missing = dir.path().join("absent.json");
    assert_eq!(run("fs", &missing, dir.path(), &[]), 2);

    let good = write(dir.path(), "fs.json", &small_fs());
    assert_eq!(run("fs", &good, dir.path(), &["--jobs", "0"]), 2);
    assert_eq!(run("equiv", &good, dir.path(), &[]), 2);

    let mut no_seed = small_fs();
    no_seed.as_object_mut().unwrap().remove("seed");
    let path = write(dir.path(), "noseed.json", &no_seed);
    assert_eq!(run("fs", &path, dir.path(), &[]), 2);
}

#[test]
fn numerical_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_fs();
    cfg["fs"]["scales"] = json!({"k_min": 0, "k_max": 6});
    let path = write(dir.path(), "fs.json", &cfg);
    assert_eq!(run("fs", &path, dir.path(), &[]), 3);
}

#[test]
fn same_seed_same_bytes_and_override_changes_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fs.json", &small_fs());
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    assert_eq!(run("fs", &cfg, &a, &["--jobs", "1"]), 0);
    assert_eq!(run("fs", &cfg, &b, &["--jobs", "3"]), 0);
    assert_eq!(run("fs", &cfg, &c, &["--seed", "99"]), 0);
    let read = |d: &Path| std::fs::read(d.join("small-fs.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(c.join("small-fs.summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["seed"], json!(99));
}

#[test]
fn zero_family_is_degenerate_not_failing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_fs();
    cfg["family"] = json!([{"kind": "zero", "count": 3}]);
    let path = write(dir.path(), "fs.json", &cfg);
    assert_eq!(run("fs", &path, dir.path(), &[]), 0);
    let csv = std::fs::read_to_string(dir.path().join("small-fs.csv")).unwrap();
    let mut rows = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(csv.as_bytes());
    let header = rows.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "degenerate").unwrap();
    let records: Vec<_> = rows.records().map(Result::unwrap).collect();
    assert!(!records.is_empty());
    assert!(records.iter().all(|r| &r[col] == "true"));
}

#[test]
fn output_directory_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_fs();
    cfg["output"] = json!("results");
    let path = write(dir.path(), "fs.json", &cfg);
    assert_eq!(anilp(&["fs", "--config", path.to_str().unwrap()]), 0);
    assert!(dir.path().join("results/small-fs.csv").exists());
}

#[test]
fn atoms_subcommand_validates_exported_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::write_atoms_config(dir.path());
    assert_eq!(run("atoms", &cfg, dir.path(), &[]), 0);
    let summary: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("atoms-atoms.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["atoms"], json!(4));
    assert_eq!(summary["failing_atoms"], json!(0));

    // a tampered field file no longer matches its recorded hash
    let fields = dir.path().join("fields");
    let victim = std::fs::read_dir(&fields)
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let mut bytes = std::fs::read(&victim).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    std::fs::write(&victim, bytes).unwrap();
    assert_eq!(run("atoms", &cfg, dir.path(), &[]), 3);
}
