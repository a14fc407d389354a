use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SPEED: &str = r#"
[model]
builder = "laplacian_mutation"
N = 3
mutation = 0.2
d = [0.5, 1.0, 2.0]
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpp-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_cmd(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

/// Every output file except the timestamped sidecar.
fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "meta.json")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn speed_writes_files_with_hash() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "speed.toml", SPEED);
    let out = tmp.path().join("out");
    let o = run_cmd("speed", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let hash = stdout
        .lines()
        .find_map(|l| l.strip_prefix("config_hash = "))
        .unwrap()
        .to_string();
    assert_eq!(hash.len(), 64);

    for name in ["speed.json", "speed.csv", "dispersion.csv", "bounds.csv", "meta.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let rows = read_csv(&out.join("dispersion.csv"));
    assert_eq!(rows[0].last().unwrap(), "config_hash");
    assert!(rows[1..].iter().all(|r| r.last().unwrap() == &hash));
    let raw = std::fs::read(out.join("speed.csv")).unwrap();
    assert!(raw.windows(2).any(|w| w == b"\r\n"));

    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("speed.json")).unwrap()).unwrap();
    assert_eq!(json["config_hash"], hash.as_str());
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("meta.json")).unwrap()).unwrap();
    assert!(meta["unix_time"].is_u64());
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "sweep.toml",
        r#"
[model]
builder = "random_lv"
N = 3
[sweep]
commands = ["speed", "steady"]
[[sweep.axes]]
path = "model.seed"
range = { from = 0, to = 7, count = 8 }
"#,
    );
    let dirs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    for (dir, threads) in dirs.iter().zip(["1", "1", "4"]) {
        let o = run_cmd("sweep", &cfg, dir, &["--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let first = outputs(&dirs[0]);
    assert!(!first.is_empty());
    assert_eq!(first, outputs(&dirs[1]));
    assert_eq!(first, outputs(&dirs[2]));
}

#[test]
fn json_config_has_the_same_hash() {
    let tmp = TempDir::new().unwrap();
    let toml_cfg = write(tmp.path(), "c.toml", SPEED);
    let json_cfg = write(
        tmp.path(),
        "c.json",
        r#"{"model": {"d": [0.5, 1.0, 2.0], "mutation": 0.2, "N": 3, "builder": "laplacian_mutation"}}"#,
    );
    let a = run_cmd("speed", &toml_cfg, &tmp.path().join("a"), &[]);
    let b = run_cmd("speed", &json_cfg, &tmp.path().join("b"), &[]);
    assert!(a.status.success() && b.status.success());
    let hash = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .find(|l| l.starts_with("config_hash"))
            .unwrap()
            .to_string()
    };
    assert_eq!(hash(&a), hash(&b));
    assert_eq!(outputs(&tmp.path().join("a")), outputs(&tmp.path().join("b")));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");

    let sub = write(
        tmp.path(),
        "sub.toml",
        "[model]\nbuilder = \"laplacian_mutation\"\nN = 2\nr = -0.5\n",
    );
    assert_eq!(run_cmd("speed", &sub, &out, &[]).status.code(), Some(2));

    let unknown = write(tmp.path(), "unknown.toml", &format!("{SPEED}\nspeling = 1\n"));
    let o = run_cmd("speed", &unknown, &out, &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("speling"));

    let nested = write(tmp.path(), "nested.toml", &format!("{SPEED}\n[speed]\ncurve_pts = 3\n"));
    assert_eq!(run_cmd("speed", &nested, &out, &[]).status.code(), Some(4));

    assert_eq!(
        run_cmd("speed", &tmp.path().join("missing.toml"), &out, &[])
            .status
            .code(),
        Some(4)
    );
    let cfg = write(tmp.path(), "ok.toml", SPEED);
    assert_eq!(run_cmd("speed", &cfg, &out, &["--threads", "0"]).status.code(), Some(4));
    assert_eq!(run(&["fly", "--config", "x.toml"]).status.code(), Some(4));
    assert_eq!(run(&["speed"]).status.code(), Some(4));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn one_point_sweep_matches_the_direct_run() {
    let tmp = TempDir::new().unwrap();
    let direct = write(tmp.path(), "direct.toml", SPEED);
    let swept = write(
        tmp.path(),
        "sweep.toml",
        &format!(
            "{SPEED}\n[sweep]\ncommands = [\"speed\"]\n[[sweep.axes]]\npath = \"model.mutation\"\nvalues = [0.2]\n"
        ),
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_cmd("speed", &direct, &a, &[]).status.success());
    assert!(run_cmd("sweep", &swept, &b, &[]).status.success());

    let speed = read_csv(&a.join("speed.csv"));
    let sweep = read_csv(&b.join("sweep.csv"));
    let col = |rows: &Vec<Vec<String>>, name: &str| rows[0].iter().position(|h| h == name).unwrap();
    for key in &speed[0][..speed[0].len() - 1] {
        assert_eq!(speed[1][col(&speed, key)], sweep[1][col(&sweep, key)], "{key}");
    }
    // the point config is the direct config, so the hashes agree
    assert_eq!(sweep[1][col(&sweep, "point_hash")], *speed[1].last().unwrap());
}

#[test]
fn failing_sweep_point_does_not_spoil_the_rest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "sweep.toml",
        &format!(
            "{SPEED}\n[sweep]\ncommands = [\"speed\"]\n[[sweep.axes]]\npath = \"model.r\"\nvalues = [1.0, -0.5, 2.0]\n"
        ),
    );
    let out = tmp.path().join("out");
    let o = run_cmd("sweep", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("sweep.csv"));
    let col = |name: &str| rows[0].iter().position(|h| h == name).unwrap();
    let status: Vec<&str> = rows[1..].iter().map(|r| r[col("status")].as_str()).collect();
    assert_eq!(status[0], "ok");
    assert_ne!(status[1], "ok");
    assert_eq!(status[2], "ok");
    assert!(!rows[2][col("error")].is_empty());
    assert!(rows[2][col("c_star")].is_empty());
    let c: Vec<f64> = [1, 3]
        .iter()
        .map(|i| rows[*i][col("c_star")].parse().unwrap())
        .collect();
    assert!(c[1] > c[0]);
}
