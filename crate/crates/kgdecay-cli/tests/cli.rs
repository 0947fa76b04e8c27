use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
seed = 1

[grid]
mode = "radial"
extent = 40.0
n = 256

[params]
m = 0.3
m1 = 1.0
n1 = 1.0
p = [1.0, 1.0, 0.0, 0.0]

[data]
profile = "poly"
power = 6
epsilon = 0.001
u1 = 1.0
v1 = 1.0

[time]
dt = 0.02
t_max = 12.0
stride = 0.2

[diagnostics]
fit_window = [1.0, 12.0]
crossover_window = [1.0, 12.0]
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgdecay")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name);
    let s: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap()
}

/// Parses and validates both JSON outputs of a run directory.
fn outputs(dir: &Path) -> (Value, Value) {
    let read = |f: &str| -> Value { serde_json::from_str(&fs::read_to_string(dir.join(f)).unwrap()).unwrap() };
    let (manifest, report) = (read("manifest.json"), read("report.json"));
    for (v, s) in [(&manifest, "manifest.schema.json"), (&report, "report.schema.json")] {
        let errs: Vec<String> = schema(s).iter_errors(v).map(|e| e.to_string()).collect();
        assert!(errs.is_empty(), "{s}: {errs:?}");
    }
    (manifest, report)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn solve_writes_valid_deterministic_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let mut dirs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("out{k}"));
        let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", "1"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        dirs.push(out);
    }
    let (manifest, report) = outputs(&dirs[0]);
    assert_eq!(report["run"]["decay"]["m"], 0.3);
    let files = manifest["files"].as_array().unwrap();
    assert!(files.len() >= 8, "{files:?}");
    for f in files {
        let rel = f["path"].as_str().unwrap();
        assert_eq!(fs::read(dirs[0].join(rel)).unwrap(), fs::read(dirs[1].join(rel)).unwrap(), "{rel}");
    }
    assert_eq!(fs::read(dirs[0].join("manifest.json")).unwrap(), fs::read(dirs[1].join("manifest.json")).unwrap());
    let sup = fs::read_to_string(dirs[0].join("series/sup_u.csv")).unwrap();
    assert!(sup.starts_with("t,sup_u\n"));
    assert_eq!(sup.lines().count(), 52);
    let snap = fs::read_to_string(dirs[0].join("series/snapshots/frame_000.csv")).unwrap();
    assert!(snap.starts_with("r,u,u_t,v,v_t\n"));
    // 17 significant digits throughout
    let text = fs::read_to_string(dirs[0].join("report.json")).unwrap();
    assert!(text.contains("\"m\":2.9999999999999999e-1"), "{text}");
}

#[test]
fn sweep_deduplicates_and_matches_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let sweep_out = tmp.path().join("sweep");
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--masses", "0.3,0.1,0.3", "--out", sweep_out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate masses"));
    let (_, report) = outputs(&sweep_out);
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
    assert_eq!(report["duplicates_removed"], true);
    assert!(sweep_out.join("series/m0.1/sup_u.csv").exists());

    let single = tmp.path().join("single");
    assert_eq!(code(&run(&["sweep", "--config", cfg.to_str().unwrap(), "--masses", "0.3", "--out", single.to_str().unwrap()])), 0);
    let solo = tmp.path().join("solo");
    assert_eq!(code(&run(&["solve", "--config", cfg.to_str().unwrap(), "--out", solo.to_str().unwrap()])), 0);
    let (_, a) = outputs(&single);
    let (_, b) = outputs(&solo);
    assert_eq!(a["runs"][0]["decay"], b["run"]["decay"]);
    assert_eq!(
        fs::read(single.join("series/m0.3/sup_u.csv")).unwrap(),
        fs::read(solo.join("series/sup_u.csv")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let bad = write_config(tmp.path(), &SMALL.replace("m = 0.3", "m = 2.0"));
    let o = run(&["solve", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let (_, report) = outputs(&out);
    assert_eq!(report["abort"]["kind"], "config");
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["abort"]["exit_code"], 2);

    let missing = run(&["solve", "--config", "/nonexistent/run.toml", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&missing), 2);

    let big = write_config(tmp.path(), &SMALL.replace("epsilon = 0.001", "epsilon = 10.0").replace("n1 = 1.0", "n1 = 10.0\nn2 = 10.0"));
    let o = run(&["solve", "--config", big.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(outputs(&out).1["abort"]["kind"], "blow-up");
    let o = run(&["sweep", "--config", big.to_str().unwrap(), "--masses", "0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert_eq!(outputs(&out).1["failure"]["m"], 0.1);

    let file = tmp.path().join("plain");
    fs::write(&file, "x").unwrap();
    let good = write_config(tmp.path(), SMALL);
    let o = run(&["solve", "--config", good.to_str().unwrap(), "--out", file.to_str().unwrap()]);
    assert_eq!(code(&o), 4);

    let o = run(&["verify", "--suite", "nope", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_suite_reports_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let o = run(&["verify", "--suite", "identities", "--suite", "energy-forms", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (manifest, report) = outputs(&out);
    assert_eq!(report["status"], "pass");
    assert_eq!(report["suites"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["suites"][0], "identities");
}
