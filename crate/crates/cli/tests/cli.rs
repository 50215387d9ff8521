use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
[model]
dim = 2
alpha = 0.5
gamma = 1.5

[grid]
points = 32

[initial]
kind = "gaussian-bump"
amplitude = 1.0
width = 0.6
count = 2
seed = 5

[run]
t_end = 0.2
"#;

const HEADER: &str = "t,dt,sup_theta,inf_theta,l2_norm,hs_norm,grad_sup,holder_seminorm,oss_length,bkm_integral,j_value";

fn fracflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn simulate(config: &str, out: &Path) -> Output {
    fracflow(&["simulate", "--quiet", "--config", config, "--out", out.to_str().unwrap()])
}

#[test]
fn simulate_writes_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("a");
    let res = simulate(&cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(res.stdout.is_empty());

    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), HEADER);
    assert!(!csv.contains('\r'));

    let state = fs::read(out.join("final_state.bin")).unwrap();
    assert_eq!(&state[..8], b"FFSTATE1");
    assert_eq!(state.len(), 32 + 8 * 32 * 32);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["termination"], "completed");
    assert_eq!(summary["regime"], "subcritical");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(simulate(&cfg, &a).status.success());
    assert!(simulate(&cfg, &b).status.success());
    assert_eq!(
        fs::read(a.join("diagnostics.csv")).unwrap(),
        fs::read(b.join("diagnostics.csv")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("final_state.bin")).unwrap(),
        fs::read(b.join("final_state.bin")).unwrap()
    );
}

#[test]
fn seed_flag_changes_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(simulate(&cfg, &a).status.success());
    let res = fracflow(&["simulate", "--quiet", "--config", &cfg, "--seed", "99", "--out", b.to_str().unwrap()]);
    assert!(res.status.success());
    assert_ne!(
        fs::read(a.join("diagnostics.csv")).unwrap(),
        fs::read(b.join("diagnostics.csv")).unwrap()
    );
}

#[test]
fn malformed_config_exits_2_without_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    for text in [
        "[model]\ndim = ",
        &SMALL.replace("points = 32", "points = 30"),
        &SMALL.replace("t_end = 0.2", "t_end = -1.0"),
        &SMALL.replace("kind = \"gaussian-bump\"", "kind = \"spiral\""),
    ] {
        let cfg = write_config(tmp.path(), text);
        let res = simulate(&cfg, &out);
        assert_eq!(res.status.code(), Some(2), "{text}");
        assert!(!out.exists());
    }
}

#[test]
fn missing_config_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let res = simulate(tmp.path().join("absent.toml").to_str().unwrap(), &tmp.path().join("out"));
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let res = simulate(&cfg, &blocker.join("sub"));
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn scaling_test_checks_divisibility() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("points = 32", "points = 64"));
    let out = tmp.path().join("s");
    let res = fracflow(&["scaling-test", "--config", &cfg, "--lambda", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));

    let res = fracflow(&["scaling-test", "--quiet", "--preset", "scaling", "--lambda", "1", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("scaling_report.json")).unwrap()).unwrap();
    assert_eq!(report["discrepancy"], 0.0);
    assert_eq!(report["passed"], true);
}

#[test]
fn inequality_lab_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let out = tmp.path().join(name);
        let mut args = vec![
            "inequality-lab",
            "--quiet",
            "--corpus-size",
            "1",
            "--seed",
            "4",
            "--points",
            "128",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        assert!(fracflow(&args).status.success());
        fs::read_to_string(out.join("inequality_corpus.csv")).unwrap()
    };
    let a = run("a", &["--gammas", "0.5", "--alphas", "0.5"]);
    let b = run("b", &["--gammas", "0.5", "--alphas", "0.5"]);
    assert_eq!(a, b);
    assert!(a.starts_with("# seed = 4\n"));
    let data: Vec<&str> = a.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(data.len(), 2);

    let z = run("z", &["--gammas", "0.5", "--alphas", "0.5", "--include-zero"]);
    let degenerate: Vec<&str> = z.lines().filter(|l| l.ends_with(",true")).collect();
    assert_eq!(degenerate.len(), 2);
    assert!(degenerate.iter().all(|l| l.starts_with("1,")));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("z/inequality_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["degenerate_rows"], 2);
}

#[test]
fn inequality_lab_rejects_bad_parameters() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("x");
    for args in [["--corpus-size", "0"], ["--gammas", "1.5"]] {
        let mut all = vec!["inequality-lab", "--out", out.to_str().unwrap()];
        all.extend_from_slice(&args);
        assert_eq!(fracflow(&all).status.code(), Some(2));
    }
    assert!(!out.exists());
}

#[test]
fn blowup_probe_rejects_non_radial_data() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL.replace("gamma = 1.5", "gamma = 0.2\nkappa = 0.1");
    let cfg = write_config(tmp.path(), &text);
    let res = fracflow(&["blowup-probe", "--config", &cfg, "--out", tmp.path().join("p").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn blowup_probe_control_completes() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL
        .replace("gamma = 1.5", "gamma = 0.2\nkappa = 0.1")
        .replace("kind = \"gaussian-bump\"", "kind = \"radial-bump\"")
        .replace("amplitude = 1.0", "amplitude = 0.5")
        .replace("count = 2\n", "");
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("p");
    let res = fracflow(&["blowup-probe", "--quiet", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("blowup_report.json")).unwrap()).unwrap();
    assert_eq!(report["termination"], "completed");
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn diagnose_matches_the_last_record() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("a");
    assert!(simulate(&cfg, &out).status.success());
    let state = out.join("final_state.bin");
    let d = tmp.path().join("d");
    let res = fracflow(&["diagnose", "--quiet", "--state", state.to_str().unwrap(), "--out", d.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let last = |p: &Path| -> Vec<String> {
        let text = fs::read_to_string(p).unwrap();
        text.lines().last().unwrap().split(',').map(str::to_string).collect()
    };
    let run = last(&out.join("diagnostics.csv"));
    let again = last(&d.join("diagnostics.csv"));
    // t and the state-derived columns agree; dt and the BKM integral are path data.
    for col in [0, 2, 3, 4, 5, 6, 7, 8] {
        assert_eq!(run[col], again[col], "column {col}");
    }
    assert_eq!(again[9], "NaN");

    fs::write(tmp.path().join("bad.bin"), b"not a state").unwrap();
    let bad = tmp.path().join("bad.bin");
    let res = fracflow(&["diagnose", "--state", bad.to_str().unwrap(), "--out", d.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}
