use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hedopt::TriggerProblem;
use hedopt_cli::campaign::RunManifest;
use hedopt_cli::io::{read_front, read_rows, read_trajectory, HvRow};
use serde_json::Value;

fn hedopt(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hedopt"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"{"optimization": {"algorithms": ["nsga2", "moead"], "runs": 2, "population_size": 20, "max_evaluations": 200}}"#;

#[test]
fn simulate_without_triggers_matches_baseline() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hedopt(&["simulate", "--out", "sim", "--plot"], dir.path()));
    let obj = json(&dir.path().join("sim/objectives.json"));
    assert!((obj["f1"].as_f64().unwrap() - 0.5403).abs() <= 0.01);
    assert!((obj["gdp_min"].as_f64().unwrap() + 0.1178).abs() <= 0.01);
    assert!(obj["dt_check"].is_null());
    let rows = read_trajectory(&dir.path().join("sim/trajectory.csv")).unwrap();
    assert_eq!(rows.len(), 6001);
    assert_eq!(rows[6000][0], 300.0);
    let svg = std::fs::read_to_string(dir.path().join("sim/trajectory.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 8);
}

#[test]
fn simulate_trade_off_and_step_halving() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&hedopt(
        &["simulate", "--t-sd", "0.0584", "--t-ld", "15.0575", "--dt", "0.025", "--out", "s"],
        dir.path(),
    ));
    assert!(stdout.contains("max objective deviation"));
    let obj = json(&dir.path().join("s/objectives.json"));
    assert!((obj["f1"].as_f64().unwrap() - 0.3306).abs() <= 0.02);
    assert!(obj["dt_check"]["max_deviation"].as_f64().unwrap() <= 1e-3);
    assert_eq!(obj["dt"].as_f64().unwrap(), 0.025);
}

#[test]
fn invalid_config_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"scenario": {"params": {"pandemic": {"t_p": 1.5}}}}"#);
    let out = hedopt(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("t_p") && err.contains("[0, 1]"), "{err}");

    let out = hedopt(&["simulate", "--config", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    let out = hedopt(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn single_run_front_rows_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"optimization": {"algorithms": ["nsga2"], "runs": 1, "population_size": 20, "max_evaluations": 200}}"#,
    );
    ok(&hedopt(&["optimize", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path()));
    let fronts: Vec<_> = std::fs::read_dir(dir.path().join("o/nsga2")).unwrap().collect();
    // run_0 plus combined.csv and hv_history_mean.csv
    assert_eq!(fronts.len(), 3);
    let front = read_front(&dir.path().join("o/nsga2/run_0/front.csv")).unwrap();
    assert!(!front.is_empty());
    let problem = TriggerProblem::standard();
    for m in &front.members {
        assert_eq!(problem.evaluate(m.x[0], m.x[1]).unwrap(), m.f);
    }
    // One row through the simulate command as well.
    let m = front.members[0];
    ok(&hedopt(
        &["simulate", "--t-sd", &m.x[0].to_string(), "--t-ld", &m.x[1].to_string(), "--out", "check"],
        dir.path(),
    ));
    let obj = json(&dir.path().join("check/objectives.json"));
    assert_eq!(obj["f1"].as_f64().unwrap(), m.f.f1);
    assert_eq!(obj["f2"].as_f64().unwrap(), m.f.f2);
}

fn csv_files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn campaign_is_deterministic_and_manifest_complete() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    ok(&hedopt(&["optimize", "--config", cfg, "--out", "a", "--workers", "1"], dir.path()));
    ok(&hedopt(&["optimize", "--config", cfg, "--out", "b", "--workers", "1"], dir.path()));
    ok(&hedopt(&["optimize", "--config", cfg, "--out", "c", "--workers", "4", "--plot"], dir.path()));
    let a = csv_files(&dir.path().join("a"));
    assert_eq!(a.len(), 2 * 2 * 2 + 2 * 2 + 1);
    assert_eq!(a, csv_files(&dir.path().join("b")));
    assert_eq!(a, csv_files(&dir.path().join("c")));
    for svg in ["front.svg", "set.svg", "hv_history.svg"] {
        assert!(dir.path().join("c").join(svg).is_file(), "{svg}");
    }

    let root = dir.path().join("a");
    let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(root.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.runs.len(), 4);
    let mut seeds: Vec<u64> = manifest.runs.iter().map(|r| r.seed).collect();
    seeds.sort();
    seeds.dedup();
    assert_eq!(seeds.len(), 4);
    for f in manifest.files() {
        let p = root.join(&f);
        if f.to_string_lossy().contains("hv_history") {
            let rows: Vec<HvRow> = read_rows(&p).unwrap();
            assert!(!rows.is_empty());
            assert!(rows.windows(2).all(|w| w[0].evaluations < w[1].evaluations));
            assert_eq!(rows.last().unwrap().evaluations, 200);
        } else {
            assert!(read_front(&p).unwrap().is_mutually_nondominated(), "{}", p.display());
        }
    }

    let seeded = hedopt(&["optimize", "--config", cfg, "--out", "d", "--seed", "99"], dir.path());
    ok(&seeded);
    assert_ne!(a, csv_files(&dir.path().join("d")));
}

#[test]
fn indicators_over_a_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    ok(&hedopt(&["optimize", "--config", cfg, "--out", "o"], dir.path()));
    let table = ok(&hedopt(&["indicators", "--config", cfg, "o"], dir.path()));
    assert!(table.contains("NSGA-II") && table.contains("MOEA/D"));
    assert!(table.contains("Kruskal-Wallis") && table.contains("Mann-Whitney"));
    let report = json(&dir.path().join("o/indicators.json"));
    assert_eq!(report["algorithms"].as_array().unwrap().len(), 2);
    assert_eq!(report["algorithms"][0]["runs"], 2);
    assert_eq!(report["pairwise"].as_array().unwrap().len(), 3);

    // Without a manifest the directory layout is scanned; a missing front is
    // reported by path.
    std::fs::remove_file(dir.path().join("o/manifest.json")).unwrap();
    std::fs::remove_file(dir.path().join("o/moead/run_1/front.csv")).unwrap();
    let out = hedopt(&["indicators", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run_1/front.csv"));
}

#[test]
fn indicators_single_algorithm_and_identical_sets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"optimization": {"algorithms": ["mopso"], "runs": 3, "population_size": 20, "max_evaluations": 100}}"#,
    );
    ok(&hedopt(&["optimize", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path()));
    let table = ok(&hedopt(&["indicators", "o"], dir.path()));
    assert_eq!(table.lines().count(), 2, "{table}");

    // A copy of the same runs under another name: no significant difference.
    let o = dir.path().join("o");
    std::fs::remove_file(o.join("manifest.json")).unwrap();
    for k in 0..3 {
        let to = o.join(format!("copy/run_{k}"));
        std::fs::create_dir_all(&to).unwrap();
        std::fs::copy(o.join(format!("mopso/run_{k}/front.csv")), to.join("front.csv")).unwrap();
    }
    ok(&hedopt(&["indicators", "o"], dir.path()));
    let report = json(&o.join("indicators.json"));
    for test in report["pairwise"].as_array().unwrap() {
        assert_eq!(test["significant"], false, "{test}");
    }
}

#[test]
fn front_grid_corners() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&hedopt(&["front-grid", "--resolution", "2", "--out", "g"], dir.path()));
    assert!(stdout.contains("of 4 grid points"));
    let front = read_front(&dir.path().join("g/grid_front.csv")).unwrap();
    assert!(front.is_mutually_nondominated());
    for m in &front.members {
        assert!(m.x.iter().all(|v| *v == 0.0 || *v == 100.0));
    }
    let out = hedopt(&["front-grid", "--resolution", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn plots_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hedopt(&["front-grid", "--resolution", "6", "--out", "g"], dir.path()));
    let stdout = ok(&hedopt(&["plot", "g/grid_front.csv"], dir.path()));
    assert!(stdout.contains("grid_front_front.svg") && stdout.contains("grid_front_set.svg"));
    let rows = read_front(&dir.path().join("g/grid_front.csv")).unwrap().len();
    let svg = std::fs::read_to_string(dir.path().join("g/grid_front_front.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), rows);
    assert!(svg.contains("f1: peak active cases"));

    ok(&hedopt(&["simulate", "--out", "s"], dir.path()));
    ok(&hedopt(&["plot", "s/trajectory.csv", "--kind", "trajectory", "--out", "figs"], dir.path()));
    let svg = std::fs::read_to_string(dir.path().join("figs/trajectory_trajectory.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 8);

    std::fs::write(dir.path().join("bad.csv"), "t_sd,t_ld,f1,f2\n1,2,3,4\n5,6,seven,8\n").unwrap();
    let out = hedopt(&["plot", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}
