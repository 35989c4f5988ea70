//! End-to-end tests for the `chris` binary: artifact formats, exit codes,
//! and bit-identical reproducibility.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::OnceLock;

use chris_core::difficulty::{RandomForest, FOREST_TREES, MAX_DEPTH};
use chris_core::zoo;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_chris")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Inputs shared by the tests: a small labeled trace, a trained forest,
/// and both model containers. Built once.
fn fixture_dir() -> &'static PathBuf {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = std::env::temp_dir().join("chris-cli-fixture");
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        let p = |s: &str| dir.join(s).display().to_string();
        assert_ok(&run(&[
            "synth",
            "--activities",
            "1..9",
            "--windows-per-activity",
            "6",
            "--seed",
            "9",
            "--out",
            &p("data"),
        ]));
        assert_ok(&run(&["train-rf", "--trace", &p("data/trace.csv"), "--seed", "4", "--out", &p("rf")]));
        assert_ok(&run(&["gen-model", "--arch", "small", "--seed", "5", "--out", &p("models")]));
        assert_ok(&run(&["gen-model", "--arch", "big", "--seed", "6", "--out", &p("models")]));
        assert_ok(&run(&[
            "profile",
            "--trace",
            &p("data/trace.csv"),
            "--forest",
            &p("rf/forest.json"),
            "--model-small",
            &p("models/model-small.json"),
            "--model-big",
            &p("models/model-big.json"),
            "--out",
            &p("prof"),
        ]));
        assert_ok(&run(&["pareto", "--input", &p("prof/profiled.csv"), "--out", &p("front")]));
        dir
    })
}

fn fx(s: &str) -> String {
    fixture_dir().join(s).display().to_string()
}

#[test]
fn synth_is_reproducible_and_validates_hr() {
    let dir = std::env::temp_dir().join("chris-cli-synth");
    let _ = std::fs::remove_dir_all(&dir);
    let p = |s: &str| dir.join(s).display().to_string();
    let args = |out: &str| {
        [
            "synth".to_string(),
            "--activities".into(),
            "1..9".into(),
            "--windows-per-activity".into(),
            "4".into(),
            "--seed".into(),
            "1".into(),
            "--out".into(),
            p(out),
        ]
    };
    fn to_refs(v: &[String]) -> Vec<&str> {
        v.iter().map(|s| s.as_str()).collect()
    }
    assert_ok(&run(&to_refs(&args("a"))));
    assert_ok(&run(&to_refs(&args("b"))));
    let a = std::fs::read(dir.join("a/trace.csv")).unwrap();
    let b = std::fs::read(dir.join("b/trace.csv")).unwrap();
    assert_eq!(a, b, "same seed must give identical traces");

    // 9 equal segments in the file.
    let text = String::from_utf8(a).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len() % 9, 0);
    let seg = rows.len() / 9;
    for (i, chunk) in rows.chunks(seg).enumerate() {
        let expect = (i + 1).to_string();
        assert!(chunk
            .iter()
            .all(|r| r.split(',').nth(5) == Some(expect.as_str())));
    }

    let out = run(&["synth", "--hr", "400", "--out", &p("bad")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn trained_forest_file_has_8_trees_within_depth_5() {
    let forest = RandomForest::load_json(&fixture_dir().join("rf/forest.json")).unwrap();
    assert_eq!(forest.trees().len(), FOREST_TREES);
    for tree in forest.trees() {
        assert!(tree.depth() <= MAX_DEPTH);
    }
}

#[test]
fn pareto_output_is_an_antichain_of_the_profiled_rows() {
    let rows = zoo::load_configurations_csv(&fixture_dir().join("prof/profiled.csv")).unwrap();
    assert_eq!(rows.len(), 60);
    let table = zoo::ConfigTable::load_csv(&fixture_dir().join("front/table.csv")).unwrap();
    table.validate().unwrap();
    assert!(table.len() <= 60);
    // No survivor is dominated by any profiled row.
    for kept in table.iter() {
        for other in &rows {
            let dominates = other.avg_watch_mj <= kept.avg_watch_mj
                && other.avg_mae_bpm <= kept.avg_mae_bpm
                && (other.avg_watch_mj < kept.avg_watch_mj || other.avg_mae_bpm < kept.avg_mae_bpm);
            assert!(!dominates, "{:?} dominated by {:?}", kept.spec, other.spec);
        }
    }
}

#[test]
fn simulate_respects_constraint_and_exit_codes() {
    let out_dir = std::env::temp_dir().join("chris-cli-sim");
    let _ = std::fs::remove_dir_all(&out_dir);
    let simulate = |constraint: &str, out: &str| {
        run(&[
            "simulate",
            "--trace",
            &fx("data/trace.csv"),
            "--table",
            &fx("front/table.csv"),
            "--forest",
            &fx("rf/forest.json"),
            "--model-small",
            &fx("models/model-small.json"),
            "--model-big",
            &fx("models/model-big.json"),
            "--constraint",
            constraint,
            "--out",
            &out_dir.join(out).display().to_string(),
        ])
    };
    // A loose cap is satisfiable, and the selected configuration's profiled
    // MAE must respect it.
    let out = simulate("max-mae=50", "loose");
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("loose/report.json")).unwrap(),
    )
    .unwrap();
    let switches = report["config_switches"].as_array().unwrap();
    assert!(!switches.is_empty());
    assert_eq!(switches[0]["soft_violation"], serde_json::Value::Bool(false));

    // An impossible cap exits 2 and flags the fallback.
    let out = simulate("max-mae=0.001", "tight");
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    // Unknown flags and malformed constraints are plain errors (exit 1).
    let out = run(&["simulate", "--nonsense"]);
    assert_eq!(out.status.code(), Some(1));
    let out = simulate("max-banana=1", "bad");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let out_dir = std::env::temp_dir().join("chris-cli-repro");
    let _ = std::fs::remove_dir_all(&out_dir);
    let simulate = |out: &str| {
        run(&[
            "simulate",
            "--trace",
            &fx("data/trace.csv"),
            "--table",
            &fx("front/table.csv"),
            "--forest",
            &fx("rf/forest.json"),
            "--model-small",
            &fx("models/model-small.json"),
            "--model-big",
            &fx("models/model-big.json"),
            "--constraint",
            "max-energy=0.6",
            "--out",
            &out_dir.join(out).display().to_string(),
        ])
    };
    assert_ok(&simulate("a"));
    assert_ok(&simulate("a")); // overwrite in place
    assert_ok(&simulate("b"));
    for f in ["report.json", "windows.csv", "summary.csv"] {
        let a = std::fs::read(out_dir.join("a").join(f)).unwrap();
        let b = std::fs::read(out_dir.join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn sweep_emits_all_60_rows() {
    let out_dir = std::env::temp_dir().join("chris-cli-sweep");
    let _ = std::fs::remove_dir_all(&out_dir);
    let out = run(&[
        "sweep",
        "--trace",
        &fx("data/trace.csv"),
        "--forest",
        &fx("rf/forest.json"),
        "--model-small",
        &fx("models/model-small.json"),
        "--model-big",
        &fx("models/model-big.json"),
        "--out",
        &out_dir.display().to_string(),
    ]);
    assert_ok(&out);
    let rows = zoo::load_configurations_csv(&out_dir.join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 60);
}

#[test]
fn gen_model_with_head_fit_writes_a_loadable_container() {
    let out_dir = std::env::temp_dir().join("chris-cli-genmodel");
    let _ = std::fs::remove_dir_all(&out_dir);
    let out = run(&[
        "gen-model",
        "--arch",
        "small",
        "--seed",
        "3",
        "--fit-head",
        "--out",
        &out_dir.display().to_string(),
    ]);
    assert_ok(&out);
    let model = chris_core::predictors::tcn::load_model(&out_dir.join("model-small.json")).unwrap();
    let w = chris_core::signal::synth_window(90.0, chris_core::ActivityId::new(2).unwrap(), 1).unwrap();
    let bpm = model.infer(&w).unwrap().bpm;
    assert!(bpm > 20.0 && bpm < 300.0);
}
