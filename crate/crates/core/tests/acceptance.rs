//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`.

use std::collections::BTreeSet;
use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use chris_core::difficulty::{self, OracleClassifier};
use chris_core::energy::{alternate_profiles, default_profiles};
use chris_core::engine::{self, ConnectionStatus, Constraint};
use chris_core::predictors::reference::FloatTcn;
use chris_core::predictors::{at_predict, tcn, ModelKind, PredictorSet};
use chris_core::signal::{self, synth_window, ActivityId};
use chris_core::sim::{LinkInterval, LinkSchedule, Simulation};
use chris_core::zoo::{self, ConfigSpec, Configuration, Execution};

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($arg)+));
        }
    };
}

/// Timed criteria take this lock so parallel sibling tests cannot inflate
/// their wall-clock measurements.
static HEAVY: Mutex<()> = Mutex::new(());

fn heavy_guard() -> std::sync::MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, name: &str, result: Result<(), String>) {
    match result {
        Ok(()) => println!("criterion {id} ({name}): PASS"),
        Err(e) => {
            println!("criterion {id} ({name}): FAIL - {e}");
            panic!("criterion {id} ({name}) failed: {e}");
        }
    }
}

// -------------------------------------------------------------------------
// 1. Enumeration counts
// -------------------------------------------------------------------------

fn check_enumeration() -> Result<(), String> {
    let start = Instant::now();
    let profiles = default_profiles();
    let all = zoo::enumerate(&profiles);
    ensure!(all.len() == 60, "expected 60 configurations, got {}", all.len());
    let local_only =
        zoo::enumerate_subset(&profiles, &ModelKind::ALL, &[Execution::Local]).map_err(|e| e.to_string())?;
    ensure!(
        local_only.len() == 30,
        "expected 30 local configurations, got {}",
        local_only.len()
    );
    let elapsed = start.elapsed();
    ensure!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1 s");
    Ok(())
}

#[test]
fn criterion_01_enumeration_counts() {
    report(1, "enumeration counts", check_enumeration());
}

// -------------------------------------------------------------------------
// 2. Energy fixtures
// -------------------------------------------------------------------------

fn check_energy_fixtures() -> Result<(), String> {
    let p = default_profiles();
    let at = p.get(ModelKind::At).map_err(|e| e.to_string())?;
    let small = p.get(ModelKind::TimePpgSmall).map_err(|e| e.to_string())?;
    let big = p.get(ModelKind::TimePpgBig).map_err(|e| e.to_string())?;
    ensure!(at.e_board_mj == 0.234, "AT board {}", at.e_board_mj);
    ensure!(at.e_phone_mj == 1.60, "AT phone {}", at.e_phone_mj);
    ensure!(small.e_board_mj == 0.735, "Small board {}", small.e_board_mj);
    ensure!(small.e_phone_mj == 5.54, "Small phone {}", small.e_phone_mj);
    ensure!(big.e_board_mj == 41.11, "Big board {}", big.e_board_mj);
    ensure!(big.e_phone_mj == 25.60, "Big phone {}", big.e_phone_mj);
    ensure!(p.link.e_ble_mj == 0.52, "BLE energy {}", p.link.e_ble_mj);
    ensure!(p.link.time_ms == 10.240, "BLE time {}", p.link.time_ms);
    ensure!(at.mae_bpm == 10.99, "AT MAE {}", at.mae_bpm);
    ensure!(small.mae_bpm == 5.60, "Small MAE {}", small.mae_bpm);
    ensure!(big.mae_bpm == 4.87, "Big MAE {}", big.mae_bpm);

    let alt = alternate_profiles();
    let alt_small = alt.get(ModelKind::TimePpgSmall).map_err(|e| e.to_string())?;
    ensure!(alt_small.e_board_mj == 0.543, "alt Small board {}", alt_small.e_board_mj);
    let alt_at = alt.get(ModelKind::At).map_err(|e| e.to_string())?;
    ensure!(alt_at.mae_bpm == 10.84, "alt AT MAE {}", alt_at.mae_bpm);
    Ok(())
}

#[test]
fn criterion_02_energy_fixtures() {
    report(2, "energy fixtures", check_energy_fixtures());
}

// -------------------------------------------------------------------------
// 3. Closed-form hybrid energy
// -------------------------------------------------------------------------

fn check_hybrid_closed_form() -> Result<(), String> {
    let _serial = heavy_guard();
    let start = Instant::now();
    let profiles = default_profiles();
    let predictors = PredictorSet::with_random_models(1001);
    let acts: Vec<ActivityId> = ActivityId::all().collect();
    // 50 windows per activity = 450 windows, labels exactly uniform.
    let trace = signal::synth_trace_uniform_windows(&acts, 50, 70.0, 3.0, 99)
        .map_err(|e| e.to_string())?;
    let sim = Simulation::new(&trace, &OracleClassifier, &predictors, &profiles)
        .map_err(|e| e.to_string())?;
    ensure!(sim.n_windows() == 450, "expected 450 windows, got {}", sim.n_windows());

    let schedule = LinkSchedule::always(ConnectionStatus::Connected);
    let mut energies = [0.0f64; 10];
    for t in 0..=9u8 {
        let spec = ConfigSpec {
            simple: ModelKind::At,
            complex: ModelKind::TimePpgBig,
            threshold: t,
            execution: Execution::Hybrid,
        };
        let r = sim.run_forced(&spec, &schedule).map_err(|e| e.to_string())?;
        let expected = (t as f64 / 9.0) * 0.234 + ((9 - t) as f64 / 9.0) * 0.52;
        ensure!(
            (r.watch_mj_mean - expected).abs() < 1e-9,
            "t={t}: watch {} vs closed form {expected}",
            r.watch_mj_mean
        );
        energies[t as usize] = r.watch_mj_mean;
    }
    // The hybrid beats both single-device baselines near the offload knee
    // (t=8 under the threshold rule; t=2 if read as ~80% offloaded).
    for t in [2usize, 8] {
        let baseline_floor = f64::min(0.735, 0.52);
        ensure!(
            energies[t] < baseline_floor,
            "t={t}: energy {} not below both single-device baselines",
            energies[t]
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10 s");
    Ok(())
}

#[test]
fn criterion_03_hybrid_closed_form_energy() {
    report(3, "closed-form hybrid energy", check_hybrid_closed_form());
}

// -------------------------------------------------------------------------
// 4. AT correctness
// -------------------------------------------------------------------------

fn check_at_correctness() -> Result<(), String> {
    let _serial = heavy_guard();
    let start = Instant::now();
    // Clean sinusoids across the band, 40..=200 step 5.
    let mut hr = 40.0;
    while hr <= 200.0 {
        let w = synth_window(hr, ActivityId::MIN, 7).map_err(|e| e.to_string())?;
        let est = at_predict(w.ppg()).map_err(|e| format!("hr {hr}: {e}"))?;
        ensure!(
            (est.bpm - hr).abs() <= 2.0,
            "hr {hr}: estimated {} (err {})",
            est.bpm,
            (est.bpm - hr).abs()
        );
        hr += 5.0;
    }

    // Difficulty monotonicity: activity-9 noise strictly degrades AT.
    let mae_at = |activity: ActivityId| -> Result<f64, String> {
        let mut total = 0.0;
        let mut n = 0usize;
        for seed in 0..60u64 {
            let hr = 60.0 + (seed as f64 * 2.5) % 120.0;
            let w = synth_window(hr, activity, seed).map_err(|e| e.to_string())?;
            if let Ok(est) = at_predict(w.ppg()) {
                total += (est.bpm - hr).abs();
                n += 1;
            }
        }
        ensure!(n > 0, "no estimates at activity {activity}");
        Ok(total / n as f64)
    };
    let easy = mae_at(ActivityId::MIN)?;
    let hard = mae_at(ActivityId::MAX)?;
    ensure!(hard > easy, "activity-9 MAE {hard} not above activity-1 MAE {easy}");

    let elapsed = start.elapsed();
    ensure!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}, budget 5 s");
    Ok(())
}

#[test]
fn criterion_04_at_correctness() {
    report(4, "adaptive-threshold correctness", check_at_correctness());
}

// -------------------------------------------------------------------------
// 5. Quantized TCN fidelity and op counts
// -------------------------------------------------------------------------

fn check_tcn_fidelity() -> Result<(), String> {
    let _serial = heavy_guard();
    use rayon::prelude::*;

    // 100 seeded random weight sets on the small network, a handful on the
    // big one; each int8 estimate must stay within 2 BPM of the float
    // reference run on the dequantized weights.
    let eval_windows: Vec<_> = [(1u8, 70.0), (3, 95.0), (5, 120.0), (7, 150.0), (9, 180.0)]
        .iter()
        .map(|&(a, hr)| synth_window(hr, ActivityId::new(a).unwrap(), 0xF00D ^ a as u64).unwrap())
        .collect();

    let check_arch = |arch: &tcn::TcnArch, seeds: std::ops::Range<u64>| -> Result<f64, String> {
        let worst = seeds
            .into_par_iter()
            .map(|seed| {
                let model = tcn::random_model(arch, seed);
                let float = FloatTcn::from_model(&model);
                let mut worst: f64 = 0.0;
                for w in &eval_windows {
                    let q = model.infer(w).map_err(|e| e.to_string())?.bpm;
                    let f = float.infer(w).map_err(|e| e.to_string())?;
                    worst = worst.max((q - f).abs());
                }
                Ok::<f64, String>(worst)
            })
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
        Ok(worst)
    };

    let worst_small = check_arch(&tcn::TcnArch::timeppg_small(), 0..100)?;
    ensure!(worst_small <= 2.0, "small: worst int8-float gap {worst_small} BPM");
    let worst_big = check_arch(&tcn::TcnArch::timeppg_big(), 0..8)?;
    ensure!(worst_big <= 2.0, "big: worst int8-float gap {worst_big} BPM");

    // Op counts of the shipped shapes against the published figures.
    let small_ops = tcn::TcnArch::timeppg_small().count_ops();
    ensure!(
        (small_ops.params as f64 - 5_090.0).abs() <= 0.05 * 5_090.0,
        "small params {} outside 5% of 5090",
        small_ops.params
    );
    ensure!(
        (small_ops.macs as f64 - 77_630.0).abs() <= 0.10 * 77_630.0,
        "small macs {} outside 10% of 77630",
        small_ops.macs
    );
    let big_ops = tcn::TcnArch::timeppg_big().count_ops();
    ensure!(
        (big_ops.params as f64 - 232_600.0).abs() <= 0.05 * 232_600.0,
        "big params {} outside 5% of 232600",
        big_ops.params
    );
    ensure!(
        (big_ops.macs as f64 - 12_270_000.0).abs() <= 0.10 * 12_270_000.0,
        "big macs {} outside 10% of 12.27M",
        big_ops.macs
    );
    println!(
        "  (worst gaps: small {worst_small:.3} BPM over 100 seeds, big {worst_big:.3} BPM over 8; \
         ops small {}/{}, big {}/{})",
        small_ops.params, small_ops.macs, big_ops.params, big_ops.macs
    );
    Ok(())
}

#[test]
fn criterion_05_quantized_tcn_fidelity() {
    report(5, "quantized TCN fidelity and op counts", check_tcn_fidelity());
}

// -------------------------------------------------------------------------
// 6. Random-forest quality
// -------------------------------------------------------------------------

fn check_rf_quality() -> Result<(), String> {
    let _serial = heavy_guard();
    let start = Instant::now();
    let make_set = |per_activity: usize, seed_base: u64| {
        let mut out = Vec::new();
        for a in ActivityId::all() {
            for k in 0..per_activity {
                let hr = 60.0 + ((k as f64) * 1.7) % 110.0;
                let w = synth_window(hr, a, seed_base + (a.get() as u64) * 10_000 + k as u64)
                    .expect("synthetic window");
                out.push((difficulty::features_of_window(&w), a));
            }
        }
        out
    };
    let train = make_set(200, 0);
    let test = make_set(100, 5_000_000);
    let forest = difficulty::rf_train(&train, 12).map_err(|e| e.to_string())?;
    for t in 1..=8u8 {
        let correct = test
            .iter()
            .filter(|(f, label)| (forest.predict(f).get() <= t) == (label.get() <= t))
            .count();
        let accuracy = correct as f64 / test.len() as f64;
        ensure!(
            accuracy > 0.9,
            "threshold {t}: binary accuracy {accuracy:.4} not above 0.9"
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}, budget 30 s");
    Ok(())
}

#[test]
fn criterion_06_random_forest_quality() {
    report(6, "random-forest difficulty quality", check_rf_quality());
}

// -------------------------------------------------------------------------
// 7. Pareto oracle equivalence
// -------------------------------------------------------------------------

/// (energy bits, MAE bits, spec order key) triple identifying one point.
type FrontKey = (u64, u64, (usize, usize, u8, u8));

/// O(n^2) dominance front straight from the definition, with the same
/// duplicate rule: exact (energy, MAE) ties keep the lexicographically
/// smallest spec.
fn brute_force_front(configs: &[Configuration]) -> BTreeSet<FrontKey> {
    let mut front = Vec::new();
    for (i, c) in configs.iter().enumerate() {
        let mut dominated = false;
        for (j, other) in configs.iter().enumerate() {
            if i == j {
                continue;
            }
            let le = other.avg_watch_mj <= c.avg_watch_mj && other.avg_mae_bpm <= c.avg_mae_bpm;
            let strict = other.avg_watch_mj < c.avg_watch_mj || other.avg_mae_bpm < c.avg_mae_bpm;
            if le && strict {
                dominated = true;
                break;
            }
        }
        if !dominated {
            front.push(*c);
        }
    }
    // Deduplicate exact ties by the smallest sort key.
    let mut best: std::collections::BTreeMap<(u64, u64), (usize, usize, u8, u8)> =
        std::collections::BTreeMap::new();
    for c in front {
        let point = (c.avg_watch_mj.to_bits(), c.avg_mae_bpm.to_bits());
        let key = c.spec.sort_key();
        best.entry(point)
            .and_modify(|k| {
                if key < *k {
                    *k = key;
                }
            })
            .or_insert(key);
    }
    best.into_iter().map(|((e, m), k)| (e, m, k)).collect()
}

fn random_configs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Configuration> {
    let kinds = ModelKind::ALL;
    (0..n)
        .map(|_| {
            let i = rng.random_range(0..3usize);
            let j = (i + rng.random_range(1..3usize)) % 3;
            let (simple, complex) = if kinds[i].index() < kinds[j].index() {
                (kinds[i], kinds[j])
            } else {
                (kinds[j], kinds[i])
            };
            Configuration {
                spec: ConfigSpec {
                    simple,
                    complex,
                    threshold: rng.random_range(0..10u8),
                    execution: if rng.random_range(0..2) == 0 {
                        Execution::Local
                    } else {
                        Execution::Hybrid
                    },
                },
                // Coarse grid so exact ties and duplicates actually occur.
                avg_mae_bpm: rng.random_range(0..24u32) as f64 * 0.5,
                avg_watch_mj: rng.random_range(0..24u32) as f64 * 0.25,
                offload_fraction: 0.0,
            }
        })
        .collect()
}

fn check_pareto_oracle() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    for case in 0..1000 {
        let n = rng.random_range(1..=100usize);
        let configs = random_configs(&mut rng, n);
        let table = zoo::pareto_filter(&configs);
        let got: BTreeSet<_> = table
            .iter()
            .map(|c| (c.avg_watch_mj.to_bits(), c.avg_mae_bpm.to_bits(), c.spec.sort_key()))
            .collect();
        let expected = brute_force_front(&configs);
        ensure!(
            got == expected,
            "case {case} (n={n}): front mismatch: got {} rows, oracle {} rows",
            got.len(),
            expected.len()
        );
        // Antichain plus the extreme points.
        table.validate().map_err(|e| format!("case {case}: {e}"))?;
        let min_e = configs
            .iter()
            .map(|c| c.avg_watch_mj)
            .fold(f64::INFINITY, f64::min);
        let min_m = configs
            .iter()
            .map(|c| c.avg_mae_bpm)
            .fold(f64::INFINITY, f64::min);
        ensure!(
            table.iter().any(|c| c.avg_watch_mj == min_e),
            "case {case}: global min-energy point missing"
        );
        ensure!(
            table.iter().any(|c| c.avg_mae_bpm == min_m),
            "case {case}: global min-MAE point missing"
        );
    }
    Ok(())
}

#[test]
fn criterion_07_pareto_oracle_equivalence() {
    report(7, "pareto filter vs brute-force oracle", check_pareto_oracle());
}

// -------------------------------------------------------------------------
// 8. Decision-engine contract
// -------------------------------------------------------------------------

fn check_engine_contract() -> Result<(), String> {
    // Stored-table example rows.
    let fixture = engine::example_table();
    let sel = engine::select(&fixture[..2], &Constraint::MaxMae(10.5)).map_err(|e| e.to_string())?;
    ensure!(
        !sel.soft_violation && sel.config.avg_watch_mj == 0.87,
        "fixture: expected the 0.87 mJ row, got {} (violation {})",
        sel.config.avg_watch_mj,
        sel.soft_violation
    );

    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for case in 0..1000 {
        let n = rng.random_range(1..=60usize);
        let configs = random_configs(&mut rng, n);
        let th = rng.random_range(0..26u32) as f64 * 0.5;
        let constraint = Constraint::MaxMae(th.max(0.1));
        let sel = engine::select(&configs, &constraint).map_err(|e| e.to_string())?;
        let th = match constraint {
            Constraint::MaxMae(v) => v,
            _ => unreachable!(),
        };
        let feasible: Vec<&Configuration> =
            configs.iter().filter(|c| c.avg_mae_bpm <= th).collect();
        if feasible.is_empty() {
            ensure!(sel.soft_violation, "case {case}: missing soft-violation flag");
            let min_mae = configs.iter().map(|c| c.avg_mae_bpm).fold(f64::INFINITY, f64::min);
            ensure!(
                sel.config.avg_mae_bpm == min_mae,
                "case {case}: fallback not min-MAE"
            );
        } else {
            ensure!(!sel.soft_violation, "case {case}: spurious violation flag");
            ensure!(
                sel.config.avg_mae_bpm <= th,
                "case {case}: selected MAE {} above threshold {th}",
                sel.config.avg_mae_bpm
            );
            let min_e = feasible.iter().map(|c| c.avg_watch_mj).fold(f64::INFINITY, f64::min);
            ensure!(
                sel.config.avg_watch_mj == min_e,
                "case {case}: selected energy {} not minimal {min_e}",
                sel.config.avg_watch_mj
            );
        }

        // Relaxing the threshold never raises the selected energy.
        let table = zoo::pareto_filter(&configs);
        let mut last = f64::INFINITY;
        for step in 0..8 {
            let th = 0.5 + step as f64 * 1.5;
            let sel = engine::select(&table, &Constraint::MaxMae(th)).map_err(|e| e.to_string())?;
            if !sel.soft_violation {
                ensure!(
                    sel.config.avg_watch_mj <= last,
                    "case {case}: energy rose from {last} to {} at threshold {th}",
                    sel.config.avg_watch_mj
                );
                last = sel.config.avg_watch_mj;
            }
        }

        // Disconnected filtering removes exactly the hybrid rows.
        match engine::feasible(&table, ConnectionStatus::Disconnected) {
            Ok(filtered) => {
                let expected: Vec<Configuration> = table
                    .iter()
                    .filter(|c| c.spec.execution == Execution::Local)
                    .copied()
                    .collect();
                let expected = zoo::pareto_filter(&expected);
                ensure!(
                    filtered.rows() == expected.rows(),
                    "case {case}: disconnected filtering mismatch"
                );
            }
            Err(_) => {
                ensure!(
                    table.iter().all(|c| c.spec.execution == Execution::Hybrid),
                    "case {case}: NoFeasibleConfig but local rows exist"
                );
            }
        }
    }
    Ok(())
}

#[test]
fn criterion_08_decision_engine_contract() {
    report(8, "decision-engine selection contract", check_engine_contract());
}

// -------------------------------------------------------------------------
// 9. End-to-end determinism and outage behaviour
// -------------------------------------------------------------------------

fn check_end_to_end() -> Result<(), String> {
    let _serial = heavy_guard();
    use std::process::Command;

    let bin = env!("CARGO_BIN_EXE_chris");
    let work = std::env::temp_dir().join("chris-acceptance-e2e");
    let _ = std::fs::remove_dir_all(&work);
    std::fs::create_dir_all(&work).map_err(|e| e.to_string())?;
    let run = |args: &[&str]| -> Result<std::process::Output, String> {
        Command::new(bin)
            .args(args)
            .output()
            .map_err(|e| e.to_string())
    };
    let path = |s: &str| work.join(s).display().to_string();

    // Assemble inputs.
    let out = run(&[
        "synth",
        "--activities",
        "1..9",
        "--windows-per-activity",
        "8",
        "--seed",
        "5",
        "--out",
        &path("data"),
    ])?;
    ensure!(out.status.success(), "synth failed: {out:?}");
    let out = run(&["train-rf", "--trace", &path("data/trace.csv"), "--seed", "1", "--out", &path("rf")])?;
    ensure!(out.status.success(), "train-rf failed");
    let out = run(&["gen-model", "--arch", "small", "--seed", "2", "--out", &path("models")])?;
    ensure!(out.status.success(), "gen-model small failed");
    let out = run(&["gen-model", "--arch", "big", "--seed", "3", "--out", &path("models")])?;
    ensure!(out.status.success(), "gen-model big failed");
    let out = run(&[
        "profile",
        "--trace",
        &path("data/trace.csv"),
        "--forest",
        &path("rf/forest.json"),
        "--model-small",
        &path("models/model-small.json"),
        "--model-big",
        &path("models/model-big.json"),
        "--out",
        &path("prof"),
    ])?;
    ensure!(out.status.success(), "profile failed");
    let out = run(&["pareto", "--input", &path("prof/profiled.csv"), "--out", &path("front")])?;
    ensure!(out.status.success(), "pareto failed");

    // Outage schedule: offload must be zero inside the outage.
    std::fs::write(
        work.join("schedule.json"),
        r#"{"intervals":[{"start":0,"end":20,"status":"Connected"},{"start":20,"end":40,"status":"Disconnected"},{"start":40,"end":18446744073709551615,"status":"Connected"}]}"#,
    )
    .map_err(|e| e.to_string())?;

    let simulate = |out_dir: &str| -> Result<std::process::Output, String> {
        run(&[
            "simulate",
            "--trace",
            &path("data/trace.csv"),
            "--table",
            &path("front/table.csv"),
            "--forest",
            &path("rf/forest.json"),
            "--model-small",
            &path("models/model-small.json"),
            "--model-big",
            &path("models/model-big.json"),
            "--constraint",
            "max-mae=30",
            "--schedule",
            &path("schedule.json"),
            "--out",
            &path(out_dir),
        ])
    };
    let out = simulate("sim-a")?;
    ensure!(out.status.success(), "simulate A failed: {out:?}");
    let out = simulate("sim-b")?;
    ensure!(out.status.success(), "simulate B failed");

    // Byte-identical reports across executions.
    for f in ["report.json", "windows.csv", "summary.csv", "manifest.json"] {
        let a = std::fs::read(work.join("sim-a").join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(work.join("sim-b").join(f)).map_err(|e| e.to_string())?;
        ensure!(a == b, "{f} differs between identical runs");
    }

    // Offload forced to zero during the outage interval.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(work.join("sim-a/report.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let log = report["window_log"].as_array().ok_or("missing window_log")?;
    for r in log.iter().take(40).skip(20) {
        let device = r["device"].as_str();
        ensure!(
            device != Some("Phone"),
            "window {} offloaded during outage",
            r["idx"]
        );
    }
    Ok(())
}

#[test]
fn criterion_09_end_to_end_determinism() {
    report(9, "end-to-end determinism and outages", check_end_to_end());
}

// -------------------------------------------------------------------------
// Library-level outage determinism used by the sim module contract
// -------------------------------------------------------------------------

#[test]
fn outage_offload_is_zero_in_library_runs() {
    let profiles = default_profiles();
    let predictors = PredictorSet::with_random_models(77);
    let acts: Vec<ActivityId> = ActivityId::all().collect();
    let trace = signal::synth_trace_uniform_windows(&acts, 5, 70.0, 3.0, 3).unwrap();
    let sim = Simulation::new(&trace, &OracleClassifier, &predictors, &profiles).unwrap();
    let n = sim.n_windows();
    let table = zoo::pareto_filter(&[
        Configuration {
            spec: ConfigSpec {
                simple: ModelKind::At,
                complex: ModelKind::TimePpgSmall,
                threshold: 5,
                execution: Execution::Local,
            },
            avg_mae_bpm: 9.0,
            avg_watch_mj: 0.3,
            offload_fraction: 0.0,
        },
        Configuration {
            spec: ConfigSpec {
                simple: ModelKind::At,
                complex: ModelKind::TimePpgBig,
                threshold: 5,
                execution: Execution::Hybrid,
            },
            avg_mae_bpm: 6.0,
            avg_watch_mj: 0.4,
            offload_fraction: 0.4,
        },
    ]);
    let schedule = LinkSchedule::from_intervals(vec![
        LinkInterval { start: 0, end: n / 2, status: ConnectionStatus::Disconnected },
        LinkInterval { start: n / 2, end: usize::MAX, status: ConnectionStatus::Connected },
    ]);
    let report = sim
        .run(&table, &Constraint::MaxMae(8.0), &schedule)
        .unwrap();
    for r in &report.window_log[..n / 2] {
        assert_ne!(r.device, Some(chris_core::Device::Phone));
    }
}
