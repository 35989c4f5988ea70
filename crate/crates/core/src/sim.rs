//! Trace-driven simulation: difficulty classification, configuration
//! selection at link-status boundaries, per-window dispatch, predictor
//! execution, and energy accounting.
//!
//! A [`Simulation`] owns the windowed trace plus memoized per-(window,
//! model) predictions, so repeated runs over the same trace (threshold
//! sweeps, constraint studies) never re-run a network on a window twice.
//! Predictors are pure, which makes the memo exact.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::difficulty::ActivityClassifier;
use crate::energy::{window_energy, Device, EnergyError, ProfileSet};
use crate::engine::{self, ConnectionStatus, Constraint, EngineError};
use crate::predictors::{ModelKind, PredictError, PredictorSet};
use crate::signal::{SampleWindow, SignalError, Trace};
use crate::zoo::{self, ConfigSpec, ConfigTable, Configuration};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Zoo(#[from] zoo::ZooError),
    #[error("invalid link schedule: {0}")]
    Schedule(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Link schedule
// ---------------------------------------------------------------------------

/// One half-open window-index interval with a fixed connection status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkInterval {
    pub start: usize,
    /// Exclusive; `usize::MAX` means "to the end of the trace".
    pub end: usize,
    pub status: ConnectionStatus,
}

/// Connection status over window indices: disjoint, sorted intervals that
/// must cover [0, n_windows) once resolved against a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSchedule {
    pub intervals: Vec<LinkInterval>,
}

impl LinkSchedule {
    /// Single status for the whole trace.
    pub fn always(status: ConnectionStatus) -> Self {
        LinkSchedule {
            intervals: vec![LinkInterval {
                start: 0,
                end: usize::MAX,
                status,
            }],
        }
    }

    pub fn from_intervals(intervals: Vec<LinkInterval>) -> Self {
        LinkSchedule { intervals }
    }

    /// Clip to `n_windows`, check the cover/disjoint/sorted invariants, and
    /// merge adjacent intervals with equal status so interval boundaries are
    /// exactly the status changes.
    pub fn resolve(&self, n_windows: usize) -> Result<Vec<LinkInterval>, SimError> {
        let mut expected_start = 0usize;
        let mut out: Vec<LinkInterval> = Vec::new();
        for (i, iv) in self.intervals.iter().enumerate() {
            if iv.start != expected_start {
                return Err(SimError::Schedule(format!(
                    "interval {i} starts at {}, expected {expected_start}",
                    iv.start
                )));
            }
            let end = iv.end.min(n_windows);
            if end <= iv.start {
                return Err(SimError::Schedule(format!(
                    "interval {i} is empty after clipping to {n_windows} windows"
                )));
            }
            expected_start = end;
            match out.last_mut() {
                Some(prev) if prev.status == iv.status => prev.end = end,
                _ => out.push(LinkInterval {
                    start: iv.start,
                    end,
                    status: iv.status,
                }),
            }
            if end == n_windows {
                break;
            }
        }
        if expected_start < n_windows {
            return Err(SimError::Schedule(format!(
                "schedule covers only [0, {expected_start}) of {n_windows} windows"
            )));
        }
        Ok(out)
    }

    pub fn load_json(path: &Path) -> Result<Self, SimError> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum ScheduleFile {
            Always { always: ConnectionStatus },
            Intervals { intervals: Vec<LinkInterval> },
        }
        let text = std::fs::read_to_string(path)?;
        match serde_json::from_str::<ScheduleFile>(&text)? {
            ScheduleFile::Always { always } => Ok(LinkSchedule::always(always)),
            ScheduleFile::Intervals { intervals } => Ok(LinkSchedule::from_intervals(intervals)),
        }
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// One row of the per-window log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub idx: usize,
    pub activity_true: u8,
    pub activity_pred: u8,
    /// None when no feasible configuration covered this window.
    pub model: Option<ModelKind>,
    pub device: Option<Device>,
    /// None when the predictor failed and no previous estimate existed.
    pub hr_pred: Option<f64>,
    pub hr_ref: Option<f64>,
    pub watch_mj: f64,
    pub phone_mj: f64,
    /// Execution latency from the profile time fields (BLE transfer plus
    /// phone time when offloaded). Recorded, never used for scheduling.
    pub latency_ms: f64,
}

/// Non-fatal events recorded during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FaultEntry {
    /// No feasible configuration for an interval; its windows are skipped.
    NoFeasibleConfig { window_start: usize, window_end: usize },
    /// The predictor found no peaks; the previous estimate was reused.
    HeldEstimate { window_index: usize },
    /// The predictor found no peaks and no previous estimate existed.
    MissingEstimate { window_index: usize },
}

/// A configuration change event (always recorded at window 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSwitch {
    pub window_index: usize,
    pub config: ConfigSpec,
    pub soft_violation: bool,
}

/// Per-activity accounting, keyed by the window's true activity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityStats {
    pub count: usize,
    pub mae_bpm: Option<f64>,
    pub watch_mj: f64,
}

/// Full accounting of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n_windows: usize,
    /// Mean absolute error over labeled windows that produced an estimate.
    pub mae_bpm: Option<f64>,
    pub watch_mj_total: f64,
    pub watch_mj_mean: f64,
    pub phone_mj_total: f64,
    pub offload_fraction: f64,
    pub per_activity: BTreeMap<u8, ActivityStats>,
    pub config_switches: Vec<ConfigSwitch>,
    pub faults: Vec<FaultEntry>,
    pub window_log: Vec<WindowRecord>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save_json(&self, path: &Path) -> Result<(), SimError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Per-window CSV: idx,activity_true,activity_pred,model,device,
    /// hr_pred,hr_ref,watch_mj,phone_mj.
    pub fn save_window_csv(&self, path: &Path) -> Result<(), SimError> {
        let mut out = String::from(
            "idx,activity_true,activity_pred,model,device,hr_pred,hr_ref,watch_mj,phone_mj\n",
        );
        for r in &self.window_log {
            let model = r.model.map(|m| m.to_string()).unwrap_or_default();
            let device = r.device.map(|d| d.to_string()).unwrap_or_default();
            let hr_pred = r.hr_pred.map(|v| v.to_string()).unwrap_or_default();
            let hr_ref = r.hr_ref.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.idx,
                r.activity_true,
                r.activity_pred,
                model,
                device,
                hr_pred,
                hr_ref,
                r.watch_mj,
                r.phone_mj
            ));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// One-line summary CSV.
    pub fn save_summary_csv(&self, path: &Path) -> Result<(), SimError> {
        let mae = self.mae_bpm.map(|v| v.to_string()).unwrap_or_default();
        let text = format!(
            "n_windows,mae_bpm,watch_mj_total,watch_mj_mean,phone_mj_total,offload_fraction\n{},{},{},{},{},{}\n",
            self.n_windows,
            mae,
            self.watch_mj_total,
            self.watch_mj_mean,
            self.phone_mj_total,
            self.offload_fraction
        );
        std::fs::write(path, text)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

type MemoCell = OnceLock<Result<Option<f64>, PredictError>>;

/// Per-interval execution plan: the interval plus the selection active in
/// it (None when no configuration was feasible).
type RunPlan = Vec<(LinkInterval, Option<engine::Selection>)>;

/// A windowed trace bound to a classifier, predictors, and energy profiles,
/// with per-(window, model) prediction memoization shared across runs.
pub struct Simulation<'a> {
    windows: Vec<SampleWindow>,
    activity_pred: Vec<u8>,
    predictors: &'a PredictorSet,
    profiles: &'a ProfileSet,
    memo: Vec<[MemoCell; 3]>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        trace: &Trace,
        classifier: &dyn ActivityClassifier,
        predictors: &'a PredictorSet,
        profiles: &'a ProfileSet,
    ) -> Result<Self, SimError> {
        let windows = crate::signal::windows(trace)?;
        Ok(Self::from_windows(windows, classifier, predictors, profiles))
    }

    /// Build on an already-windowed set (e.g. synthetic windows).
    pub fn from_windows(
        windows: Vec<SampleWindow>,
        classifier: &dyn ActivityClassifier,
        predictors: &'a PredictorSet,
        profiles: &'a ProfileSet,
    ) -> Self {
        let activity_pred: Vec<u8> = windows.iter().map(|w| classifier.classify(w).get()).collect();
        let memo = (0..windows.len()).map(|_| Default::default()).collect();
        Simulation {
            windows,
            activity_pred,
            predictors,
            profiles,
            memo,
        }
    }

    pub fn n_windows(&self) -> usize {
        self.windows.len()
    }

    pub fn windows(&self) -> &[SampleWindow] {
        &self.windows
    }

    /// Memoized prediction; Ok(None) means the predictor found no peaks.
    fn predict(&self, idx: usize, kind: ModelKind) -> Result<Option<f64>, PredictError> {
        self.memo[idx][kind.index()]
            .get_or_init(|| match self.predictors.predict(kind, &self.windows[idx]) {
                Ok(est) => Ok(Some(est.bpm)),
                Err(PredictError::NoPeaks) => Ok(None),
                Err(e) => Err(e),
            })
            .clone()
    }

    /// Fill the memo for the given models over all windows in parallel.
    pub fn predict_all(&self, kinds: &[ModelKind]) -> Result<(), PredictError> {
        let results: Vec<Result<(), PredictError>> = (0..self.windows.len())
            .into_par_iter()
            .map(|idx| {
                for &kind in kinds {
                    self.predict(idx, kind)?;
                }
                Ok(())
            })
            .collect();
        results.into_iter().collect()
    }

    /// Full run: select a configuration per link-status interval, dispatch
    /// and execute each window, account energy.
    pub fn run(
        &self,
        table: &ConfigTable,
        constraint: &Constraint,
        schedule: &LinkSchedule,
    ) -> Result<SimReport, SimError> {
        let intervals = schedule.resolve(self.windows.len())?;
        let mut plan: RunPlan = Vec::new();
        for iv in intervals {
            let selection = match engine::feasible(table, iv.status) {
                Ok(feasible_table) => Some(engine::select(&feasible_table, constraint)?),
                Err(EngineError::NoFeasibleConfig) => None,
                Err(e) => return Err(e.into()),
            };
            plan.push((iv, selection));
        }
        self.execute(&plan)
    }

    /// Run a single forced configuration (no selection step).
    pub fn run_forced(
        &self,
        spec: &ConfigSpec,
        schedule: &LinkSchedule,
    ) -> Result<SimReport, SimError> {
        let intervals = schedule.resolve(self.windows.len())?;
        let plan: RunPlan = intervals
            .into_iter()
            .map(|iv| {
                // A hybrid configuration is infeasible while disconnected.
                let feasible = iv.status == ConnectionStatus::Connected
                    || spec.execution == crate::zoo::Execution::Local;
                let selection = feasible.then_some(engine::Selection {
                    config: Configuration {
                        spec: *spec,
                        avg_mae_bpm: f64::NAN,
                        avg_watch_mj: f64::NAN,
                        offload_fraction: f64::NAN,
                    },
                    soft_violation: false,
                });
                (iv, selection)
            })
            .collect();
        self.execute(&plan)
    }

    fn execute(&self, plan: &RunPlan) -> Result<SimReport, SimError> {
        let mut report = SimReport {
            n_windows: self.windows.len(),
            mae_bpm: None,
            watch_mj_total: 0.0,
            watch_mj_mean: 0.0,
            phone_mj_total: 0.0,
            offload_fraction: 0.0,
            per_activity: BTreeMap::new(),
            config_switches: Vec::new(),
            faults: Vec::new(),
            window_log: Vec::with_capacity(self.windows.len()),
        };
        let mut abs_err_sum = 0.0;
        let mut labeled_estimates = 0usize;
        let mut offloaded = 0usize;
        let mut last_estimate: Option<f64> = None;
        // Per-activity accumulators: (count, watch_mj, err_sum, err_count).
        let mut acc: BTreeMap<u8, (usize, f64, f64, usize)> = BTreeMap::new();

        for (iv, selection) in plan {
            match selection {
                Some(sel) => report.config_switches.push(ConfigSwitch {
                    window_index: iv.start,
                    config: sel.config.spec,
                    soft_violation: sel.soft_violation,
                }),
                None => report.faults.push(FaultEntry::NoFeasibleConfig {
                    window_start: iv.start,
                    window_end: iv.end,
                }),
            }
            for idx in iv.start..iv.end {
                let w = &self.windows[idx];
                let true_activity = w.activity().get();
                let pred_activity = self.activity_pred[idx];
                let entry = acc.entry(true_activity).or_insert((0, 0.0, 0.0, 0));
                entry.0 += 1;

                let Some(sel) = selection else {
                    report.window_log.push(WindowRecord {
                        idx,
                        activity_true: true_activity,
                        activity_pred: pred_activity,
                        model: None,
                        device: None,
                        hr_pred: None,
                        hr_ref: w.hr_ref(),
                        watch_mj: 0.0,
                        phone_mj: 0.0,
                        latency_ms: 0.0,
                    });
                    continue;
                };

                let dispatch = engine::dispatch(
                    &sel.config.spec,
                    crate::signal::ActivityId::new(pred_activity).expect("valid prediction"),
                );
                let estimate = match self.predict(idx, dispatch.model)? {
                    Some(bpm) => {
                        last_estimate = Some(bpm);
                        Some(bpm)
                    }
                    None => {
                        if last_estimate.is_some() {
                            report.faults.push(FaultEntry::HeldEstimate { window_index: idx });
                        } else {
                            report.faults.push(FaultEntry::MissingEstimate { window_index: idx });
                        }
                        last_estimate
                    }
                };
                let model_profile = self.profiles.get(dispatch.model)?;
                let outcome = window_energy(model_profile, &self.profiles.link, dispatch.device);
                let latency_ms = match dispatch.device {
                    Device::Watch => model_profile.time_board_ms,
                    Device::Phone => self.profiles.link.time_ms + model_profile.time_phone_ms,
                };
                report.watch_mj_total += outcome.watch_mj;
                report.phone_mj_total += outcome.phone_mj;
                entry.1 += outcome.watch_mj;
                if dispatch.device == Device::Phone {
                    offloaded += 1;
                }
                if let (Some(bpm), Some(hr_ref)) = (estimate, w.hr_ref()) {
                    let err = (bpm - hr_ref).abs();
                    abs_err_sum += err;
                    labeled_estimates += 1;
                    entry.2 += err;
                    entry.3 += 1;
                }
                report.window_log.push(WindowRecord {
                    idx,
                    activity_true: true_activity,
                    activity_pred: pred_activity,
                    model: Some(dispatch.model),
                    device: Some(dispatch.device),
                    hr_pred: estimate,
                    hr_ref: w.hr_ref(),
                    watch_mj: outcome.watch_mj,
                    phone_mj: outcome.phone_mj,
                    latency_ms,
                });
            }
        }

        if labeled_estimates > 0 {
            report.mae_bpm = Some(abs_err_sum / labeled_estimates as f64);
        }
        report.watch_mj_mean = report.watch_mj_total / self.windows.len().max(1) as f64;
        report.offload_fraction = offloaded as f64 / self.windows.len().max(1) as f64;
        report.per_activity = acc
            .into_iter()
            .map(|(a, (count, watch, err_sum, err_count))| {
                (
                    a,
                    ActivityStats {
                        count,
                        mae_bpm: (err_count > 0).then(|| err_sum / err_count as f64),
                        watch_mj: watch,
                    },
                )
            })
            .collect();
        Ok(report)
    }

    /// Run every enumerated configuration with an all-connected schedule,
    /// yielding the MAE-vs-energy cloud. Measured averages fill each
    /// configuration's profiled fields.
    pub fn sweep(&self) -> Result<Vec<(Configuration, SimReport)>, SimError> {
        let specs = zoo::enumerate(self.profiles);
        let mut kinds: Vec<ModelKind> = specs
            .iter()
            .flat_map(|s| [s.simple, s.complex])
            .collect();
        kinds.sort_by_key(|k| k.index());
        kinds.dedup();
        self.predict_all(&kinds)?;

        let schedule = LinkSchedule::always(ConnectionStatus::Connected);
        let mut out = Vec::with_capacity(specs.len());
        for spec in specs {
            let report = self.run_forced(&spec, &schedule)?;
            let config = Configuration {
                spec,
                avg_mae_bpm: report.mae_bpm.unwrap_or(f64::NAN),
                avg_watch_mj: report.watch_mj_mean,
                offload_fraction: report.offload_fraction,
            };
            out.push((config, report));
        }
        Ok(out)
    }
}

/// Write sweep results as the table CSV schema (measured values).
pub fn save_sweep_csv(rows: &[(Configuration, SimReport)], path: &Path) -> Result<(), SimError> {
    let configs: Vec<Configuration> = rows.iter().map(|(c, _)| *c).collect();
    zoo::save_configurations_csv(&configs, path)?;
    Ok(())
}
