//! Configuration enumeration, profiling, and Pareto filtering.
//!
//! A configuration pairs two HR models: the cheaper one (by wearable
//! energy) handles windows up to a difficulty threshold, the stronger one
//! takes the rest, either locally or offloaded to the phone. Profiling a
//! configuration over a labeled window set yields its average MAE, average
//! wearable energy, and offload fraction; the Pareto filter keeps only the
//! configurations that are not dominated in the (energy, MAE) plane.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::difficulty::ActivityClassifier;
use crate::energy::{window_energy, Device, EnergyError, ProfileSet};
use crate::predictors::{ModelKind, PredictError, PredictorSet};
use crate::signal::{ActivityId, SampleWindow};

/// Number of difficulty thresholds: 0 (never use the simple model)
/// through 9 (always use it).
pub const THRESHOLDS: u8 = 10;

#[derive(Debug, Error)]
pub enum ZooError {
    #[error("window set is empty")]
    EmptyWindowSet,
    #[error("window {0} has no reference heart rate")]
    MissingLabels(usize),
    #[error("need at least 2 distinct models, got {0}")]
    TooFewModels(usize),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error("configuration table violates its invariant: {0}")]
    InvalidTable(String),
    #[error("table csv, row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Where a configuration executes its complex model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Execution {
    /// Both models run on the wearable.
    Local,
    /// The simple model runs on the wearable, the complex one on the phone.
    Hybrid,
}

impl std::fmt::Display for Execution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Execution::Local => write!(f, "Local"),
            Execution::Hybrid => write!(f, "Hybrid"),
        }
    }
}

impl std::str::FromStr for Execution {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Local" => Ok(Execution::Local),
            "Hybrid" => Ok(Execution::Hybrid),
            other => Err(format!("unknown execution `{other}`")),
        }
    }
}

/// An unprofiled configuration: the model pair, the difficulty threshold,
/// and where the complex model executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfigSpec {
    pub simple: ModelKind,
    pub complex: ModelKind,
    /// Highest activity id still routed to the simple model (0 = none).
    pub threshold: u8,
    pub execution: Execution,
}

impl ConfigSpec {
    /// Model and device for a window with the given predicted difficulty.
    pub fn route(&self, activity: ActivityId) -> (ModelKind, Device) {
        if activity.get() <= self.threshold {
            (self.simple, Device::Watch)
        } else {
            let device = match self.execution {
                Execution::Local => Device::Watch,
                Execution::Hybrid => Device::Phone,
            };
            (self.complex, device)
        }
    }

    /// Deterministic ordering key: pair names, threshold, execution.
    pub fn sort_key(&self) -> (usize, usize, u8, u8) {
        (
            self.simple.index(),
            self.complex.index(),
            self.threshold,
            match self.execution {
                Execution::Local => 0,
                Execution::Hybrid => 1,
            },
        )
    }
}

impl std::fmt::Display for ConfigSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}, {}] t={} {}",
            self.simple, self.complex, self.threshold, self.execution
        )
    }
}

/// A profiled configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    #[serde(flatten)]
    pub spec: ConfigSpec,
    pub avg_mae_bpm: f64,
    pub avg_watch_mj: f64,
    pub offload_fraction: f64,
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// Configurations over a chosen model subset and execution modes: every
/// unordered pair (roles fixed by wearable energy: cheaper = simple) times
/// every threshold 0..=9.
pub fn enumerate_subset(
    profiles: &ProfileSet,
    kinds: &[ModelKind],
    executions: &[Execution],
) -> Result<Vec<ConfigSpec>, ZooError> {
    if kinds.len() < 2 {
        return Err(ZooError::TooFewModels(kinds.len()));
    }
    let mut pairs = Vec::new();
    for i in 0..kinds.len() {
        for j in (i + 1)..kinds.len() {
            let (a, b) = (kinds[i], kinds[j]);
            let ea = profiles.get(a)?.e_board_mj;
            let eb = profiles.get(b)?.e_board_mj;
            // Cheaper-on-board model takes the simple role; ties break on
            // the canonical model order so enumeration stays deterministic.
            let (simple, complex) = if (ea, a.index()) < (eb, b.index()) {
                (a, b)
            } else {
                (b, a)
            };
            pairs.push((simple, complex));
        }
    }
    pairs.sort_by_key(|&(s, c)| (s.index(), c.index()));

    let mut out = Vec::with_capacity(pairs.len() * THRESHOLDS as usize * executions.len());
    for &(simple, complex) in &pairs {
        for threshold in 0..THRESHOLDS {
            for &execution in executions {
                out.push(ConfigSpec {
                    simple,
                    complex,
                    threshold,
                    execution,
                });
            }
        }
    }
    Ok(out)
}

/// The full configuration space over the three standard models:
/// 10 thresholds x 3 pairs x 2 executions = 60.
pub fn enumerate(profiles: &ProfileSet) -> Vec<ConfigSpec> {
    enumerate_subset(
        profiles,
        &ModelKind::ALL,
        &[Execution::Local, Execution::Hybrid],
    )
    .expect("standard models enumerate")
}

// ---------------------------------------------------------------------------
// Profiling
// ---------------------------------------------------------------------------

/// Profile one configuration over a labeled window set.
///
/// Each window is classified, routed by the threshold rule, and executed by
/// the routed predictor; wearable energy comes from the profile fixtures.
/// Classifier mispredictions flow through unchanged: routing always uses
/// the predicted activity. Windows where the predictor finds no peaks keep
/// their energy cost but contribute no error term, which keeps profiling
/// independent of window order.
pub fn profile(
    spec: &ConfigSpec,
    windows: &[SampleWindow],
    classifier: &dyn ActivityClassifier,
    predictors: &PredictorSet,
    profiles: &ProfileSet,
) -> Result<Configuration, ZooError> {
    if windows.is_empty() {
        return Err(ZooError::EmptyWindowSet);
    }
    let mut abs_err_sum = 0.0;
    let mut estimated = 0usize;
    let mut watch_sum = 0.0;
    let mut offloaded = 0usize;
    for (i, w) in windows.iter().enumerate() {
        let hr_ref = w.hr_ref().ok_or(ZooError::MissingLabels(i))?;
        let predicted = classifier.classify(w);
        let (kind, device) = spec.route(predicted);
        let outcome = window_energy(profiles.get(kind)?, &profiles.link, device);
        watch_sum += outcome.watch_mj;
        if device == Device::Phone {
            offloaded += 1;
        }
        match predictors.predict(kind, w) {
            Ok(est) => {
                abs_err_sum += (est.bpm - hr_ref).abs();
                estimated += 1;
            }
            Err(PredictError::NoPeaks) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let n = windows.len() as f64;
    Ok(Configuration {
        spec: *spec,
        avg_mae_bpm: if estimated > 0 {
            abs_err_sum / estimated as f64
        } else {
            f64::INFINITY
        },
        avg_watch_mj: watch_sum / n,
        offload_fraction: offloaded as f64 / n,
    })
}

// ---------------------------------------------------------------------------
// Pareto filtering
// ---------------------------------------------------------------------------

fn dominates(a: &Configuration, b: &Configuration) -> bool {
    a.avg_watch_mj <= b.avg_watch_mj
        && a.avg_mae_bpm <= b.avg_mae_bpm
        && (a.avg_watch_mj < b.avg_watch_mj || a.avg_mae_bpm < b.avg_mae_bpm)
}

/// The Pareto-optimal configurations, sorted ascending by energy (hence
/// strictly descending by MAE), plus profiling metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigTable {
    rows: Vec<Configuration>,
    pub dataset_id: String,
    pub profile_fixture_id: String,
}

impl std::ops::Deref for ConfigTable {
    type Target = [Configuration];
    fn deref(&self) -> &[Configuration] {
        &self.rows
    }
}

impl ConfigTable {
    pub fn rows(&self) -> &[Configuration] {
        &self.rows
    }

    /// Rebuild a table from rows that are already an antichain (e.g. after
    /// filtering); re-runs the Pareto filter to restore the invariants.
    pub fn from_rows(rows: Vec<Configuration>) -> ConfigTable {
        pareto_filter(&rows)
    }

    /// Check the Pareto/order invariant: rows sorted ascending by energy
    /// and strictly descending by MAE.
    pub fn validate(&self) -> Result<(), ZooError> {
        for pair in self.rows.windows(2) {
            if pair[1].avg_watch_mj < pair[0].avg_watch_mj {
                return Err(ZooError::InvalidTable(format!(
                    "not sorted by energy: {} then {}",
                    pair[0].avg_watch_mj, pair[1].avg_watch_mj
                )));
            }
            if pair[1].avg_mae_bpm >= pair[0].avg_mae_bpm {
                return Err(ZooError::InvalidTable(format!(
                    "MAE not strictly descending: {} then {}",
                    pair[0].avg_mae_bpm, pair[1].avg_mae_bpm
                )));
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), ZooError> {
        save_configurations_csv(&self.rows, path)
    }

    pub fn load_csv(path: &Path) -> Result<Self, ZooError> {
        let rows = load_configurations_csv(path)?;
        let table = ConfigTable {
            rows,
            dataset_id: String::new(),
            profile_fixture_id: String::new(),
        };
        table.validate()?;
        Ok(table)
    }
}

const CSV_HEADER: [&str; 7] = [
    "simple",
    "complex",
    "threshold",
    "execution",
    "avg_mae_bpm",
    "avg_watch_mj",
    "offload_fraction",
];

fn csv_io(e: csv::Error) -> ZooError {
    ZooError::Csv {
        row: 0,
        message: e.to_string(),
    }
}

/// Write profiled configurations in the table CSV schema (also used for
/// non-Pareto dumps like the full 60-row profiling output).
pub fn save_configurations_csv(rows: &[Configuration], path: &Path) -> Result<(), ZooError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(CSV_HEADER).map_err(csv_io)?;
    for c in rows {
        w.write_record(&[
            c.spec.simple.to_string(),
            c.spec.complex.to_string(),
            c.spec.threshold.to_string(),
            c.spec.execution.to_string(),
            format!("{}", c.avg_mae_bpm),
            format!("{}", c.avg_watch_mj),
            format!("{}", c.offload_fraction),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Read profiled configurations from the table CSV schema, without
/// requiring the Pareto invariant.
pub fn load_configurations_csv(path: &Path) -> Result<Vec<Configuration>, ZooError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_io)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ZooError::Csv {
            row: i,
            message: e.to_string(),
        })?;
        let field = |k: usize| -> Result<&str, ZooError> {
            record.get(k).ok_or(ZooError::Csv {
                row: i,
                message: format!("missing column {k}"),
            })
        };
        let parse_err = |message: String| ZooError::Csv { row: i, message };
        let simple: ModelKind = field(0)?.parse().map_err(parse_err)?;
        let complex: ModelKind = field(1)?.parse().map_err(parse_err)?;
        let threshold: u8 = field(2)?.parse().map_err(|e| ZooError::Csv {
            row: i,
            message: format!("threshold: {e}"),
        })?;
        if threshold >= THRESHOLDS {
            return Err(ZooError::Csv {
                row: i,
                message: format!("threshold {threshold} outside 0..=9"),
            });
        }
        let execution: Execution = field(3)?.parse().map_err(parse_err)?;
        let num = |k: usize, name: &str| -> Result<f64, ZooError> {
            field(k)?.parse().map_err(|e| ZooError::Csv {
                row: i,
                message: format!("{name}: {e}"),
            })
        };
        rows.push(Configuration {
            spec: ConfigSpec {
                simple,
                complex,
                threshold,
                execution,
            },
            avg_mae_bpm: num(4, "avg_mae_bpm")?,
            avg_watch_mj: num(5, "avg_watch_mj")?,
            offload_fraction: num(6, "offload_fraction")?,
        });
    }
    Ok(rows)
}

/// Keep the non-dominated configurations, deduplicate exact (energy, MAE)
/// ties by the lexicographically smallest (pair names, threshold,
/// execution), and sort ascending by energy.
pub fn pareto_filter(configs: &[Configuration]) -> ConfigTable {
    let mut kept: Vec<Configuration> = Vec::new();
    for c in configs {
        let dominated = configs.iter().any(|other| dominates(other, c));
        if !dominated {
            kept.push(*c);
        }
    }
    // Exact duplicates on both axes survive dominance; keep one per point.
    kept.sort_by(|a, b| {
        a.avg_watch_mj
            .total_cmp(&b.avg_watch_mj)
            .then(a.avg_mae_bpm.total_cmp(&b.avg_mae_bpm))
            .then(a.spec.sort_key().cmp(&b.spec.sort_key()))
    });
    kept.dedup_by(|b, a| a.avg_watch_mj == b.avg_watch_mj && a.avg_mae_bpm == b.avg_mae_bpm);
    let table = ConfigTable {
        rows: kept,
        dataset_id: String::new(),
        profile_fixture_id: String::new(),
    };
    debug_assert!(table.validate().is_ok());
    table
}
