//! The decision engine: constraint-driven configuration selection plus the
//! per-window dispatch rule.
//!
//! Selection happens when the constraint or the connection status changes,
//! not per window. Per window the engine only compares the predicted
//! difficulty against the active configuration's threshold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::Device;
use crate::predictors::ModelKind;
use crate::signal::ActivityId;
use crate::zoo::{ConfigSpec, ConfigTable, Configuration, Execution};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no feasible configuration for the current connection status")]
    NoFeasibleConfig,
    #[error("selection over an empty table")]
    EmptyTable,
    #[error("constraint threshold must be > 0, got {0}")]
    InvalidConstraint(f64),
    #[error("cannot parse constraint `{0}`: expected max-mae=<bpm> or max-energy=<mJ>")]
    BadConstraintSyntax(String),
}

/// The user constraint: cap either expected error or expected energy.
///
/// Both are soft constraints: selection uses profiled averages, so on-field
/// inputs distributed differently from the profiling set may exceed them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Constraint {
    /// Pick the lowest-energy configuration with profiled MAE below this.
    MaxMae(f64),
    /// Pick the lowest-MAE configuration with profiled energy below this.
    MaxEnergy(f64),
}

impl Constraint {
    pub fn validate(&self) -> Result<(), EngineError> {
        let v = match self {
            Constraint::MaxMae(v) | Constraint::MaxEnergy(v) => *v,
        };
        if v > 0.0 {
            Ok(())
        } else {
            Err(EngineError::InvalidConstraint(v))
        }
    }
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::MaxMae(v) => write!(f, "max-mae={v}"),
            Constraint::MaxEnergy(v) => write!(f, "max-energy={v}"),
        }
    }
}

impl std::str::FromStr for Constraint {
    type Err = EngineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EngineError::BadConstraintSyntax(s.to_string());
        let (key, value) = s.split_once('=').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        let c = match key.trim() {
            "max-mae" => Constraint::MaxMae(value),
            "max-energy" => Constraint::MaxEnergy(value),
            _ => return Err(bad()),
        };
        c.validate()?;
        Ok(c)
    }
}

/// BLE link state as seen by the wearable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConnectionStatus {
    Connected,
    Disconnected,
}

impl std::str::FromStr for ConnectionStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "connected" => Ok(ConnectionStatus::Connected),
            "disconnected" => Ok(ConnectionStatus::Disconnected),
            other => Err(format!("unknown connection status `{other}`")),
        }
    }
}

/// Outcome of the per-window rule: which model runs and where.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dispatch {
    pub model: ModelKind,
    pub device: Device,
}

/// A selected configuration, flagged when the constraint could not be met
/// and the closest feasible configuration was returned instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub config: Configuration,
    pub soft_violation: bool,
}

/// Restrict a table to what the connection status allows: everything when
/// connected, local-only when disconnected. Order/Pareto invariants are
/// re-established on the remainder.
pub fn feasible(table: &ConfigTable, status: ConnectionStatus) -> Result<ConfigTable, EngineError> {
    let rows: Vec<Configuration> = match status {
        ConnectionStatus::Connected => table.rows().to_vec(),
        ConnectionStatus::Disconnected => table
            .rows()
            .iter()
            .filter(|c| c.spec.execution == Execution::Local)
            .copied()
            .collect(),
    };
    if rows.is_empty() {
        return Err(EngineError::NoFeasibleConfig);
    }
    let mut out = ConfigTable::from_rows(rows);
    out.dataset_id = table.dataset_id.clone();
    out.profile_fixture_id = table.profile_fixture_id.clone();
    Ok(out)
}

fn argmin_by_energy(configs: &[Configuration]) -> &Configuration {
    configs
        .iter()
        .min_by(|a, b| {
            a.avg_watch_mj
                .total_cmp(&b.avg_watch_mj)
                .then(a.avg_mae_bpm.total_cmp(&b.avg_mae_bpm))
                .then(a.spec.sort_key().cmp(&b.spec.sort_key()))
        })
        .expect("non-empty")
}

fn argmin_by_mae(configs: &[Configuration]) -> &Configuration {
    configs
        .iter()
        .min_by(|a, b| {
            a.avg_mae_bpm
                .total_cmp(&b.avg_mae_bpm)
                .then(a.avg_watch_mj.total_cmp(&b.avg_watch_mj))
                .then(a.spec.sort_key().cmp(&b.spec.sort_key()))
        })
        .expect("non-empty")
}

/// Pick a configuration under the constraint in one linear pass.
///
/// When no configuration meets the constraint, the closest one is returned
/// with `soft_violation` set: the minimum-MAE configuration for a MAE cap,
/// the minimum-energy one for an energy cap.
pub fn select(configs: &[Configuration], constraint: &Constraint) -> Result<Selection, EngineError> {
    if configs.is_empty() {
        return Err(EngineError::EmptyTable);
    }
    constraint.validate()?;
    let (meeting, fallback): (Vec<Configuration>, &Configuration) = match constraint {
        Constraint::MaxMae(th) => (
            configs.iter().filter(|c| c.avg_mae_bpm <= *th).copied().collect(),
            argmin_by_mae(configs),
        ),
        Constraint::MaxEnergy(th) => (
            configs.iter().filter(|c| c.avg_watch_mj <= *th).copied().collect(),
            argmin_by_energy(configs),
        ),
    };
    if meeting.is_empty() {
        return Ok(Selection {
            config: *fallback,
            soft_violation: true,
        });
    }
    let config = match constraint {
        Constraint::MaxMae(_) => *argmin_by_energy(&meeting),
        Constraint::MaxEnergy(_) => *argmin_by_mae(&meeting),
    };
    Ok(Selection {
        config,
        soft_violation: false,
    })
}

/// The per-window threshold rule: difficulties up to the threshold go to
/// the simple model on the watch, the rest to the complex model (on the
/// phone only for hybrid configurations).
pub fn dispatch(config: &ConfigSpec, predicted_activity: ActivityId) -> Dispatch {
    let (model, device) = config.route(predicted_activity);
    Dispatch { model, device }
}

/// Single-writer engine state: the loaded table, the active constraint and
/// connection status, and the currently selected configuration.
pub struct Engine {
    table: ConfigTable,
    constraint: Constraint,
    status: ConnectionStatus,
    current: Selection,
}

impl Engine {
    pub fn new(
        table: ConfigTable,
        constraint: Constraint,
        status: ConnectionStatus,
    ) -> Result<Self, EngineError> {
        let current = select(&feasible(&table, status)?, &constraint)?;
        Ok(Engine {
            table,
            constraint,
            status,
            current,
        })
    }

    pub fn current(&self) -> Selection {
        self.current
    }

    pub fn status(&self) -> ConnectionStatus {
        self.status
    }

    /// Update the connection status, re-selecting if it changed.
    pub fn set_status(&mut self, status: ConnectionStatus) -> Result<Selection, EngineError> {
        if status != self.status {
            self.current = select(&feasible(&self.table, status)?, &self.constraint)?;
            self.status = status;
        }
        Ok(self.current)
    }

    /// Update the constraint, re-selecting if it changed.
    pub fn set_constraint(&mut self, constraint: Constraint) -> Result<Selection, EngineError> {
        if constraint != self.constraint {
            self.current = select(&feasible(&self.table, self.status)?, &constraint)?;
            self.constraint = constraint;
        }
        Ok(self.current)
    }

    pub fn dispatch(&self, predicted_activity: ActivityId) -> Dispatch {
        dispatch(&self.current.config.spec, predicted_activity)
    }
}

/// Example selection rows mirroring the shape of a stored table: MAE/energy
/// values are illustrative, not derivable from the shipped fixtures.
pub fn example_table() -> Vec<Configuration> {
    vec![
        Configuration {
            spec: ConfigSpec {
                simple: ModelKind::At,
                complex: ModelKind::TimePpgSmall,
                threshold: 9,
                execution: Execution::Local,
            },
            avg_mae_bpm: 10.11,
            avg_watch_mj: 0.92,
            offload_fraction: 0.0,
        },
        Configuration {
            spec: ConfigSpec {
                simple: ModelKind::At,
                complex: ModelKind::TimePpgBig,
                threshold: 9,
                execution: Execution::Hybrid,
            },
            avg_mae_bpm: 10.05,
            avg_watch_mj: 0.87,
            offload_fraction: 0.0,
        },
        Configuration {
            spec: ConfigSpec {
                simple: ModelKind::At,
                complex: ModelKind::TimePpgBig,
                threshold: 1,
                execution: Execution::Local,
            },
            avg_mae_bpm: 5.11,
            avg_watch_mj: 40.05,
            offload_fraction: 0.0,
        },
    ]
}
