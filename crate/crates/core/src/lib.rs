//! Collaborative wearable-to-mobile heart-rate inference.
//!
//! This crate models a two-device HR tracking system: a wearable samples a
//! PPG signal plus 3-axis acceleration, classifies how difficult the current
//! window is to process, and then either runs a cheap local estimator or
//! offloads the window to a connected phone running a heavier model. The
//! library covers the whole loop at desk scale:
//!
//! - [`signal`]: synthetic trace generation, CSV ingestion, sliding windows
//! - [`predictors`]: the adaptive-threshold estimator and an int8 inference
//!   engine for dilated temporal convolutional networks
//! - [`difficulty`]: accelerometer features and a small random forest
//! - [`energy`]: per-prediction energy accounting from device profiles
//! - [`zoo`]: configuration enumeration, profiling, and Pareto filtering
//! - [`engine`]: constraint-driven configuration selection and dispatch
//! - [`sim`]: trace-driven simulation with link schedules and reports

pub mod difficulty;
pub mod energy;
pub mod engine;
pub mod predictors;
pub mod signal;
pub mod sim;
pub mod zoo;

pub use energy::{Device, EnergyOutcome, LinkProfile, ModelProfile, ProfileSet};
pub use engine::{ConnectionStatus, Constraint, Dispatch, Selection};
pub use predictors::{HrEstimate, ModelKind, PredictorSet};
pub use signal::{ActivityId, SampleWindow, Trace};
pub use zoo::{ConfigSpec, ConfigTable, Configuration, Execution};
