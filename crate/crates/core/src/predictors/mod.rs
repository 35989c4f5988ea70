//! Heart-rate estimators: the classical adaptive-threshold peak tracker and
//! an int8 inference engine for dilated temporal convolutional networks.

pub mod at;
pub mod reference;
pub mod tcn;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::SampleWindow;

pub use at::at_predict;
pub use tcn::{count_ops, tcn_infer, OpCount, TcnArch, TcnModel, TcnSpec, TcnWeights};

/// Lower clamp bound for any HR estimate, BPM (exclusive).
pub const BPM_MIN: f64 = 20.0;
/// Upper clamp bound for any HR estimate, BPM (exclusive).
pub const BPM_MAX: f64 = 300.0;

/// Clamp a raw estimate strictly inside the physiological range.
pub(crate) fn clamp_bpm(bpm: f64) -> f64 {
    let lo = BPM_MIN.next_up();
    let hi = BPM_MAX.next_down();
    if bpm.is_nan() {
        return lo;
    }
    bpm.clamp(lo, hi)
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PredictError {
    #[error("fewer than 2 peak regions found")]
    NoPeaks,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("uncalibrated quantization: missing or non-positive scale for {0}")]
    UncalibratedQuantization(String),
    #[error("no predictor available for model {0}")]
    ModelUnavailable(ModelKind),
}

/// One heart-rate estimate in BPM, always inside (20, 300).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrEstimate {
    pub bpm: f64,
}

/// The three benchmark predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "AT")]
    At,
    #[serde(rename = "TimePPG-Small")]
    TimePpgSmall,
    #[serde(rename = "TimePPG-Big")]
    TimePpgBig,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::At, ModelKind::TimePpgSmall, ModelKind::TimePpgBig];

    /// Stable index used for compact per-model arrays.
    pub fn index(self) -> usize {
        match self {
            ModelKind::At => 0,
            ModelKind::TimePpgSmall => 1,
            ModelKind::TimePpgBig => 2,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::At => write!(f, "AT"),
            ModelKind::TimePpgSmall => write!(f, "TimePPG-Small"),
            ModelKind::TimePpgBig => write!(f, "TimePPG-Big"),
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "AT" => Ok(ModelKind::At),
            "TimePPG-Small" => Ok(ModelKind::TimePpgSmall),
            "TimePPG-Big" => Ok(ModelKind::TimePpgBig),
            other => Err(format!("unknown model kind `{other}`")),
        }
    }
}

/// The predictors available to a run, keyed by [`ModelKind`].
///
/// The adaptive-threshold estimator is always available; the two networks
/// are optional because a run whose configurations never route to them does
/// not need their weights.
pub struct PredictorSet {
    small: Option<TcnModel>,
    big: Option<TcnModel>,
}

impl PredictorSet {
    pub fn new(small: Option<TcnModel>, big: Option<TcnModel>) -> Self {
        PredictorSet { small, big }
    }

    /// Only the adaptive-threshold estimator.
    pub fn at_only() -> Self {
        PredictorSet {
            small: None,
            big: None,
        }
    }

    /// Seeded random-weight models for both network sizes, calibrated on
    /// synthetic windows. Useful for tests and desk-scale experiments.
    pub fn with_random_models(seed: u64) -> Self {
        PredictorSet {
            small: Some(tcn::random_model(&TcnArch::timeppg_small(), seed)),
            big: Some(tcn::random_model(&TcnArch::timeppg_big(), seed ^ 0x9e37_79b9)),
        }
    }

    pub fn has(&self, kind: ModelKind) -> bool {
        match kind {
            ModelKind::At => true,
            ModelKind::TimePpgSmall => self.small.is_some(),
            ModelKind::TimePpgBig => self.big.is_some(),
        }
    }

    /// Run the predictor for `kind` on a window.
    pub fn predict(&self, kind: ModelKind, window: &SampleWindow) -> Result<HrEstimate, PredictError> {
        match kind {
            ModelKind::At => at::at_predict(window.ppg()),
            ModelKind::TimePpgSmall => self
                .small
                .as_ref()
                .ok_or(PredictError::ModelUnavailable(kind))?
                .infer(window),
            ModelKind::TimePpgBig => self
                .big
                .as_ref()
                .ok_or(PredictError::ModelUnavailable(kind))?
                .infer(window),
        }
    }
}
