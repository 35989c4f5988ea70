//! Synthetic PPG/accelerometer traces, CSV ingestion, and sliding windows.
//!
//! All signals are sampled at 32 Hz. A window is 256 samples (8 s) and
//! consecutive windows are strided by 64 samples (2 s), so neighbours share
//! 192 samples.
//!
//! The synthetic generator stands in for a real recording: the PPG channel
//! is a unit sinusoid at the heart-rate frequency plus Gaussian motion
//! noise whose amplitude grows with the activity level, and the three accel
//! axes are zero-mean Gaussian noise whose energy grows with the activity
//! level. Everything is driven by a seeded PRNG so traces are reproducible
//! bit for bit.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sampling rate of every trace and window, Hz.
pub const SAMPLE_RATE_HZ: u32 = 32;
/// Samples per window (8 seconds at 32 Hz).
pub const WINDOW_LEN: usize = 256;
/// Stride between consecutive windows (2 seconds).
pub const WINDOW_STRIDE: usize = 64;

/// PPG noise amplitude for a given activity level.
fn ppg_noise_sigma(activity: ActivityId) -> f64 {
    0.05 * (activity.get() as f64 - 1.0)
}

/// Per-axis accel noise amplitude for a given activity level.
fn accel_noise_sigma(activity: ActivityId) -> f64 {
    0.1 * activity.get() as f64
}

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("heart rate {0} BPM outside supported range (20, 300)")]
    InvalidHr(f64),
    #[error("activity id {0} outside 1..=9")]
    InvalidActivity(u8),
    #[error("row {row}: bad value in column `{column}`: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },
    #[error("required column `{0}` missing from header")]
    MissingColumn(String),
    #[error("trace has {rows} rows, need at least {needed} for one window")]
    TraceTooShort { rows: usize, needed: usize },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Activity level, 1 (least motion artifacts) through 9 (most).
///
/// The ordering is total and doubles as the processing-difficulty ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ActivityId(u8);

impl ActivityId {
    pub const MIN: ActivityId = ActivityId(1);
    pub const MAX: ActivityId = ActivityId(9);

    pub fn new(id: u8) -> Result<Self, SignalError> {
        if (1..=9).contains(&id) {
            Ok(ActivityId(id))
        } else {
            Err(SignalError::InvalidActivity(id))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// All nine levels in ascending difficulty order.
    pub fn all() -> impl Iterator<Item = ActivityId> {
        (1..=9).map(ActivityId)
    }
}

impl TryFrom<u8> for ActivityId {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        ActivityId::new(v).map_err(|e| e.to_string())
    }
}

impl From<ActivityId> for u8 {
    fn from(a: ActivityId) -> u8 {
        a.0
    }
}

impl std::fmt::Display for ActivityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One 8-second slice of PPG plus 3-axis acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    ppg: Vec<f64>,
    accel: [Vec<f64>; 3],
    activity: ActivityId,
    hr_ref: Option<f64>,
}

impl SampleWindow {
    pub fn new(
        ppg: Vec<f64>,
        accel: [Vec<f64>; 3],
        activity: ActivityId,
        hr_ref: Option<f64>,
    ) -> Result<Self, SignalError> {
        if ppg.len() != WINDOW_LEN {
            return Err(SignalError::InvalidWindow(format!(
                "ppg length {} != {}",
                ppg.len(),
                WINDOW_LEN
            )));
        }
        for (i, axis) in accel.iter().enumerate() {
            if axis.len() != WINDOW_LEN {
                return Err(SignalError::InvalidWindow(format!(
                    "accel axis {} length {} != {}",
                    i,
                    axis.len(),
                    WINDOW_LEN
                )));
            }
        }
        if let Some(hr) = hr_ref {
            if !(hr > 20.0 && hr < 300.0) {
                return Err(SignalError::InvalidHr(hr));
            }
        }
        Ok(SampleWindow {
            ppg,
            accel,
            activity,
            hr_ref,
        })
    }

    pub fn ppg(&self) -> &[f64] {
        &self.ppg
    }

    pub fn accel(&self) -> &[Vec<f64>; 3] {
        &self.accel
    }

    pub fn activity(&self) -> ActivityId {
        self.activity
    }

    pub fn hr_ref(&self) -> Option<f64> {
        self.hr_ref
    }

    pub fn fs(&self) -> u32 {
        SAMPLE_RATE_HZ
    }
}

/// One row of a trace: a single 32 Hz sample tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub ppg: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub activity: ActivityId,
    pub hr_ref: Option<f64>,
}

/// A time-ordered sample sequence at 32 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    /// Master seed used to generate the trace, when synthetic.
    pub seed: Option<u64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of windows the trace yields: floor((N - 256) / 64) + 1.
    pub fn window_count(&self) -> usize {
        if self.rows.len() < WINDOW_LEN {
            0
        } else {
            (self.rows.len() - WINDOW_LEN) / WINDOW_STRIDE + 1
        }
    }
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

fn check_hr(hr_bpm: f64) -> Result<(), SignalError> {
    if hr_bpm > 20.0 && hr_bpm < 300.0 && hr_bpm.is_finite() {
        Ok(())
    } else {
        Err(SignalError::InvalidHr(hr_bpm))
    }
}

/// Generate one synthetic window with known ground truth.
///
/// Deterministic in (hr_bpm, activity, seed): the PRNG draws the PPG noise
/// first, then the three accel axes, 256 samples each.
pub fn synth_window(
    hr_bpm: f64,
    activity: ActivityId,
    seed: u64,
) -> Result<SampleWindow, SignalError> {
    check_hr(hr_bpm)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = hr_bpm / 60.0;
    let alpha = ppg_noise_sigma(activity);
    let beta = accel_noise_sigma(activity);

    let ppg: Vec<f64> = (0..WINDOW_LEN)
        .map(|n| {
            let clean = (2.0 * PI * f * n as f64 / SAMPLE_RATE_HZ as f64).sin();
            let noise: f64 = rng.sample(StandardNormal);
            clean + alpha * noise
        })
        .collect();
    let mut accel: [Vec<f64>; 3] = Default::default();
    for axis in accel.iter_mut() {
        *axis = (0..WINDOW_LEN)
            .map(|_| beta * rng.sample::<f64, _>(StandardNormal))
            .collect();
    }

    SampleWindow::new(ppg, accel, activity, Some(hr_bpm))
}

/// One contiguous segment of a synthetic trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSpec {
    pub activity: ActivityId,
    pub hr_bpm: f64,
    /// Segment length in rows (32 Hz ticks).
    pub n_rows: usize,
}

/// Generate a multi-segment synthetic trace.
///
/// Within a segment the PPG phase restarts at zero, so any window fully
/// inside it has its dominant frequency at the segment heart rate.
pub fn synth_trace(segments: &[SegmentSpec], seed: u64) -> Result<Trace, SignalError> {
    for s in segments {
        check_hr(s.hr_bpm)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut t_idx: usize = 0;
    for seg in segments {
        let f = seg.hr_bpm / 60.0;
        let alpha = ppg_noise_sigma(seg.activity);
        let beta = accel_noise_sigma(seg.activity);
        for n in 0..seg.n_rows {
            let clean = (2.0 * PI * f * n as f64 / SAMPLE_RATE_HZ as f64).sin();
            let ppg = clean + alpha * rng.sample::<f64, _>(StandardNormal);
            let ax = beta * rng.sample::<f64, _>(StandardNormal);
            let ay = beta * rng.sample::<f64, _>(StandardNormal);
            let az = beta * rng.sample::<f64, _>(StandardNormal);
            rows.push(TraceRow {
                t: t_idx as f64 / SAMPLE_RATE_HZ as f64,
                ppg,
                ax,
                ay,
                az,
                activity: seg.activity,
                hr_ref: Some(seg.hr_bpm),
            });
            t_idx += 1;
        }
    }
    Ok(Trace {
        rows,
        seed: Some(seed),
    })
}

/// Synthetic trace with equal-length segments, one per requested activity.
///
/// Each segment is sized so that `windows_per_activity` windows fit fully
/// inside it; windows spanning a segment boundary also exist and take the
/// majority activity.
pub fn synth_trace_equal_segments(
    activities: &[ActivityId],
    windows_per_activity: usize,
    base_hr_bpm: f64,
    hr_step_bpm: f64,
    seed: u64,
) -> Result<Trace, SignalError> {
    let segments: Vec<SegmentSpec> = activities
        .iter()
        .map(|&a| SegmentSpec {
            activity: a,
            hr_bpm: base_hr_bpm + hr_step_bpm * (a.get() as f64 - 1.0),
            n_rows: WINDOW_STRIDE * (3 + windows_per_activity),
        })
        .collect();
    synth_trace(&segments, seed)
}

/// Synthetic trace whose majority-voted window labels are exactly uniform:
/// every requested activity labels precisely `windows_per_activity` windows.
///
/// Boundary windows lean toward the harder neighbour under the tie rule, so
/// the first and last segments are padded to compensate. Requires at least
/// 4 windows per activity and strictly ascending activities.
pub fn synth_trace_uniform_windows(
    activities: &[ActivityId],
    windows_per_activity: usize,
    base_hr_bpm: f64,
    hr_step_bpm: f64,
    seed: u64,
) -> Result<Trace, SignalError> {
    let k = activities.len();
    if k == 0 {
        return Err(SignalError::InvalidWindow("no activities requested".into()));
    }
    if windows_per_activity < 4 && k > 1 {
        return Err(SignalError::InvalidWindow(
            "uniform window counts need at least 4 windows per activity".into(),
        ));
    }
    for pair in activities.windows(2) {
        if pair[1] <= pair[0] {
            return Err(SignalError::InvalidWindow(
                "activities must be strictly ascending".into(),
            ));
        }
    }
    // Interior boundaries contribute 1 extra window to the earlier segment
    // and 2 to the later one; size segments so the totals come out equal.
    let inner = |i: usize| -> usize {
        if k == 1 {
            windows_per_activity
        } else if i == 0 {
            windows_per_activity - 1
        } else if i == k - 1 {
            windows_per_activity - 2
        } else {
            windows_per_activity - 3
        }
    };
    let segments: Vec<SegmentSpec> = activities
        .iter()
        .enumerate()
        .map(|(i, &a)| SegmentSpec {
            activity: a,
            hr_bpm: base_hr_bpm + hr_step_bpm * (a.get() as f64 - 1.0),
            n_rows: WINDOW_STRIDE * (3 + inner(i)),
        })
        .collect();
    synth_trace(&segments, seed)
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

const COLUMNS: [&str; 7] = ["t", "ppg", "ax", "ay", "az", "activity", "hr_ref"];

/// Load a trace from CSV with header `t,ppg,ax,ay,az,activity,hr_ref`.
///
/// `hr_ref` may be empty for unlabeled rows. Rows must be time-ordered.
pub fn load_trace(path: &Path) -> Result<Trace, SignalError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut idx: HashMap<&str, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        idx.insert(h.trim(), i);
    }
    let mut col = [0usize; 7];
    for (k, name) in COLUMNS.iter().enumerate() {
        col[k] = *idx
            .get(name)
            .ok_or_else(|| SignalError::MissingColumn(name.to_string()))?;
    }

    let parse_f64 = |record: &csv::StringRecord, row: usize, c: usize| -> Result<f64, SignalError> {
        let raw = record.get(col[c]).unwrap_or("");
        raw.trim().parse::<f64>().map_err(|e| SignalError::ParseError {
            row,
            column: COLUMNS[c].to_string(),
            message: format!("`{raw}`: {e}"),
        })
    };

    let mut rows = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let t = parse_f64(&record, row_idx, 0)?;
        if t <= last_t {
            return Err(SignalError::ParseError {
                row: row_idx,
                column: "t".to_string(),
                message: format!("timestamps must be strictly increasing (got {t} after {last_t})"),
            });
        }
        last_t = t;
        let ppg = parse_f64(&record, row_idx, 1)?;
        let ax = parse_f64(&record, row_idx, 2)?;
        let ay = parse_f64(&record, row_idx, 3)?;
        let az = parse_f64(&record, row_idx, 4)?;
        let activity_raw = record.get(col[5]).unwrap_or("").trim();
        let activity_num: u8 = activity_raw.parse().map_err(|e| SignalError::ParseError {
            row: row_idx,
            column: "activity".to_string(),
            message: format!("`{activity_raw}`: {e}"),
        })?;
        let activity = ActivityId::new(activity_num).map_err(|_| SignalError::ParseError {
            row: row_idx,
            column: "activity".to_string(),
            message: format!("activity {activity_num} outside 1..=9"),
        })?;
        let hr_raw = record.get(col[6]).unwrap_or("").trim();
        let hr_ref = if hr_raw.is_empty() {
            None
        } else {
            let hr: f64 = hr_raw.parse().map_err(|e| SignalError::ParseError {
                row: row_idx,
                column: "hr_ref".to_string(),
                message: format!("`{hr_raw}`: {e}"),
            })?;
            if !(hr > 20.0 && hr < 300.0) {
                return Err(SignalError::ParseError {
                    row: row_idx,
                    column: "hr_ref".to_string(),
                    message: format!("hr_ref {hr} outside (20, 300)"),
                });
            }
            Some(hr)
        };
        rows.push(TraceRow {
            t,
            ppg,
            ax,
            ay,
            az,
            activity,
            hr_ref,
        });
    }
    Ok(Trace { rows, seed: None })
}

/// Write a trace in the same CSV schema `load_trace` reads.
pub fn save_trace(trace: &Trace, path: &Path) -> Result<(), SignalError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(COLUMNS)?;
    for row in &trace.rows {
        writer.write_record(&[
            format!("{}", row.t),
            format!("{}", row.ppg),
            format!("{}", row.ax),
            format!("{}", row.ay),
            format!("{}", row.az),
            format!("{}", row.activity.get()),
            row.hr_ref.map(|h| format!("{h}")).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

/// Majority activity of a run of rows; ties break toward the higher
/// (harder) activity so borderline windows get the more accurate model.
fn majority_activity(rows: &[TraceRow]) -> ActivityId {
    let mut counts = [0usize; 10];
    for r in rows {
        counts[r.activity.get() as usize] += 1;
    }
    let mut best = 1u8;
    for id in 1..=9u8 {
        if counts[id as usize] >= counts[best as usize] {
            best = id;
        }
    }
    ActivityId(best)
}

/// Slice a trace into 256-sample windows with stride 64.
///
/// Window k covers rows [64k, 64k + 256). Its activity is the majority
/// label of its rows and its reference HR is the mean of the labeled rows.
pub fn windows(trace: &Trace) -> Result<Vec<SampleWindow>, SignalError> {
    let n = trace.rows.len();
    if n < WINDOW_LEN {
        return Err(SignalError::TraceTooShort {
            rows: n,
            needed: WINDOW_LEN,
        });
    }
    let count = (n - WINDOW_LEN) / WINDOW_STRIDE + 1;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let start = k * WINDOW_STRIDE;
        let rows = &trace.rows[start..start + WINDOW_LEN];
        let ppg: Vec<f64> = rows.iter().map(|r| r.ppg).collect();
        let accel = [
            rows.iter().map(|r| r.ax).collect(),
            rows.iter().map(|r| r.ay).collect(),
            rows.iter().map(|r| r.az).collect(),
        ];
        let activity = majority_activity(rows);
        let labeled: Vec<f64> = rows.iter().filter_map(|r| r.hr_ref).collect();
        let hr_ref = if labeled.is_empty() {
            None
        } else {
            Some(labeled.iter().sum::<f64>() / labeled.len() as f64)
        };
        out.push(SampleWindow::new(ppg, accel, activity, hr_ref)?);
    }
    Ok(out)
}
