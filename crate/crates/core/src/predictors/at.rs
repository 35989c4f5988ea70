//! Adaptive-threshold heart-rate estimation.
//!
//! The estimator computes a rolling mean of the PPG signal over 24 samples,
//! takes the maximal contiguous regions where the raw signal exceeds that
//! mean, calls the maximum of each region a peak, and converts the typical
//! inter-peak gap into BPM. The gap statistic is a median-anchored trimmed
//! mean: gaps far from the median (spurious split regions, merged beats)
//! are discarded and the rest are averaged, keeping the median's
//! robustness while recovering sub-sample resolution. A plain integer
//! median quantizes the estimate to 1920/gap BPM, coarser than 2 BPM over
//! much of the band.

use super::{clamp_bpm, HrEstimate, PredictError};
use crate::signal::SAMPLE_RATE_HZ;

/// Rolling-mean window length in samples.
const MEAN_WIN: usize = 24;
/// Samples before the current index included in the mean (the remaining
/// 11 come after it); the window is truncated at the signal edges.
const MEAN_BEFORE: usize = 12;

/// Centered rolling mean over 24 samples, truncated at the boundaries.
fn rolling_mean(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(MEAN_BEFORE);
        let hi = (i + (MEAN_WIN - MEAN_BEFORE)).min(n);
        let sum: f64 = signal[lo..hi].iter().sum();
        out.push(sum / (hi - lo) as f64);
    }
    out
}

/// Indices of the per-region maxima, where a region is a maximal run of
/// samples strictly above the rolling mean. Regions touching the window
/// boundary are discarded: their maximum sits at the truncation point, not
/// at a real crest, and would inject a bogus inter-peak gap.
fn region_peaks(signal: &[f64], mean: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    let mut region_start: Option<usize> = None;
    for i in 0..=signal.len() {
        let above = i < signal.len() && signal[i] > mean[i];
        match (region_start, above) {
            (None, true) => region_start = Some(i),
            (Some(start), false) => {
                if start > 0 && i < signal.len() {
                    let peak = (start..i)
                        .max_by(|&a, &b| signal[a].total_cmp(&signal[b]))
                        .unwrap();
                    peaks.push(peak);
                }
                region_start = None;
            }
            _ => {}
        }
    }
    peaks
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Relative distance from the median beyond which a gap is discarded.
const GAP_TRIM: f64 = 0.3;

/// Median-anchored trimmed mean of the inter-peak gaps.
fn typical_gap(gaps: &mut [f64]) -> f64 {
    let anchor = median(gaps);
    let lo = anchor * (1.0 - GAP_TRIM);
    let hi = anchor * (1.0 + GAP_TRIM);
    let mut sum = 0.0;
    let mut n = 0usize;
    for &g in gaps.iter() {
        if g >= lo && g <= hi {
            sum += g;
            n += 1;
        }
    }
    if n == 0 {
        anchor
    } else {
        sum / n as f64
    }
}

/// Estimate the heart rate of a 256-sample PPG window.
///
/// Errors with [`PredictError::NoPeaks`] when fewer than two regions exist
/// (e.g. a constant signal never exceeds its own mean).
pub fn at_predict(ppg: &[f64]) -> Result<HrEstimate, PredictError> {
    if ppg.len() != crate::signal::WINDOW_LEN {
        return Err(PredictError::ShapeMismatch(format!(
            "ppg length {} != {}",
            ppg.len(),
            crate::signal::WINDOW_LEN
        )));
    }
    let mean = rolling_mean(ppg);
    let peaks = region_peaks(ppg, &mean);
    if peaks.len() < 2 {
        return Err(PredictError::NoPeaks);
    }
    let mut gaps: Vec<f64> = peaks.windows(2).map(|p| (p[1] - p[0]) as f64).collect();
    let gap = typical_gap(&mut gaps);
    let bpm = 60.0 * SAMPLE_RATE_HZ as f64 / gap;
    Ok(HrEstimate {
        bpm: clamp_bpm(bpm),
    })
}
