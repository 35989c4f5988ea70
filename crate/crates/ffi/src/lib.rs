//! C ABI for the collaborative heart-rate inference library.
//!
//! Handles are opaque pointers owned by the Rust side; every constructor
//! has a matching `_free` and every fallible call returns a [`ChrisStatus`]
//! with results written through out-pointers. The header is generated into
//! `include/chris.h` by the build script.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use chris_core::difficulty::{rf_predict, RandomForest};
use chris_core::energy::{alternate_profiles, default_profiles, ProfileSet};
use chris_core::engine::{self, ConnectionStatus, Constraint};
use chris_core::predictors::at_predict;
use chris_core::signal::{ActivityId, WINDOW_LEN};
use chris_core::zoo::{ConfigTable, Execution};
use chris_core::ModelKind;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChrisStatus {
    /// Success.
    ChrisOk = 0,
    /// A required pointer argument was null.
    ChrisNullArg = 1,
    /// A path was not valid UTF-8 or not readable.
    ChrisIo = 2,
    /// A file failed to parse or validate.
    ChrisParse = 3,
    /// A scalar argument was out of range.
    ChrisInvalidArg = 4,
    /// No feasible configuration for the requested connection status.
    ChrisNoFeasibleConfig = 5,
    /// The constraint was infeasible; the closest configuration was
    /// returned and flagged.
    ChrisSoftViolation = 6,
    /// The predictor found fewer than two peaks.
    ChrisNoPeaks = 7,
    /// An index was out of bounds.
    ChrisBadIndex = 8,
    /// An unexpected internal failure.
    ChrisInternal = 9,
}

/// Model codes used across the ABI: 0 = AT, 1 = small network, 2 = big.
pub const CHRIS_MODEL_AT: u8 = 0;
pub const CHRIS_MODEL_SMALL: u8 = 1;
pub const CHRIS_MODEL_BIG: u8 = 2;

/// Device codes: 0 = watch, 1 = phone.
pub const CHRIS_DEVICE_WATCH: u8 = 0;
pub const CHRIS_DEVICE_PHONE: u8 = 1;

/// Constraint kinds for `chris_select`.
pub const CHRIS_CONSTRAINT_MAX_MAE: u32 = 0;
pub const CHRIS_CONSTRAINT_MAX_ENERGY: u32 = 1;

/// Opaque energy-profile fixture set.
pub struct ChrisProfiles(ProfileSet);
/// Opaque difficulty forest.
pub struct ChrisForest(RandomForest);
/// Opaque stored configuration table.
pub struct ChrisTable(ConfigTable);

/// One table row flattened for C consumers.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ChrisConfigRow {
    pub simple_model: u8,
    pub complex_model: u8,
    pub threshold: u8,
    /// 0 = local, 1 = hybrid.
    pub hybrid: u8,
    pub avg_mae_bpm: f64,
    pub avg_watch_mj: f64,
    pub offload_fraction: f64,
}

fn model_code(kind: ModelKind) -> u8 {
    kind.index() as u8
}

fn guard<F: FnOnce() -> ChrisStatus>(f: F) -> ChrisStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(ChrisStatus::ChrisInternal)
}

/// # Safety
/// `path` must be a valid NUL-terminated string.
unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, ChrisStatus> {
    if path.is_null() {
        return Err(ChrisStatus::ChrisNullArg);
    }
    let s = unsafe { CStr::from_ptr(path) }
        .to_str()
        .map_err(|_| ChrisStatus::ChrisIo)?;
    Ok(Path::new(s))
}

/// Library version string; static, do not free.
#[no_mangle]
pub extern "C" fn chris_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Human-readable description of a status code; static, do not free.
#[no_mangle]
pub extern "C" fn chris_status_message(status: ChrisStatus) -> *const c_char {
    let text: &'static str = match status {
        ChrisStatus::ChrisOk => "ok\0",
        ChrisStatus::ChrisNullArg => "null pointer argument\0",
        ChrisStatus::ChrisIo => "file not readable or path not UTF-8\0",
        ChrisStatus::ChrisParse => "file failed to parse or validate\0",
        ChrisStatus::ChrisInvalidArg => "argument out of range\0",
        ChrisStatus::ChrisNoFeasibleConfig => "no feasible configuration\0",
        ChrisStatus::ChrisSoftViolation => "constraint infeasible, fallback selected\0",
        ChrisStatus::ChrisNoPeaks => "fewer than two peaks found\0",
        ChrisStatus::ChrisBadIndex => "index out of bounds\0",
        ChrisStatus::ChrisInternal => "internal error\0",
    };
    text.as_ptr() as *const c_char
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

/// The primary measurement fixture. Free with `chris_profiles_free`.
#[no_mangle]
pub extern "C" fn chris_profiles_default() -> *mut ChrisProfiles {
    Box::into_raw(Box::new(ChrisProfiles(default_profiles())))
}

/// The alternate measurement fixture. Free with `chris_profiles_free`.
#[no_mangle]
pub extern "C" fn chris_profiles_alternate() -> *mut ChrisProfiles {
    Box::into_raw(Box::new(ChrisProfiles(alternate_profiles())))
}

/// Load profiles from a JSON file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chris_profiles_load_json(
    path: *const c_char,
    out: *mut *mut ChrisProfiles,
) -> ChrisStatus {
    guard(|| {
        if out.is_null() {
            return ChrisStatus::ChrisNullArg;
        }
        let path = match unsafe { path_arg(path) } {
            Ok(p) => p,
            Err(s) => return s,
        };
        match ProfileSet::load_json(path) {
            Ok(set) => {
                unsafe { *out = Box::into_raw(Box::new(ChrisProfiles(set))) };
                ChrisStatus::ChrisOk
            }
            Err(_) => ChrisStatus::ChrisParse,
        }
    })
}

/// Wearable-side and phone-side energy for one window of the given model
/// on the given device.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn chris_window_energy(
    profiles: *const ChrisProfiles,
    model: u8,
    device: u8,
    out_watch_mj: *mut f64,
    out_phone_mj: *mut f64,
) -> ChrisStatus {
    guard(|| {
        let Some(p) = (unsafe { profiles.as_ref() }) else {
            return ChrisStatus::ChrisNullArg;
        };
        if out_watch_mj.is_null() || out_phone_mj.is_null() {
            return ChrisStatus::ChrisNullArg;
        }
        let kind = match model {
            CHRIS_MODEL_AT => ModelKind::At,
            CHRIS_MODEL_SMALL => ModelKind::TimePpgSmall,
            CHRIS_MODEL_BIG => ModelKind::TimePpgBig,
            _ => return ChrisStatus::ChrisInvalidArg,
        };
        let dev = match device {
            CHRIS_DEVICE_WATCH => chris_core::Device::Watch,
            CHRIS_DEVICE_PHONE => chris_core::Device::Phone,
            _ => return ChrisStatus::ChrisInvalidArg,
        };
        let Ok(profile) = p.0.get(kind) else {
            return ChrisStatus::ChrisParse;
        };
        let outcome = chris_core::energy::window_energy(profile, &p.0.link, dev);
        unsafe {
            *out_watch_mj = outcome.watch_mj;
            *out_phone_mj = outcome.phone_mj;
        }
        ChrisStatus::ChrisOk
    })
}

/// # Safety
/// `p` must come from a `chris_profiles_*` constructor (or be null).
#[no_mangle]
pub unsafe extern "C" fn chris_profiles_free(p: *mut ChrisProfiles) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

// ---------------------------------------------------------------------------
// Forest
// ---------------------------------------------------------------------------

/// Load a difficulty forest from its JSON file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chris_forest_load_json(
    path: *const c_char,
    out: *mut *mut ChrisForest,
) -> ChrisStatus {
    guard(|| {
        if out.is_null() {
            return ChrisStatus::ChrisNullArg;
        }
        let path = match unsafe { path_arg(path) } {
            Ok(p) => p,
            Err(s) => return s,
        };
        match RandomForest::load_json(path) {
            Ok(forest) => {
                unsafe { *out = Box::into_raw(Box::new(ChrisForest(forest))) };
                ChrisStatus::ChrisOk
            }
            Err(_) => ChrisStatus::ChrisParse,
        }
    })
}

/// Classify a window's difficulty from its accelerometer block.
///
/// `accel` points to 3 x 256 doubles, axis-major (ax[0..256], ay, az).
/// Writes the activity id (1..=9) to `out_activity`.
///
/// # Safety
/// `accel` must point to 768 readable doubles; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn chris_forest_classify(
    forest: *const ChrisForest,
    accel: *const f64,
    out_activity: *mut u8,
) -> ChrisStatus {
    guard(|| {
        let Some(f) = (unsafe { forest.as_ref() }) else {
            return ChrisStatus::ChrisNullArg;
        };
        if accel.is_null() || out_activity.is_null() {
            return ChrisStatus::ChrisNullArg;
        }
        let block = unsafe { std::slice::from_raw_parts(accel, 3 * WINDOW_LEN) };
        let axes = [
            block[..WINDOW_LEN].to_vec(),
            block[WINDOW_LEN..2 * WINDOW_LEN].to_vec(),
            block[2 * WINDOW_LEN..].to_vec(),
        ];
        let features = chris_core::difficulty::extract_features(&axes);
        let activity = rf_predict(&f.0, &features);
        unsafe { *out_activity = activity.get() };
        ChrisStatus::ChrisOk
    })
}

/// # Safety
/// `f` must come from `chris_forest_load_json` (or be null).
#[no_mangle]
pub unsafe extern "C" fn chris_forest_free(f: *mut ChrisForest) {
    if !f.is_null() {
        drop(unsafe { Box::from_raw(f) });
    }
}

// ---------------------------------------------------------------------------
// Table, selection, dispatch
// ---------------------------------------------------------------------------

/// Load a stored configuration table from CSV.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chris_table_load_csv(
    path: *const c_char,
    out: *mut *mut ChrisTable,
) -> ChrisStatus {
    guard(|| {
        if out.is_null() {
            return ChrisStatus::ChrisNullArg;
        }
        let path = match unsafe { path_arg(path) } {
            Ok(p) => p,
            Err(s) => return s,
        };
        match ConfigTable::load_csv(path) {
            Ok(table) => {
                unsafe { *out = Box::into_raw(Box::new(ChrisTable(table))) };
                ChrisStatus::ChrisOk
            }
            Err(_) => ChrisStatus::ChrisParse,
        }
    })
}

/// Number of rows in a table; 0 for null.
///
/// # Safety
/// `table` must come from `chris_table_load_csv` (or be null).
#[no_mangle]
pub unsafe extern "C" fn chris_table_len(table: *const ChrisTable) -> usize {
    unsafe { table.as_ref() }.map_or(0, |t| t.0.len())
}

/// Copy one table row into `out_row`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn chris_table_row(
    table: *const ChrisTable,
    index: usize,
    out_row: *mut ChrisConfigRow,
) -> ChrisStatus {
    guard(|| {
        let Some(t) = (unsafe { table.as_ref() }) else {
            return ChrisStatus::ChrisNullArg;
        };
        if out_row.is_null() {
            return ChrisStatus::ChrisNullArg;
        }
        let Some(c) = t.0.rows().get(index) else {
            return ChrisStatus::ChrisBadIndex;
        };
        unsafe {
            *out_row = ChrisConfigRow {
                simple_model: model_code(c.spec.simple),
                complex_model: model_code(c.spec.complex),
                threshold: c.spec.threshold,
                hybrid: matches!(c.spec.execution, Execution::Hybrid) as u8,
                avg_mae_bpm: c.avg_mae_bpm,
                avg_watch_mj: c.avg_watch_mj,
                offload_fraction: c.offload_fraction,
            };
        }
        ChrisStatus::ChrisOk
    })
}

/// Select a configuration under a constraint and connection status.
///
/// `constraint_kind` is `CHRIS_CONSTRAINT_MAX_MAE` or
/// `CHRIS_CONSTRAINT_MAX_ENERGY`; `threshold` is BPM or mJ accordingly.
/// Writes the selected row's index within `table`. Returns
/// `ChrisSoftViolation` when the constraint was infeasible and the closest
/// configuration was selected instead.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn chris_select(
    table: *const ChrisTable,
    constraint_kind: u32,
    threshold: f64,
    connected: bool,
    out_index: *mut usize,
) -> ChrisStatus {
    guard(|| {
        let Some(t) = (unsafe { table.as_ref() }) else {
            return ChrisStatus::ChrisNullArg;
        };
        if out_index.is_null() {
            return ChrisStatus::ChrisNullArg;
        }
        let constraint = match constraint_kind {
            CHRIS_CONSTRAINT_MAX_MAE => Constraint::MaxMae(threshold),
            CHRIS_CONSTRAINT_MAX_ENERGY => Constraint::MaxEnergy(threshold),
            _ => return ChrisStatus::ChrisInvalidArg,
        };
        if constraint.validate().is_err() {
            return ChrisStatus::ChrisInvalidArg;
        }
        let status = if connected {
            ConnectionStatus::Connected
        } else {
            ConnectionStatus::Disconnected
        };
        let feasible = match engine::feasible(&t.0, status) {
            Ok(f) => f,
            Err(_) => return ChrisStatus::ChrisNoFeasibleConfig,
        };
        let selection = match engine::select(&feasible, &constraint) {
            Ok(s) => s,
            Err(_) => return ChrisStatus::ChrisInternal,
        };
        let Some(index) = t.0.rows().iter().position(|c| *c == selection.config) else {
            return ChrisStatus::ChrisInternal;
        };
        unsafe { *out_index = index };
        if selection.soft_violation {
            ChrisStatus::ChrisSoftViolation
        } else {
            ChrisStatus::ChrisOk
        }
    })
}

/// Route one window given the selected row and a predicted activity.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn chris_dispatch(
    table: *const ChrisTable,
    row_index: usize,
    activity: u8,
    out_model: *mut u8,
    out_device: *mut u8,
) -> ChrisStatus {
    guard(|| {
        let Some(t) = (unsafe { table.as_ref() }) else {
            return ChrisStatus::ChrisNullArg;
        };
        if out_model.is_null() || out_device.is_null() {
            return ChrisStatus::ChrisNullArg;
        }
        let Some(c) = t.0.rows().get(row_index) else {
            return ChrisStatus::ChrisBadIndex;
        };
        let Ok(activity) = ActivityId::new(activity) else {
            return ChrisStatus::ChrisInvalidArg;
        };
        let d = engine::dispatch(&c.spec, activity);
        unsafe {
            *out_model = model_code(d.model);
            *out_device = match d.device {
                chris_core::Device::Watch => CHRIS_DEVICE_WATCH,
                chris_core::Device::Phone => CHRIS_DEVICE_PHONE,
            };
        }
        ChrisStatus::ChrisOk
    })
}

/// # Safety
/// `t` must come from `chris_table_load_csv` (or be null).
#[no_mangle]
pub unsafe extern "C" fn chris_table_free(t: *mut ChrisTable) {
    if !t.is_null() {
        drop(unsafe { Box::from_raw(t) });
    }
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

/// Adaptive-threshold heart-rate estimate of a 256-sample PPG window.
///
/// # Safety
/// `ppg` must point to 256 readable doubles; `out_bpm` must be valid.
#[no_mangle]
pub unsafe extern "C" fn chris_at_predict(ppg: *const f64, out_bpm: *mut f64) -> ChrisStatus {
    guard(|| {
        if ppg.is_null() || out_bpm.is_null() {
            return ChrisStatus::ChrisNullArg;
        }
        let window = unsafe { std::slice::from_raw_parts(ppg, WINDOW_LEN) };
        match at_predict(window) {
            Ok(est) => {
                unsafe { *out_bpm = est.bpm };
                ChrisStatus::ChrisOk
            }
            Err(chris_core::predictors::PredictError::NoPeaks) => ChrisStatus::ChrisNoPeaks,
            Err(_) => ChrisStatus::ChrisInternal,
        }
    })
}
