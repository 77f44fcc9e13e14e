//! C ABI for the topoflow library.
//!
//! Conventions: every function returns a [`TfStatus`]; results come back
//! through out-pointers. Heap objects are opaque handles released with the
//! matching `*_free`; strings returned by the library are released with
//! [`tf_string_free`]. All functions are panic-safe (a caught panic maps to
//! `TF_STATUS_INTERNAL_PANIC`).

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use topoflow::branched::{
    branched_optimize, centralized_cost, classify_regime, hierarchical_cost_closed_form,
    hierarchical_cost_recurrence, ArraySpec, CostExponent, Regime,
};
use topoflow::degree::{detect_singularities, p_energy, winding_number, GridMap, LoopSamples};
use topoflow::duality::kantorovich_dual;
use topoflow::error::Error;
use topoflow::geometry::ChargeConfig;
use topoflow::relaxed::relaxed_energy;
use topoflow::transport::min_cost_transport;

/// Status codes shared by every entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Io = 4,
    DimensionMismatch = 5,
    TopologicalImbalance = 6,
    DuplicatePosition = 7,
    RemovableCharge = 8,
    UnderResolvedLoop = 9,
    InvalidGrid = 10,
    GridMismatch = 11,
    InfeasiblePotential = 12,
    BoundaryChargeImbalance = 13,
    InvalidExponent = 14,
    InvalidTree = 15,
    Unsupported = 16,
    InvalidParameter = 17,
    Numerical = 18,
    InternalPanic = 19,
}

fn status_of(err: &Error) -> TfStatus {
    match err {
        Error::DimensionMismatch { .. } => TfStatus::DimensionMismatch,
        Error::InvalidPoint(_) => TfStatus::InvalidParameter,
        Error::TopologicalImbalance { .. } => TfStatus::TopologicalImbalance,
        Error::DuplicatePosition { .. } => TfStatus::DuplicatePosition,
        Error::RemovableCharge { .. } => TfStatus::RemovableCharge,
        Error::UnderResolvedLoop { .. } => TfStatus::UnderResolvedLoop,
        Error::InvalidGrid(_) => TfStatus::InvalidGrid,
        Error::GridMismatch(_) => TfStatus::GridMismatch,
        Error::InfeasiblePotential { .. } => TfStatus::InfeasiblePotential,
        Error::BoundaryChargeImbalance { .. } => TfStatus::BoundaryChargeImbalance,
        Error::InvalidExponent { .. } => TfStatus::InvalidExponent,
        Error::InvalidTree(_) => TfStatus::InvalidTree,
        Error::Unsupported(_) => TfStatus::Unsupported,
        Error::InvalidParameter(_) => TfStatus::InvalidParameter,
        Error::Numerical(_) => TfStatus::Numerical,
        Error::Parse(_) => TfStatus::Parse,
        Error::Io(_) => TfStatus::Io,
    }
}

/// Opaque handle over a validated charge configuration.
pub struct TfChargeConfig {
    inner: ChargeConfig,
}

/// Opaque handle over a sampled grid map.
pub struct TfGridMap {
    inner: GridMap,
}

fn guarded<F: FnOnce() -> TfStatus>(f: F) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => TfStatus::InternalPanic,
    }
}

unsafe fn cstr_utf8<'a>(ptr: *const c_char) -> Result<&'a str, TfStatus> {
    if ptr.is_null() {
        return Err(TfStatus::NullPointer);
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| TfStatus::InvalidUtf8)
}

fn string_out(s: String, out: *mut *mut c_char) -> TfStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            TfStatus::Ok
        }
        Err(_) => TfStatus::Numerical,
    }
}

/// Short stable name of a status code. Never fails; never needs freeing.
#[no_mangle]
pub extern "C" fn tf_status_name(status: TfStatus) -> *const c_char {
    macro_rules! s {
        ($lit:literal) => {
            concat!($lit, "\0").as_ptr() as *const c_char
        };
    }
    match status {
        TfStatus::Ok => s!("ok"),
        TfStatus::NullPointer => s!("null pointer"),
        TfStatus::InvalidUtf8 => s!("invalid utf-8"),
        TfStatus::Parse => s!("parse error"),
        TfStatus::Io => s!("i/o error"),
        TfStatus::DimensionMismatch => s!("dimension mismatch"),
        TfStatus::TopologicalImbalance => s!("topological imbalance"),
        TfStatus::DuplicatePosition => s!("duplicate position"),
        TfStatus::RemovableCharge => s!("removable charge"),
        TfStatus::UnderResolvedLoop => s!("under-resolved loop"),
        TfStatus::InvalidGrid => s!("invalid grid"),
        TfStatus::GridMismatch => s!("grid mismatch"),
        TfStatus::InfeasiblePotential => s!("infeasible potential"),
        TfStatus::BoundaryChargeImbalance => s!("boundary charge imbalance"),
        TfStatus::InvalidExponent => s!("invalid exponent"),
        TfStatus::InvalidTree => s!("invalid tree"),
        TfStatus::Unsupported => s!("unsupported"),
        TfStatus::InvalidParameter => s!("invalid parameter"),
        TfStatus::Numerical => s!("numerical failure"),
        TfStatus::InternalPanic => s!("internal panic"),
    }
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from a topoflow function and not have been freed before.
#[no_mangle]
pub unsafe extern "C" fn tf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a charge configuration from its JSON form
/// (`[{"pos": [x, ...], "deg": k}, ...]`) and validates the invariants.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_config_parse_json(
    json: *const c_char,
    out: *mut *mut TfChargeConfig,
) -> TfStatus {
    guarded(|| {
        if out.is_null() {
            return TfStatus::NullPointer;
        }
        let text = match cstr_utf8(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ChargeConfig::from_json(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(TfChargeConfig { inner: cfg }));
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `config` must come from `tf_config_parse_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tf_config_free(config: *mut TfChargeConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Number of charges in a parsed configuration.
///
/// # Safety
/// `config` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tf_config_len(config: *const TfChargeConfig, out: *mut usize) -> TfStatus {
    guarded(|| {
        if config.is_null() || out.is_null() {
            return TfStatus::NullPointer;
        }
        *out = (*config).inner.len();
        TfStatus::Ok
    })
}

/// Minimum transport cost of a configuration.
///
/// # Safety
/// `config` and `out_cost` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tf_transport_cost(
    config: *const TfChargeConfig,
    out_cost: *mut f64,
) -> TfStatus {
    guarded(|| {
        if config.is_null() || out_cost.is_null() {
            return TfStatus::NullPointer;
        }
        match min_cost_transport(&(*config).inner) {
            Ok(plan) => {
                *out_cost = plan.cost;
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Optimal transport plan as JSON (`{"edges": [...], "cost": c}`).
///
/// # Safety
/// `config` and `out_json` must be valid pointers; free the string with
/// `tf_string_free`.
#[no_mangle]
pub unsafe extern "C" fn tf_transport_plan_json(
    config: *const TfChargeConfig,
    out_json: *mut *mut c_char,
) -> TfStatus {
    guarded(|| {
        if config.is_null() || out_json.is_null() {
            return TfStatus::NullPointer;
        }
        match min_cost_transport(&(*config).inner) {
            Ok(plan) => string_out(plan.to_json(), out_json),
            Err(e) => status_of(&e),
        }
    })
}

/// Kantorovich dual value and duality gap.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_dual_value(
    config: *const TfChargeConfig,
    out_value: *mut f64,
    out_gap: *mut f64,
) -> TfStatus {
    guarded(|| {
        if config.is_null() || out_value.is_null() || out_gap.is_null() {
            return TfStatus::NullPointer;
        }
        let cfg = &(*config).inner;
        let plan = match min_cost_transport(cfg) {
            Ok(p) => p,
            Err(e) => return status_of(&e),
        };
        match kantorovich_dual(cfg) {
            Ok((value, _)) => {
                *out_value = value;
                *out_gap = plan.cost - value;
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Winding number of a closed loop given as `count` interleaved `(x, y)`
/// unit vectors.
///
/// # Safety
/// `xy` must point at `2 * count` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_winding_number(
    xy: *const f64,
    count: usize,
    out: *mut i32,
) -> TfStatus {
    guarded(|| {
        if xy.is_null() || out.is_null() {
            return TfStatus::NullPointer;
        }
        let flat = std::slice::from_raw_parts(xy, 2 * count);
        let values: Vec<[f64; 2]> = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        match LoopSamples::new(values).and_then(|l| winding_number(&l)) {
            Ok(w) => {
                *out = w;
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Parses a grid map from its CSV form (`nx,ny,h,ox,oy` header then
/// `i,j,ux,uy,masked` rows).
///
/// # Safety
/// `csv` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_gridmap_parse_csv(
    csv: *const c_char,
    out: *mut *mut TfGridMap,
) -> TfStatus {
    guarded(|| {
        if out.is_null() {
            return TfStatus::NullPointer;
        }
        let text = match cstr_utf8(csv) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match GridMap::from_csv(text) {
            Ok(map) => {
                *out = Box::into_raw(Box::new(TfGridMap { inner: map }));
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Reads a grid map from a CSV file on disk.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_gridmap_read_csv(
    path: *const c_char,
    out: *mut *mut TfGridMap,
) -> TfStatus {
    guarded(|| {
        if out.is_null() {
            return TfStatus::NullPointer;
        }
        let path = match cstr_utf8(path) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(_) => return TfStatus::Io,
        };
        match GridMap::from_csv(&text) {
            Ok(map) => {
                *out = Box::into_raw(Box::new(TfGridMap { inner: map }));
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `map` must come from a topoflow constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tf_gridmap_free(map: *mut TfGridMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Discrete p-Dirichlet energy of a grid map.
///
/// # Safety
/// `map` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tf_p_energy(map: *const TfGridMap, p: f64, out: *mut f64) -> TfStatus {
    guarded(|| {
        if map.is_null() || out.is_null() {
            return TfStatus::NullPointer;
        }
        match p_energy(&(*map).inner, p) {
            Ok(e) => {
                *out = e;
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Number of detected singularities and their total degree.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_singularity_count(
    map: *const TfGridMap,
    out_count: *mut usize,
    out_total_degree: *mut i64,
) -> TfStatus {
    guarded(|| {
        if map.is_null() || out_count.is_null() || out_total_degree.is_null() {
            return TfStatus::NullPointer;
        }
        match detect_singularities(&(*map).inner) {
            Ok(set) => {
                *out_count = set.entries.len();
                *out_total_degree = set.total_degree();
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Relaxed energy report of a grid map: `total = dirichlet + 2 pi transport`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_relaxed_energy(
    map: *const TfGridMap,
    out_dirichlet: *mut f64,
    out_transport: *mut f64,
    out_total: *mut f64,
) -> TfStatus {
    guarded(|| {
        if map.is_null()
            || out_dirichlet.is_null()
            || out_transport.is_null()
            || out_total.is_null()
        {
            return TfStatus::NullPointer;
        }
        match relaxed_energy(&(*map).inner) {
            Ok(report) => {
                *out_dirichlet = report.dirichlet;
                *out_transport = report.transport;
                *out_total = report.total;
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

fn array_spec(m: u32, n: u32, h: f64, d: f64, alpha: f64) -> Result<ArraySpec, Error> {
    let alpha = CostExponent::real(alpha)?;
    ArraySpec::new(m, n, h, d, alpha)
}

/// Hierarchical dyadic-array cost, by recurrence and in closed form.
///
/// # Safety
/// Out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_hierarchical_cost(
    m: u32,
    n: u32,
    h: f64,
    d: f64,
    alpha: f64,
    out_recurrence: *mut f64,
    out_closed_form: *mut f64,
) -> TfStatus {
    guarded(|| {
        if out_recurrence.is_null() || out_closed_form.is_null() {
            return TfStatus::NullPointer;
        }
        match array_spec(m, n, h, d, alpha) {
            Ok(spec) => {
                *out_recurrence = hierarchical_cost_recurrence(&spec);
                *out_closed_form = hierarchical_cost_closed_form(&spec);
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Centralized plan cost (exact lattice sum when feasible, integral
/// estimate otherwise).
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_centralized_cost(
    m: u32,
    n: u32,
    h: f64,
    d: f64,
    alpha: f64,
    out: *mut f64,
) -> TfStatus {
    guarded(|| {
        if out.is_null() {
            return TfStatus::NullPointer;
        }
        match array_spec(m, n, h, d, alpha) {
            Ok(spec) => {
                *out = centralized_cost(&spec).value();
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Regime of `alpha` against the critical exponent `1 - 1/m`:
/// -1 sub-critical, 0 critical, +1 super-critical.
///
/// # Safety
/// `out_regime` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_classify_regime(m: u32, alpha: f64, out_regime: *mut i32) -> TfStatus {
    guarded(|| {
        if out_regime.is_null() {
            return TfStatus::NullPointer;
        }
        let alpha = match CostExponent::real(alpha) {
            Ok(a) => a,
            Err(e) => return status_of(&e),
        };
        match classify_regime(m, &alpha) {
            Ok(report) => {
                *out_regime = match report.regime {
                    Regime::SubCritical => -1,
                    Regime::Critical => 0,
                    Regime::SuperCritical => 1,
                };
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Cost of the optimal branched plan for a configuration.
///
/// # Safety
/// `config` and `out_cost` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tf_branched_optimize_cost(
    config: *const TfChargeConfig,
    alpha: f64,
    out_cost: *mut f64,
) -> TfStatus {
    guarded(|| {
        if config.is_null() || out_cost.is_null() {
            return TfStatus::NullPointer;
        }
        match branched_optimize(&(*config).inner, alpha) {
            Ok(tree) => {
                *out_cost = tree.cost;
                TfStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Optimal branched plan as JSON.
///
/// # Safety
/// `config` and `out_json` must be valid pointers; free the string with
/// `tf_string_free`.
#[no_mangle]
pub unsafe extern "C" fn tf_branched_optimize_json(
    config: *const TfChargeConfig,
    alpha: f64,
    out_json: *mut *mut c_char,
) -> TfStatus {
    guarded(|| {
        if config.is_null() || out_json.is_null() {
            return TfStatus::NullPointer;
        }
        match branched_optimize(&(*config).inner, alpha) {
            Ok(tree) => string_out(tree.to_json(), out_json),
            Err(e) => status_of(&e),
        }
    })
}

/// Library version as a static string; never needs freeing.
#[no_mangle]
pub extern "C" fn tf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[allow(unused)]
fn assert_ptr_is_null_documented() {
    // Keep ptr imported for the doc examples in the header.
    let _: *const u8 = ptr::null();
}
