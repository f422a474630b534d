//! C ABI over `sorites-core`.
//!
//! Every fallible function returns a [`SoritesStatus`]; on failure the
//! message is available from [`sorites_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Strings returned through `char **` are owned by the caller and freed
//! with [`sorites_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sorites_core::chain::{build_chain, prob_no_link_broken, ChainSpec};
use sorites_core::cli::{verdict_for, AssumptionName, SurfaceKind};
use sorites_core::files::{LoadedModel, ModelFile, NumberMode};
use sorites_core::ghz::enumerate_ghz_assignments;
use sorites_core::montecarlo::sample_runs;
use sorites_core::prob::Tolerance;
use sorites_core::strategies::{local_min_total_failure, qm_expected_failures};
use sorites_core::theorems::{run_bell_corollary, run_stronger_theorem, Conclusion};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoritesStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    /// A conditional probability needed by a check is undefined.
    Undefined = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoritesAssumption {
    WeakSurfaceAutonomy = 0,
    SurfaceLocality = 1,
    WeakHiddenAutonomy = 2,
    HiddenAutonomy = 3,
    ParameterIndependence = 4,
    OutcomeIndependence = 5,
    ImprovedPredictions = 6,
    /// Against the simplified QM surface.
    QmAgreement = 7,
    ConditionalQmAgreement = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoritesTheorem {
    Stronger = 0,
    Bell = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoritesConclusion {
    ContradictionEstablished = 0,
    PremiseFailed = 1,
    Inconsistent = 2,
    BoundExceeded = 3,
}

/// A chain of `N` solid links and one dashed link.
pub struct SoritesChain(ChainSpec);

/// A surface or hidden-variable model read from a model file.
pub struct SoritesModel(LoadedModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SoritesStatus, msg: impl Into<String>) -> SoritesStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SoritesStatus) -> SoritesStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SoritesStatus::Panic, "internal panic"),
    }
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sorites_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sorites_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, SoritesStatus> {
    p.as_mut()
        .ok_or_else(|| fail(SoritesStatus::NullPointer, "output pointer is NULL"))
}

/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn sorites_chain_new(n_links: i64, out: *mut *mut SoritesChain) -> SoritesStatus {
    guard(|| {
        let out = match out_ref(out) {
            Ok(o) => o,
            Err(s) => return s,
        };
        match build_chain(n_links) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(SoritesChain(c)));
                SoritesStatus::Ok
            }
            Err(e) => fail(SoritesStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `chain` must be NULL or a handle from [`sorites_chain_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sorites_chain_free(chain: *mut SoritesChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Number of setting pairs, `N + 1`; 0 for a NULL handle.
///
/// # Safety
/// `chain` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sorites_chain_experiment_count(chain: *const SoritesChain) -> u32 {
    chain.as_ref().map_or(0, |c| c.0.experiment_count() as u32)
}

/// Angle between neighbouring settings in degrees; NaN for a NULL handle.
///
/// # Safety
/// `chain` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sorites_chain_delta_theta(chain: *const SoritesChain) -> f64 {
    chain.as_ref().map_or(f64::NAN, |c| c.0.delta_theta().degrees())
}

/// Minimum expected number of broken links over local strategies.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sorites_chain_local_floor(chain: *const SoritesChain, out: *mut f64) -> SoritesStatus {
    guard(|| {
        let Some(c) = chain.as_ref() else {
            return fail(SoritesStatus::NullPointer, "chain is NULL");
        };
        let out = match out_ref(out) {
            Ok(o) => o,
            Err(s) => return s,
        };
        match local_min_total_failure(&c.0) {
            Ok(p) => {
                *out = p.to_f64();
                SoritesStatus::Ok
            }
            Err(e) => fail(SoritesStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Expected number of broken links under quantum mechanics.
///
/// # Safety
/// `chain` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sorites_chain_qm_expected_failures(chain: *const SoritesChain) -> f64 {
    chain.as_ref().map_or(f64::NAN, |c| qm_expected_failures(&c.0).to_f64())
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sorites_prob_no_link_broken(n_links: i64, out: *mut f64) -> SoritesStatus {
    guard(|| {
        let out = match out_ref(out) {
            Ok(o) => o,
            Err(s) => return s,
        };
        match prob_no_link_broken(n_links) {
            Ok(p) => {
                *out = p.to_f64();
                SoritesStatus::Ok
            }
            Err(e) => fail(SoritesStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Parses a `sorites-model/1` document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sorites_model_parse(json: *const c_char, out: *mut *mut SoritesModel) -> SoritesStatus {
    guard(|| {
        if json.is_null() {
            return fail(SoritesStatus::NullPointer, "json is NULL");
        }
        let out = match out_ref(out) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let Ok(src) = CStr::from_ptr(json).to_str() else {
            return fail(SoritesStatus::InvalidUtf8, "model text is not UTF-8");
        };
        match ModelFile::parse(src, NumberMode::Auto)
            .and_then(|m| m.into_model(sorites_core::assumptions::DEFAULT_MAX_HIDDEN))
        {
            Ok(m) => {
                *out = Box::into_raw(Box::new(SoritesModel(m)));
                SoritesStatus::Ok
            }
            Err(e) => fail(SoritesStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `model` must be NULL or a handle from [`sorites_model_parse`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sorites_model_free(model: *mut SoritesModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

fn assumption_name(a: SoritesAssumption) -> AssumptionName {
    match a {
        SoritesAssumption::WeakSurfaceAutonomy => AssumptionName::WeakSurfaceAutonomy,
        SoritesAssumption::SurfaceLocality => AssumptionName::SurfaceLocality,
        SoritesAssumption::WeakHiddenAutonomy => AssumptionName::WeakHa,
        SoritesAssumption::HiddenAutonomy => AssumptionName::Ha,
        SoritesAssumption::ParameterIndependence => AssumptionName::Pi,
        SoritesAssumption::OutcomeIndependence => AssumptionName::Oi,
        SoritesAssumption::ImprovedPredictions => AssumptionName::ImprovedPredictions,
        SoritesAssumption::QmAgreement => AssumptionName::QmAgreement,
        SoritesAssumption::ConditionalQmAgreement => AssumptionName::ConditionalQm,
    }
}

/// Checks one assumption. A tolerance of 0 compares exactly.
///
/// # Safety
/// `model` must be a live handle and `holds` writable.
#[no_mangle]
pub unsafe extern "C" fn sorites_model_check(
    model: *const SoritesModel,
    assumption: SoritesAssumption,
    tolerance: f64,
    holds: *mut bool,
) -> SoritesStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(SoritesStatus::NullPointer, "model is NULL");
        };
        let holds = match out_ref(holds) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let tol = match Tolerance::new(tolerance) {
            Ok(t) => t,
            Err(e) => return fail(SoritesStatus::InvalidArgument, e.to_string()),
        };
        match verdict_for(assumption_name(assumption), &m.0, SurfaceKind::Simplified, tol) {
            Ok(v) => {
                *holds = v.holds;
                SoritesStatus::Ok
            }
            Err(f) => fail(SoritesStatus::Undefined, f.message),
        }
    })
}

/// Runs a theorem pipeline. When `report_json` is not NULL it receives the
/// `sorites-report/1` document, to be freed with [`sorites_string_free`].
/// A surface model is treated as its single-valued hidden-variable lift.
///
/// # Safety
/// `model` must be a live handle, `conclusion` writable, `report_json`
/// NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn sorites_model_run_theorem(
    model: *const SoritesModel,
    which: SoritesTheorem,
    tolerance: f64,
    conclusion: *mut SoritesConclusion,
    report_json: *mut *mut c_char,
) -> SoritesStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(SoritesStatus::NullPointer, "model is NULL");
        };
        let conclusion = match out_ref(conclusion) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let tol = match Tolerance::new(tolerance) {
            Ok(t) => t,
            Err(e) => return fail(SoritesStatus::InvalidArgument, e.to_string()),
        };
        let hidden = match &m.0 {
            LoadedModel::Hidden(h) => h.clone(),
            LoadedModel::Surface(s) => sorites_core::assumptions::HiddenModel::lift(s),
        };
        let report = match which {
            SoritesTheorem::Stronger => run_stronger_theorem(&hidden, tol),
            SoritesTheorem::Bell => run_bell_corollary(&hidden, tol),
        };
        let report = match report {
            Ok(r) => r,
            Err(e) => return fail(SoritesStatus::Undefined, e.to_string()),
        };
        *conclusion = match report.conclusion {
            Conclusion::ContradictionEstablished => SoritesConclusion::ContradictionEstablished,
            Conclusion::PremiseFailed(_) => SoritesConclusion::PremiseFailed,
            Conclusion::Inconsistent { .. } => SoritesConclusion::Inconsistent,
            Conclusion::BoundExceeded { .. } => SoritesConclusion::BoundExceeded,
        };
        if let Some(out) = report_json.as_mut() {
            let json =
                sorites_core::files::ReportFile::new(sorites_core::files::ReportBody::Derivation(report)).to_json();
            *out = CString::new(json).expect("JSON has no NUL").into_raw();
        }
        SoritesStatus::Ok
    })
}

/// Samples `trials` runs of the experiment at the given angles (degrees).
/// `counts` receives the outcome counts for (0,0), (0,1), (1,0), (1,1).
///
/// # Safety
/// `model` must be a live handle and `counts` point to 4 writable values.
#[no_mangle]
pub unsafe extern "C" fn sorites_model_sample(
    model: *const SoritesModel,
    alice_degrees: f64,
    bob_degrees: f64,
    trials: u64,
    seed: u64,
    counts: *mut u64,
) -> SoritesStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(SoritesStatus::NullPointer, "model is NULL");
        };
        if counts.is_null() {
            return fail(SoritesStatus::NullPointer, "counts is NULL");
        }
        let chain = m.0.chain();
        let Some(pair) = chain.pair_from_degrees(alice_degrees, bob_degrees) else {
            return fail(
                SoritesStatus::InvalidArgument,
                format!("({alice_degrees},{bob_degrees}) is not an experiment of the chain"),
            );
        };
        match sample_runs(m.0.surface(), pair, trials, seed) {
            Ok(s) => {
                std::slice::from_raw_parts_mut(counts, 4).copy_from_slice(&s.cells);
                SoritesStatus::Ok
            }
            Err(e) => fail(SoritesStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Deterministic GHZ assignments meeting all four correlations, out of
/// `total`.
///
/// # Safety
/// Both pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sorites_ghz_enumerate(satisfying: *mut u64, total: *mut u64) -> SoritesStatus {
    guard(|| {
        if satisfying.is_null() || total.is_null() {
            return fail(SoritesStatus::NullPointer, "output pointer is NULL");
        }
        let e = enumerate_ghz_assignments();
        *satisfying = e.satisfying as u64;
        *total = e.total as u64;
        SoritesStatus::Ok
    })
}
