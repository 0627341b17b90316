//! C interface to cof-rank.
//!
//! Every fallible function returns a [`CofStatus`]; on failure the message
//! is available from [`cof_last_error`] on the same thread until the next
//! failing call. Handles are opaque and must be released with their
//! `*_free` function. Strings returned through `out` parameters are freed
//! with [`cof_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::ptr;

use cof_rank::error::Error;
use cof_rank::features::{FeatureVector, FEATURE_COUNT};
use cof_rank::letor_io::{self, Dataset};
use cof_rank::metrics::{self, Metric};
use cof_rank::rankers::{self, RankerKind, RankingModel, TrainConfig};
use cof_rank::text_pipeline::{process, PipelineConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CofStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Training = 6,
    ModelFormat = 7,
    UndefinedMetric = 8,
    Internal = 9,
}

/// A trained ranking model.
pub struct CofModel {
    inner: RankingModel,
}

/// A feature dataset read from a LETOR file.
pub struct CofDataset {
    inner: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: CofStatus, msg: impl Into<String>) -> CofStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> CofStatus {
    match err {
        Error::Io(_) => CofStatus::Io,
        Error::Parse { .. } => CofStatus::Parse,
        Error::Validation(_) | Error::EmptyCorpus | Error::CannotSplit(_) => CofStatus::Validation,
        Error::Training(_) | Error::Divergence { .. } => CofStatus::Training,
        Error::ModelFormat(_) => CofStatus::ModelFormat,
        Error::UndefinedMetric(_) => CofStatus::UndefinedMetric,
        Error::Config(_) => CofStatus::InvalidArgument,
        Error::Stage { source, .. } => status_of(source),
    }
}

fn from_error(err: Error) -> CofStatus {
    fail(status_of(&err), err.to_string())
}

/// Catches panics so they never unwind across the C boundary.
fn guard(f: impl FnOnce() -> CofStatus + std::panic::UnwindSafe) -> CofStatus {
    std::panic::catch_unwind(f).unwrap_or_else(|_| fail(CofStatus::Internal, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, CofStatus> {
    if p.is_null() {
        return Err(fail(CofStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CofStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

unsafe fn labels_arg<'a>(labels: *const u8, len: usize) -> Result<&'a [u8], CofStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if labels.is_null() {
        return Err(fail(CofStatus::NullPointer, "labels is null"));
    }
    Ok(std::slice::from_raw_parts(labels, len))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cof_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn cof_feature_count() -> usize {
    FEATURE_COUNT
}

#[no_mangle]
pub unsafe extern "C" fn cof_model_load(path: *const c_char, out: *mut *mut CofModel) -> CofStatus {
    guard(|| {
        if out.is_null() {
            return fail(CofStatus::NullPointer, "out is null");
        }
        let path = tri!(str_arg(path, "path"));
        let file = match File::open(Path::new(path)) {
            Ok(f) => f,
            Err(e) => return fail(CofStatus::Io, format!("cannot open {path}: {e}")),
        };
        match rankers::load(BufReader::new(file)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CofModel { inner }));
                CofStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn cof_model_save(model: *const CofModel, path: *const c_char) -> CofStatus {
    guard(|| {
        let Some(model) = model.as_ref() else {
            return fail(CofStatus::NullPointer, "model is null");
        };
        let path = tri!(str_arg(path, "path"));
        let file = match File::create(Path::new(path)) {
            Ok(f) => f,
            Err(e) => return fail(CofStatus::Io, format!("cannot create {path}: {e}")),
        };
        let mut w = BufWriter::new(file);
        match rankers::save(&model.inner, &mut w).and_then(|()| w.flush().map_err(Error::from)) {
            Ok(()) => CofStatus::Ok,
            Err(e) => from_error(e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn cof_model_free(model: *mut CofModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Scores one feature vector of `len` values; `len` must equal
/// `cof_feature_count()`.
#[no_mangle]
pub unsafe extern "C" fn cof_model_score(
    model: *const CofModel,
    features: *const f64,
    len: usize,
    out: *mut f64,
) -> CofStatus {
    guard(|| {
        let Some(model) = model.as_ref() else {
            return fail(CofStatus::NullPointer, "model is null");
        };
        if features.is_null() || out.is_null() {
            return fail(CofStatus::NullPointer, "features or out is null");
        }
        if len != FEATURE_COUNT {
            return fail(
                CofStatus::InvalidArgument,
                format!("expected {FEATURE_COUNT} features, got {len}"),
            );
        }
        let mut v = [0.0; FEATURE_COUNT];
        v.copy_from_slice(std::slice::from_raw_parts(features, len));
        *out = model.inner.score(&FeatureVector(v));
        CofStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn cof_dataset_read(path: *const c_char, out: *mut *mut CofDataset) -> CofStatus {
    guard(|| {
        if out.is_null() {
            return fail(CofStatus::NullPointer, "out is null");
        }
        let path = tri!(str_arg(path, "path"));
        let file = match File::open(Path::new(path)) {
            Ok(f) => f,
            Err(e) => return fail(CofStatus::Io, format!("cannot open {path}: {e}")),
        };
        match letor_io::read(BufReader::new(file)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CofDataset { inner }));
                CofStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of instances, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cof_dataset_len(dataset: *const CofDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.len())
}

#[no_mangle]
pub unsafe extern "C" fn cof_dataset_free(dataset: *mut CofDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Trains `algorithm` ("adarank", "listnet", "mart", "lambdarank",
/// "lambdamart"). A negative `rounds` selects the algorithm's default.
#[no_mangle]
pub unsafe extern "C" fn cof_train(
    dataset: *const CofDataset,
    algorithm: *const c_char,
    rounds: i64,
    seed: u64,
    out: *mut *mut CofModel,
) -> CofStatus {
    guard(|| {
        let Some(dataset) = dataset.as_ref() else {
            return fail(CofStatus::NullPointer, "dataset is null");
        };
        if out.is_null() {
            return fail(CofStatus::NullPointer, "out is null");
        }
        let name = tri!(str_arg(algorithm, "algorithm"));
        let kind: RankerKind = match name.parse() {
            Ok(k) => k,
            Err(e) => return from_error(e),
        };
        let cfg = TrainConfig {
            rounds: usize::try_from(rounds).ok(),
            seed,
            ..TrainConfig::default()
        };
        match rankers::train(kind, &dataset.inner, &cfg) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CofModel { inner }));
                CofStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Mean of `metric` ("map", "ndcg@k", "err@k", "p@k") over the dataset's
/// queries ranked by `model`. MAP skips queries without relevant documents.
#[no_mangle]
pub unsafe extern "C" fn cof_evaluate(
    model: *const CofModel,
    dataset: *const CofDataset,
    metric: *const c_char,
    out: *mut f64,
) -> CofStatus {
    guard(|| {
        let (Some(model), Some(dataset)) = (model.as_ref(), dataset.as_ref()) else {
            return fail(CofStatus::NullPointer, "model or dataset is null");
        };
        if out.is_null() {
            return fail(CofStatus::NullPointer, "out is null");
        }
        let metric: Metric = match tri!(str_arg(metric, "metric")).parse() {
            Ok(m) => m,
            Err(e) => return from_error(e),
        };
        match metrics::report(&model.inner.rank_dataset(&dataset.inner), "data") {
            Ok(rep) => {
                *out = rep.value(metric).unwrap_or(f64::NAN);
                CofStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// NDCG@k of binary or graded labels given in ranked order.
#[no_mangle]
pub unsafe extern "C" fn cof_ndcg_at_k(labels: *const u8, len: usize, k: usize, out: *mut f64) -> CofStatus {
    guard(|| {
        let labels = tri!(labels_arg(labels, len));
        if out.is_null() {
            return fail(CofStatus::NullPointer, "out is null");
        }
        *out = metrics::ndcg_at_k(labels, k);
        CofStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn cof_precision_at_k(labels: *const u8, len: usize, k: usize, out: *mut f64) -> CofStatus {
    guard(|| {
        let labels = tri!(labels_arg(labels, len));
        if out.is_null() || k == 0 {
            return fail(CofStatus::InvalidArgument, "out is null or k is 0");
        }
        *out = metrics::precision_at_k(labels, k);
        CofStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn cof_err_at_k(labels: *const u8, len: usize, k: usize, y_max: u8, out: *mut f64) -> CofStatus {
    guard(|| {
        let labels = tri!(labels_arg(labels, len));
        if out.is_null() || y_max == 0 {
            return fail(CofStatus::InvalidArgument, "out is null or y_max is 0");
        }
        *out = metrics::err_at_k(labels, k, y_max);
        CofStatus::Ok
    })
}

/// Fails with `COF_STATUS_UNDEFINED_METRIC` when no label is relevant.
#[no_mangle]
pub unsafe extern "C" fn cof_average_precision(labels: *const u8, len: usize, out: *mut f64) -> CofStatus {
    guard(|| {
        let labels = tri!(labels_arg(labels, len));
        if out.is_null() {
            return fail(CofStatus::NullPointer, "out is null");
        }
        match metrics::average_precision(labels) {
            Ok(v) => {
                *out = v;
                CofStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Runs the default preprocessing pipeline; the terms come back joined by
/// single spaces.
#[no_mangle]
pub unsafe extern "C" fn cof_process_text(text: *const c_char, out: *mut *mut c_char) -> CofStatus {
    guard(|| {
        if out.is_null() {
            return fail(CofStatus::NullPointer, "out is null");
        }
        let text = tri!(str_arg(text, "text"));
        let joined = process(text, &PipelineConfig::default()).join(" ");
        match CString::new(joined) {
            Ok(s) => {
                *out = s.into_raw();
                CofStatus::Ok
            }
            Err(_) => fail(CofStatus::Internal, "term contains NUL"),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn cof_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
