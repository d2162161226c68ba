//! C ABI for specround.
//!
//! Objects cross the boundary as opaque handles created and destroyed by
//! this library. Every fallible call returns an [`SrStatus`]; on failure the
//! message is available from [`sr_last_error_message`] on the same thread.
//! Panics never unwind into the caller.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use specround::graph::{DataSet, SimilarityFn, SimilarityMatrix};
use specround::ltm::DofMode;
use specround::metrics::{rand_index, variation_of_information};
use specround::pipeline::{cluster_similarity, ClusterParams, ClusterResult, Method};
use specround::{Error, Partition};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ComputeError = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrMethod {
    Ltm = 0,
    Naive = 1,
    Kmeans = 2,
}

/// Clustering parameters. Start from `sr_params_default()`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SrParams {
    pub method: SrMethod,
    /// Number of leading eigenvectors.
    pub k_max: usize,
    pub delta: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Cluster count for k-means; ignored otherwise.
    pub k: usize,
    /// Nonzero counts the deterministic link tables in the BIC.
    pub count_links: i32,
}

enum Source {
    Points(DataSet),
    Similarity(SimilarityMatrix),
}

/// Opaque dataset handle.
pub struct SrDataset {
    source: Source,
}

/// Opaque clustering result handle.
pub struct SrResult {
    result: ClusterResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: SrStatus, msg: impl Into<String>) -> SrStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> SrStatus {
    let status = match e {
        Error::InvalidParameter { .. }
        | Error::InvalidInput(_)
        | Error::LengthMismatch { .. }
        | Error::NonFiniteInput { .. }
        | Error::KTooLarge { .. }
        | Error::KOutOfRange { .. }
        | Error::QOutOfRange { .. }
        | Error::EmptyData => SrStatus::InvalidArgument,
        _ => SrStatus::ComputeError,
    };
    fail(status, format!("[{}] {e}", e.module()))
}

fn guard(f: impl FnOnce() -> SrStatus) -> SrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(SrStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

macro_rules! nonnull {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(SrStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn sr_params_default() -> SrParams {
    let d = ClusterParams::default();
    SrParams {
        method: SrMethod::Ltm,
        k_max: d.k_max,
        delta: d.delta,
        restarts: d.restarts,
        seed: d.seed,
        k: 0,
        count_links: 0,
    }
}

/// Copies an n×d row-major point array. `labels` may be NULL; otherwise it
/// holds n ground-truth cluster ids used to report metrics.
#[no_mangle]
pub unsafe extern "C" fn sr_dataset_from_points(
    points: *const f64,
    n: usize,
    d: usize,
    labels: *const usize,
    out: *mut *mut SrDataset,
) -> SrStatus {
    guard(|| {
        nonnull!(points, out);
        let Some(len) = n.checked_mul(d) else {
            return fail(SrStatus::InvalidArgument, "n * d overflows");
        };
        if d == 0 {
            return fail(SrStatus::InvalidArgument, "d must be at least 1");
        }
        let flat = std::slice::from_raw_parts(points, len);
        let rows: Vec<Vec<f64>> = flat.chunks(d).map(<[f64]>::to_vec).collect();
        let labels = (!labels.is_null()).then(|| std::slice::from_raw_parts(labels, n).to_vec());
        match DataSet::from_rows(&rows, labels) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(SrDataset {
                    source: Source::Points(ds),
                }));
                SrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Copies a row-major n×n symmetric non-negative similarity matrix.
#[no_mangle]
pub unsafe extern "C" fn sr_dataset_from_similarity(
    s: *const f64,
    n: usize,
    out: *mut *mut SrDataset,
) -> SrStatus {
    guard(|| {
        nonnull!(s, out);
        let Some(len) = n.checked_mul(n) else {
            return fail(SrStatus::InvalidArgument, "n * n overflows");
        };
        let flat = std::slice::from_raw_parts(s, len);
        let m = specround::nalgebra::DMatrix::from_row_slice(n, n, flat);
        match SimilarityMatrix::new(m) {
            Ok(sim) => {
                *out = Box::into_raw(Box::new(SrDataset {
                    source: Source::Similarity(sim),
                }));
                SrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn sr_dataset_free(ds: *mut SrDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of points in a dataset, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn sr_dataset_len(ds: *const SrDataset) -> usize {
    match ds.as_ref().map(|d| &d.source) {
        Some(Source::Points(p)) => p.n(),
        Some(Source::Similarity(s)) => s.n(),
        None => 0,
    }
}

fn to_params(p: &SrParams) -> ClusterParams {
    ClusterParams {
        method: match p.method {
            SrMethod::Ltm => Method::Ltm,
            SrMethod::Naive => Method::Naive,
            SrMethod::Kmeans => Method::Kmeans,
        },
        k_max: p.k_max,
        delta: p.delta,
        seed: p.seed,
        restarts: p.restarts,
        k: (p.k > 0).then_some(p.k),
        dof_mode: if p.count_links != 0 {
            DofMode::CountLinks
        } else {
            DofMode::Structural
        },
    }
}

/// Clusters `ds`. `similarity_fn` (`"knn:10"`, `"gaussian:0.2"`) is used for
/// point datasets and may be NULL for the default `knn:10`; it is ignored
/// for similarity datasets. `params` may be NULL for the defaults.
#[no_mangle]
pub unsafe extern "C" fn sr_cluster(
    ds: *const SrDataset,
    similarity_fn: *const c_char,
    params: *const SrParams,
    out: *mut *mut SrResult,
) -> SrStatus {
    guard(|| {
        nonnull!(ds, out);
        let params = to_params(
            &params
                .as_ref()
                .copied()
                .unwrap_or_else(|| sr_params_default()),
        );
        let ds = &*ds;
        let built;
        let (sim, truth) = match &ds.source {
            Source::Points(p) => {
                let f = if similarity_fn.is_null() {
                    SimilarityFn::Knn(10)
                } else {
                    let Ok(s) = CStr::from_ptr(similarity_fn).to_str() else {
                        return fail(SrStatus::InvalidArgument, "similarity_fn is not UTF-8");
                    };
                    match s.parse() {
                        Ok(f) => f,
                        Err(e) => return from_error(e),
                    }
                };
                built = match f.build(p) {
                    Ok(s) => s,
                    Err(e) => return from_error(e),
                };
                (&built, p.truth())
            }
            Source::Similarity(s) => (s, None),
        };
        match cluster_similarity(sim, &params, truth.as_ref()) {
            Ok(run) => {
                *out = Box::into_raw(Box::new(SrResult { result: run.result }));
                SrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn sr_result_free(r: *mut SrResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Number of points, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn sr_result_len(r: *const SrResult) -> usize {
    r.as_ref().map_or(0, |r| r.result.assignment.len())
}

/// Number of clusters found, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn sr_result_num_clusters(r: *const SrResult) -> usize {
    r.as_ref().map_or(0, |r| r.result.k)
}

/// Number of eigenvectors behind the partition, or -1 (k-means, NULL).
#[no_mangle]
pub unsafe extern "C" fn sr_result_q(r: *const SrResult) -> i64 {
    r.as_ref().and_then(|r| r.result.q).map_or(-1, |q| q as i64)
}

/// Copies the cluster labels into `out`, which must hold `len` entries with
/// `len == sr_result_len(r)`.
#[no_mangle]
pub unsafe extern "C" fn sr_result_assignment(
    r: *const SrResult,
    out: *mut usize,
    len: usize,
) -> SrStatus {
    guard(|| {
        nonnull!(r, out);
        let a = &(*r).result.assignment;
        if len != a.len() {
            return fail(
                SrStatus::InvalidArgument,
                format!("buffer holds {len} labels, result has {}", a.len()),
            );
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(a);
        SrStatus::Ok
    })
}

/// Rand index against the dataset's labels; NaN when there were none.
#[no_mangle]
pub unsafe extern "C" fn sr_result_rand_index(r: *const SrResult) -> f64 {
    r.as_ref()
        .and_then(|r| r.result.metrics)
        .map_or(f64::NAN, |m| m.rand_index)
}

/// Result as a NUL-terminated JSON string; release with `sr_string_free`.
#[no_mangle]
pub unsafe extern "C" fn sr_result_to_json(r: *const SrResult, out: *mut *mut c_char) -> SrStatus {
    guard(|| {
        nonnull!(r, out);
        match CString::new((*r).result.to_json()) {
            Ok(s) => {
                *out = s.into_raw();
                SrStatus::Ok
            }
            Err(_) => fail(SrStatus::ComputeError, "JSON contains a NUL byte"),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn sr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn partitions(a: *const usize, b: *const usize, n: usize) -> (Partition, Partition) {
    (
        Partition::from_labels(std::slice::from_raw_parts(a, n)),
        Partition::from_labels(std::slice::from_raw_parts(b, n)),
    )
}

/// Rand index of two labelings of `n` points.
#[no_mangle]
pub unsafe extern "C" fn sr_rand_index(
    a: *const usize,
    b: *const usize,
    n: usize,
    out: *mut f64,
) -> SrStatus {
    guard(|| {
        nonnull!(a, b, out);
        let (p, t) = partitions(a, b, n);
        match rand_index(&p, &t) {
            Ok(v) => {
                *out = v;
                SrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Variation of information (nats) of two labelings of `n` points.
#[no_mangle]
pub unsafe extern "C" fn sr_variation_of_information(
    a: *const usize,
    b: *const usize,
    n: usize,
    out: *mut f64,
) -> SrStatus {
    guard(|| {
        nonnull!(a, b, out);
        let (p, t) = partitions(a, b, n);
        match variation_of_information(&p, &t) {
            Ok(v) => {
                *out = v;
                SrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
