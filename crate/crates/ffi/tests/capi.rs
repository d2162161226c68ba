use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use specround_ffi::*;

fn two_groups() -> (Vec<f64>, Vec<usize>) {
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for g in 0..2 {
        for i in 0..15 {
            pts.push(g as f64 * 40.0 + i as f64 * 0.2);
            pts.push((i % 3) as f64 * 0.1);
            labels.push(g);
        }
    }
    (pts, labels)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(sr_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn cluster_points_round_trip() {
    let (pts, labels) = two_groups();
    let n = labels.len();
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(
            sr_dataset_from_points(pts.as_ptr(), n, 2, labels.as_ptr(), &mut ds),
            SrStatus::Ok
        );
        assert_eq!(sr_dataset_len(ds), n);

        let mut params = sr_params_default();
        params.k_max = 8;
        let knn = CString::new("knn:4").unwrap();
        let mut res = ptr::null_mut();
        assert_eq!(
            sr_cluster(ds, knn.as_ptr(), &params, &mut res),
            SrStatus::Ok,
            "{}",
            last_error()
        );
        assert_eq!(sr_result_len(res), n);
        assert_eq!(sr_result_num_clusters(res), 2);
        assert!(sr_result_q(res) >= 1);
        assert_eq!(sr_result_rand_index(res), 1.0);

        let mut out = vec![usize::MAX; n];
        assert_eq!(sr_result_assignment(res, out.as_mut_ptr(), n), SrStatus::Ok);
        assert!(out[..15].iter().all(|&l| l == out[0]));
        assert!(out[15..].iter().all(|&l| l != out[0]));
        assert_eq!(
            sr_result_assignment(res, out.as_mut_ptr(), n - 1),
            SrStatus::InvalidArgument
        );

        let mut json = ptr::null_mut();
        assert_eq!(sr_result_to_json(res, &mut json), SrStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        assert!(text.starts_with(r#"{"method":"ltm""#), "{text}");
        sr_string_free(json);

        sr_result_free(res);
        sr_dataset_free(ds);
    }
}

#[test]
fn kmeans_on_similarity_matrix() {
    let n = 6;
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j && (i < 3) == (j < 3) {
                s[i * n + j] = 1.0;
            }
        }
    }
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(
            sr_dataset_from_similarity(s.as_ptr(), n, &mut ds),
            SrStatus::Ok
        );
        let mut params = sr_params_default();
        params.method = SrMethod::Kmeans;
        params.k = 2;
        let mut res = ptr::null_mut();
        assert_eq!(
            sr_cluster(ds, ptr::null(), &params, &mut res),
            SrStatus::Ok,
            "{}",
            last_error()
        );
        assert_eq!(sr_result_q(res), -1);
        assert!(sr_result_rand_index(res).is_nan());
        assert_eq!(sr_result_num_clusters(res), 2);
        sr_result_free(res);
        sr_dataset_free(ds);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(
            sr_dataset_from_points(ptr::null(), 3, 2, ptr::null(), &mut ds),
            SrStatus::NullPointer
        );
        assert!(!last_error().is_empty());

        let asym = [0.0, 1.0, 2.0, 0.0];
        assert_eq!(
            sr_dataset_from_similarity(asym.as_ptr(), 2, &mut ds),
            SrStatus::InvalidArgument
        );

        let (pts, _) = two_groups();
        assert_eq!(
            sr_dataset_from_points(pts.as_ptr(), 30, 2, ptr::null(), &mut ds),
            SrStatus::Ok
        );
        let mut params = sr_params_default();
        params.k_max = 8;
        params.delta = 1.5;
        let mut res = ptr::null_mut();
        assert_eq!(
            sr_cluster(ds, ptr::null(), &params, &mut res),
            SrStatus::InvalidArgument
        );
        assert!(last_error().contains("delta"), "{}", last_error());
        assert!(res.is_null());

        let bad = CString::new("cosine:1").unwrap();
        assert_eq!(
            sr_cluster(ds, bad.as_ptr(), ptr::null(), &mut res),
            SrStatus::InvalidArgument
        );
        sr_dataset_free(ds);

        sr_dataset_free(ptr::null_mut());
        sr_result_free(ptr::null_mut());
        assert_eq!(sr_dataset_len(ptr::null()), 0);
    }
}

#[test]
fn standalone_metrics() {
    let a = [0usize, 0, 1, 1];
    let b = [0usize, 1, 0, 1];
    let (mut ri, mut vi) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            sr_rand_index(a.as_ptr(), b.as_ptr(), 4, &mut ri),
            SrStatus::Ok
        );
        assert_eq!(
            sr_variation_of_information(a.as_ptr(), b.as_ptr(), 4, &mut vi),
            SrStatus::Ok
        );
        assert_eq!(
            sr_rand_index(a.as_ptr(), b.as_ptr(), 1, &mut ri),
            SrStatus::InvalidArgument
        );
    }
    assert!((ri - 1.0 / 3.0).abs() < 1e-12);
    assert!((vi - 2.0 * 2f64.ln()).abs() < 1e-12);
    assert!(!unsafe { CStr::from_ptr(sr_version()) }
        .to_bytes()
        .is_empty());
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/specround.h")
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for sym in [
        "typedef struct SrDataset SrDataset;",
        "typedef struct SrResult SrResult;",
        "SR_STATUS_OK = 0",
        "SR_METHOD_KMEANS",
        "sr_dataset_from_points",
        "sr_cluster",
        "sr_result_assignment",
        "sr_last_error_message",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
}

const C_SMOKE: &str = r#"
#include <stdio.h>
#include "specround.h"

int main(void) {
    double pts[40];
    for (int i = 0; i < 20; i++) {
        pts[2 * i] = (i < 10 ? 0.0 : 30.0) + 0.1 * (i % 10);
        pts[2 * i + 1] = 0.05 * (i % 3);
    }
    SrDataset *ds = NULL;
    if (sr_dataset_from_points(pts, 20, 2, NULL, &ds) != SR_STATUS_OK) return 1;
    SrParams p = sr_params_default();
    p.k_max = 6;
    SrResult *r = NULL;
    if (sr_cluster(ds, "knn:3", &p, &r) != SR_STATUS_OK) {
        fprintf(stderr, "%s\n", sr_last_error_message());
        return 2;
    }
    size_t k = sr_result_num_clusters(r);
    sr_result_free(r);
    sr_dataset_free(ds);
    printf("%zu\n", k);
    return k == 2 ? 0 : 3;
}
"#;

#[test]
fn c_program_links_static_library() {
    let deps = std::env::current_exe().unwrap();
    let profile_dir = deps.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libspecround_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, C_SMOKE).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "2");
}
