use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use tourney_extremes_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        te_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn exceedance_matches_library() {
    let model = te_model_chess();
    let mut out = TeExceedance::default();
    let status = unsafe { te_exceedance(model, 1000, 0.0, &mut out) };
    assert_eq!(status, TeStatus::TeOk);
    let direct = tourney_extremes::exact::exceedance_report(
        &tourney_extremes::OutcomeModel::chess(),
        1000,
        0.0,
        &Default::default(),
    )
    .unwrap();
    assert_eq!(out.lambda_n, direct.lambda_n);
    assert_eq!(out.pair_cov, direct.pair_cov);
    assert!(out.var_w < out.lambda_n);
    unsafe { te_model_free(model) };
}

#[test]
fn error_codes_and_messages() {
    let model = te_model_classical();
    let mut out = TeExceedance::default();
    assert_eq!(unsafe { te_exceedance(model, 2, 0.0, &mut out) }, TeStatus::TeDomainError);
    assert!(last_error().contains("n >= 3"), "{}", last_error());
    assert_eq!(unsafe { te_exceedance(model, 1_000_000_000, 0.0, &mut out) }, TeStatus::TeCapacityError);
    assert_eq!(unsafe { te_exceedance(ptr::null(), 10, 0.0, &mut out) }, TeStatus::TeNullPointer);
    assert_eq!(unsafe { te_exceedance(model, 10, 0.0, ptr::null_mut()) }, TeStatus::TeNullPointer);

    let masses = [0u32, 2];
    let probs = [0.3, 0.7];
    let mut bad = ptr::null_mut();
    let status = unsafe { te_model_new(2, masses.as_ptr(), probs.as_ptr(), 2, &mut bad) };
    assert_eq!(status, TeStatus::TeInvalidModel);
    assert!(bad.is_null());

    let spec = CString::new("no/such/model.json").unwrap();
    assert_eq!(unsafe { te_model_load(spec.as_ptr(), &mut bad) }, TeStatus::TeConfigError);

    // A short buffer truncates but reports the full length.
    let mut tiny = [0 as c_char; 4];
    let full = unsafe { te_last_error_message(tiny.as_mut_ptr(), tiny.len()) };
    assert!(full > 3);
    assert_eq!(unsafe { CStr::from_ptr(tiny.as_ptr()) }.to_bytes().len(), 3);
    unsafe { te_model_free(model) };
}

#[test]
fn custom_model_and_simulation() {
    let masses = [0u32, 1, 2, 3, 4];
    let probs = [0.1, 0.2, 0.4, 0.2, 0.1];
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { te_model_new(4, masses.as_ptr(), probs.as_ptr(), masses.len(), &mut model) },
        TeStatus::TeOk
    );
    let mut sigma = 0.0;
    assert_eq!(unsafe { te_model_sigma(model, &mut sigma) }, TeStatus::TeOk);
    assert!((sigma - 0.075f64.sqrt()).abs() < 1e-12);

    let t = [-1.0, 0.0, 1.0];
    let run = |workers: usize| {
        let mut report = ptr::null_mut();
        let status = unsafe { te_simulate(model, 60, t.as_ptr(), t.len(), 1, 400, 9, workers, &mut report) };
        assert_eq!(status, TeStatus::TeOk, "{}", last_error());
        let mut counts = [0u64; 65];
        let (mut bins, mut overflow) = (0usize, 0u64);
        let status =
            unsafe { te_sim_exceedance_histogram(report, 1, counts.as_mut_ptr(), counts.len(), &mut bins, &mut overflow) };
        assert_eq!(status, TeStatus::TeOk);
        let mut cdf = 0.0;
        assert_eq!(unsafe { te_sim_order_stat_cdf(report, 1, 0.0, &mut cdf) }, TeStatus::TeOk);
        let mut tv = 0.0;
        assert_eq!(unsafe { te_sim_tv_limit(report, 1, &mut tv) }, TeStatus::TeOk);
        assert_eq!(
            unsafe { te_sim_tv_limit(report, 7, &mut tv) },
            TeStatus::TeDomainError
        );
        unsafe { te_sim_report_free(report) };
        (counts, bins, overflow, cdf)
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one.0.iter().sum::<u64>() + one.2, 400);
    assert!((0.0..=1.0).contains(&one.3));
    unsafe { te_model_free(model) };
}

#[test]
fn verify_and_pure_functions() {
    let mut failed = usize::MAX;
    assert_eq!(unsafe { te_verify(100_000, &mut failed) }, TeStatus::TeOk);
    assert_eq!(failed, 0);
    let (mut a, mut b) = (0.0, 0.0);
    assert_eq!(unsafe { te_norming(100, &mut a, &mut b) }, TeStatus::TeOk);
    assert!((a - 0.329_505_114_491_130_4).abs() < 1e-15);
    assert!((te_order_stat_limit_cdf(0.0, 0) - (-1f64).exp()).abs() < 1e-15);
    let version = unsafe { CStr::from_ptr(te_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "tourney_extremes.h"

int main(void) {
    TeModel *chess = te_model_chess();
    TeExceedance r;
    if (te_exceedance(chess, 1000, 0.0, &r) != TE_OK) return 10;
    if (!(r.var_w < r.lambda_n) || r.pair_cov >= 0.0) return 11;
    if (te_exceedance(chess, 2, 0.0, &r) != TE_DOMAIN_ERROR) return 12;
    char msg[128];
    if (te_last_error_message(msg, sizeof msg) == 0) return 13;
    double t[1] = {0.0};
    TeSimReport *rep = NULL;
    if (te_simulate(chess, 50, t, 1, 0, 100, 1, 1, &rep) != TE_OK) return 14;
    double cdf = -1.0;
    if (te_sim_order_stat_cdf(rep, 0, 0.0, &cdf) != TE_OK || cdf < 0.0 || cdf > 1.0) return 15;
    te_sim_report_free(rep);
    te_model_free(chess);
    printf("%.17g\n", r.lambda_n);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("tourney_extremes.h").exists());
    let target_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = target_dir.join("libtourney_extremes_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());

    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("probe.c");
    let exe = work.path().join("probe");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let lambda: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((lambda - 0.932_855_185_254_796_7).abs() < 1e-12);
}
