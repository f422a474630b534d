use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use sorites_core::chain::{build_chain, qm_surface_model};
use sorites_core::files::{ModelFile, ReportFile};
use sorites_core::models::{local_floor_model, trivial_lift};
use sorites_ffi::*;

fn last_error() -> String {
    let p = sorites_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(json: &str) -> *mut SoritesModel {
    let src = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { sorites_model_parse(src.as_ptr(), &mut m) }, SoritesStatus::Ok);
    m
}

#[test]
fn chain_handle() {
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(sorites_chain_new(45, &mut c), SoritesStatus::Ok);
        assert_eq!(sorites_chain_experiment_count(c), 46);
        assert_eq!(sorites_chain_delta_theta(c), 2.0);
        assert!((sorites_chain_qm_expected_failures(c) - 0.0548).abs() < 1e-3);
        let mut floor = 0.0;
        assert_eq!(sorites_chain_local_floor(c, &mut floor), SoritesStatus::InvalidArgument);
        assert!(last_error().contains("45"));
        sorites_chain_free(c);

        assert_eq!(sorites_chain_new(5, &mut c), SoritesStatus::Ok);
        assert_eq!(sorites_chain_local_floor(c, &mut floor), SoritesStatus::Ok);
        assert_eq!(floor, 1.0);
        sorites_chain_free(c);

        assert_eq!(sorites_chain_new(4, &mut c), SoritesStatus::InvalidArgument);
        assert_eq!(sorites_chain_new(3, ptr::null_mut()), SoritesStatus::NullPointer);
        sorites_chain_free(ptr::null_mut());
        assert_eq!(sorites_chain_experiment_count(ptr::null()), 0);

        let mut p = 0.0;
        assert_eq!(sorites_prob_no_link_broken(405, &mut p), SoritesStatus::Ok);
        assert!(p > 0.99);
    }
}

#[test]
fn model_checks_and_theorem() {
    let chain = build_chain(3).unwrap();
    let lift = parse(&ModelFile::from_hidden(&trivial_lift(&chain), "").to_json());
    unsafe {
        let mut holds = false;
        assert_eq!(
            sorites_model_check(lift, SoritesAssumption::ParameterIndependence, 0.0, &mut holds),
            SoritesStatus::Ok
        );
        assert!(holds);
        assert_eq!(
            sorites_model_check(lift, SoritesAssumption::OutcomeIndependence, 0.0, &mut holds),
            SoritesStatus::Ok
        );
        assert!(!holds);
        assert_eq!(
            sorites_model_check(lift, SoritesAssumption::ParameterIndependence, -1.0, &mut holds),
            SoritesStatus::InvalidArgument
        );

        let mut conclusion = SoritesConclusion::Inconsistent;
        let mut json = ptr::null_mut();
        assert_eq!(
            sorites_model_run_theorem(lift, SoritesTheorem::Stronger, 0.0, &mut conclusion, &mut json),
            SoritesStatus::Ok
        );
        assert_eq!(conclusion, SoritesConclusion::ContradictionEstablished);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        sorites_string_free(json);
        assert!(ReportFile::parse(&text).is_ok());

        assert_eq!(
            sorites_model_run_theorem(lift, SoritesTheorem::Bell, 0.0, &mut conclusion, ptr::null_mut()),
            SoritesStatus::Ok
        );
        assert_eq!(conclusion, SoritesConclusion::PremiseFailed);
        sorites_model_free(lift);
    }

    let local = parse(&ModelFile::from_hidden(&local_floor_model(&chain), "").to_json());
    unsafe {
        let mut conclusion = SoritesConclusion::Inconsistent;
        sorites_model_run_theorem(local, SoritesTheorem::Stronger, 0.0, &mut conclusion, ptr::null_mut());
        assert_eq!(conclusion, SoritesConclusion::PremiseFailed);
        sorites_model_free(local);
    }
}

#[test]
fn parse_errors_are_reported() {
    let src = CString::new("{\"format\": \"sorites-model/9\"}").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { sorites_model_parse(src.as_ptr(), &mut m) },
        SoritesStatus::ParseError
    );
    assert!(m.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { sorites_model_parse(ptr::null(), &mut m) },
        SoritesStatus::NullPointer
    );
}

#[test]
fn sampling_and_ghz() {
    let chain = build_chain(3).unwrap();
    let m = parse(&ModelFile::from_surface(&qm_surface_model(&chain, true), "").to_json());
    let mut counts = [0u64; 4];
    unsafe {
        assert_eq!(
            sorites_model_sample(m, 90.0, 0.0, 1000, 42, counts.as_mut_ptr()),
            SoritesStatus::Ok
        );
        assert_eq!(counts[0] + counts[3], 0);
        assert_eq!(counts[1] + counts[2], 1000);
        assert_eq!(
            sorites_model_sample(m, 30.0, 30.0, 10, 1, counts.as_mut_ptr()),
            SoritesStatus::InvalidArgument
        );
        sorites_model_free(m);

        let (mut sat, mut total) = (9, 0);
        assert_eq!(sorites_ghz_enumerate(&mut sat, &mut total), SoritesStatus::Ok);
        assert_eq!((sat, total), (0, 64));
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("sorites.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "sorites_last_error",
        "sorites_string_free",
        "sorites_chain_new",
        "sorites_model_parse",
        "sorites_model_run_theorem",
        "sorites_ghz_enumerate",
        "typedef struct SoritesModel SoritesModel;",
        "SORITES_STATUS_OK = 0",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"sorites.h\"\nint main(void) { SoritesChain *c = 0; return sorites_chain_new(3, &c) == SORITES_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header().parent().unwrap())
        .arg(&src)
        .output()
        .expect("a C compiler is installed");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
