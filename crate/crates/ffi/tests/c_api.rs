use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use ztopo_ffi::*;

fn last_error() -> String {
    let p = ztopo_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn chain(n: usize, a: f64) -> *mut ZtopoChain {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { ztopo_chain_new(n, a, 0.0, 0.0, &mut c) }, ZtopoStatus::Ok);
    c
}

#[test]
fn chain_lifecycle_and_positions() {
    let c = chain(4, 0.3);
    unsafe {
        assert_eq!(ztopo_chain_len(c), 4);
        let mut xyz = [0.0; 12];
        assert_eq!(ztopo_chain_positions(c, xyz.as_mut_ptr(), xyz.len()), ZtopoStatus::Ok);
        assert_eq!(&xyz[3..6], &[0.15, 0.15, 0.0]);
        assert_eq!(ztopo_chain_positions(c, xyz.as_mut_ptr(), 11), ZtopoStatus::BufferTooSmall);
        assert!(last_error().contains("12 needed"));
        ztopo_chain_free(c);
        ztopo_chain_free(ptr::null_mut());
    }
}

#[test]
fn error_codes() {
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(ztopo_chain_new(5, 0.3, 0.0, 0.0, &mut c), ZtopoStatus::InvalidGeometry);
        assert!(c.is_null());
        assert_eq!(ztopo_chain_new(4, 0.3, 0.5, -0.5, &mut c), ZtopoStatus::CoincidentAtoms);
        assert_eq!(ztopo_chain_new(4, 0.3, 0.0, 0.0, ptr::null_mut()), ZtopoStatus::NullPointer);
        assert_eq!(last_error(), "out is NULL");
        let mut s = ptr::null_mut();
        assert_eq!(ztopo_spectrum_compute(ptr::null(), 0.0, 0.0, false, &mut s), ZtopoStatus::NullPointer);
        let c = chain(10, 0.3);
        assert_eq!(ztopo_spectrum_compute(c, f64::NAN, 0.0, false, &mut s), ZtopoStatus::InvalidAngle);
        let mut g = ptr::null_mut();
        assert_eq!(ztopo_synthetic_compute(c, 0.0, 64, 64, 256, &mut g), ZtopoStatus::InvalidParameter);
        ztopo_chain_free(c);
    }
}

#[test]
fn spectrum_has_midgap_pair() {
    let c = chain(50, 0.3);
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(ztopo_spectrum_compute(c, -std::f64::consts::FRAC_PI_4, 0.0, false, &mut s), ZtopoStatus::Ok);
        let n = ztopo_spectrum_len(s);
        assert_eq!(n, 50);
        let mut w = vec![0.0; n];
        assert_eq!(ztopo_spectrum_eigenvalues(s, w.as_mut_ptr(), n), ZtopoStatus::Ok);
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        assert_eq!(w.iter().filter(|x| x.abs() < 0.1).count(), 2);
        let mut ipr = vec![0.0; n];
        assert_eq!(ztopo_spectrum_ipr(s, ipr.as_mut_ptr(), n), ZtopoStatus::Ok);
        assert_eq!(ztopo_spectrum_loc(s), ipr.iter().copied().fold(0.0, f64::max));
        let mut v = vec![0.0; n];
        assert_eq!(ztopo_spectrum_eigenvector(s, 0, v.as_mut_ptr(), n), ZtopoStatus::Ok);
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(ztopo_spectrum_eigenvector(s, n, v.as_mut_ptr(), n), ZtopoStatus::InvalidParameter);
        ztopo_spectrum_free(s);
        ztopo_chain_free(c);
    }
}

#[test]
fn bloch_and_winding() {
    let c = chain(2, 0.3);
    unsafe {
        let mut w = ZtopoWinding::default();
        assert_eq!(ztopo_winding_number(c, -std::f64::consts::FRAC_PI_4, 1024, 4096, &mut w), ZtopoStatus::Ok);
        assert_eq!((w.nu, w.well_defined), (1, 1));
        assert_eq!(ztopo_winding_number(c, std::f64::consts::FRAC_PI_4, 1024, 4096, &mut w), ZtopoStatus::Ok);
        assert_eq!(w.nu, 0);
        let mut b = ZtopoBlochVector::default();
        let k = 3.0 * std::f64::consts::PI / 0.3;
        assert_eq!(ztopo_bloch_vector(c, 0.2, k, 512, &mut b), ZtopoStatus::Ok);
        assert_eq!(b.wrapped, 1);
        assert_eq!(b.dz, 0.0);
        assert_eq!(ztopo_bloch_vector(c, 0.2, 0.0, 0, &mut b), ZtopoStatus::InvalidCutoff);
        ztopo_chain_free(c);
    }
}

#[test]
fn synthetic_chern_numbers() {
    let c = chain(2, 0.3);
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(ztopo_synthetic_compute(c, 1.0, 64, 64, 1024, &mut g), ZtopoStatus::Ok);
        let (mut nk, mut nphi) = (0, 0);
        assert_eq!(ztopo_synthetic_shape(g, &mut nk, &mut nphi), ZtopoStatus::Ok);
        assert_eq!((nk, nphi), (64, 64));
        let (mut cm, mut cp) = (0, 0);
        assert_eq!(ztopo_synthetic_chern(g, &mut cm, &mut cp), ZtopoStatus::Ok);
        assert_eq!((cm.abs(), cm + cp), (1, 0));
        let mut f = vec![0.0; nk * nphi];
        assert_eq!(ztopo_synthetic_berry(g, ZtopoBand::Lower, f.as_mut_ptr(), f.len()), ZtopoStatus::Ok);
        let mut d = vec![0.0; nk];
        assert_eq!(ztopo_synthetic_displacement(g, ZtopoBand::Upper, d.as_mut_ptr(), nk), ZtopoStatus::Ok);
        assert!((d.iter().sum::<f64>() / nk as f64 - cp as f64).abs() < 1e-10);
        ztopo_synthetic_free(g);
        ztopo_chain_free(c);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ztopo_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include")
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "ztopo.h"

int main(void) {
    ZtopoChain *chain = NULL;
    if (ztopo_chain_new(3, 0.3, 0.0, 0.0, &chain) != ZTOPO_STATUS_INVALID_GEOMETRY) return 1;
    if (ztopo_last_error() == NULL) return 2;
    if (ztopo_chain_new(20, 0.3, 0.0, 0.0, &chain) != ZTOPO_STATUS_OK) return 3;
    ZtopoWinding w;
    if (ztopo_winding_number(chain, -0.785398163397448, 256, 1024, &w) != ZTOPO_STATUS_OK) return 4;
    ZtopoSpectrum *s = NULL;
    if (ztopo_spectrum_compute(chain, 0.3, 0.0, false, &s) != ZTOPO_STATUS_OK) return 5;
    double w0[20];
    if (ztopo_spectrum_eigenvalues(s, w0, 20) != ZTOPO_STATUS_OK) return 6;
    printf("nu=%d n=%zu\n", w.nu, ztopo_spectrum_len(s));
    ztopo_spectrum_free(s);
    ztopo_chain_free(chain);
    return 0;
}
"#;

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header_dir())
        .arg(&src)
        .status()
        .expect("C compiler available");
    assert!(status.success());
}

#[test]
fn c_program_links_against_static_library() {
    // target/<profile>/deps/<test> -> target/<profile>/libztopo_ffi.a
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().and_then(|d| d.parent()).unwrap().join("libztopo_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    let bin = dir.path().join("check");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c11", "-I"])
        .arg(header_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "nu=1 n=20\n");
}
