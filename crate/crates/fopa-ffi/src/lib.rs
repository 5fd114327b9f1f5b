//! C ABI over the core library: opaque report handles, integer error codes,
//! plain-double getters. The generated header lands in `include/fopa.h`.

use fopa::broadband::{bb_filtered_report, gp_for_gain, BroadbandParams};
use fopa::engine::broadband_engine_report;
use fopa::factorable::{fac_hterms, fac_photon_numbers};
use fopa::metrics::{build_report, NoiseReport};
use fopa::singlemode::sm_report;
use fopa::{C64, FopaError};
use std::os::raw::c_char;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FopaStatus {
    Ok = 0,
    InvalidArgument = 1,
    GridCoverage = 2,
    GridMismatch = 3,
    TruncationInsufficient = 4,
    UndefinedOptimum = 5,
    NumericalInstability = 6,
    NullPointer = 7,
}

fn status_of(e: &FopaError) -> FopaStatus {
    match e {
        FopaError::InvalidArgument(_) => FopaStatus::InvalidArgument,
        FopaError::GridCoverage(_) => FopaStatus::GridCoverage,
        FopaError::GridMismatch(_) => FopaStatus::GridMismatch,
        FopaError::TruncationInsufficient { .. } => FopaStatus::TruncationInsufficient,
        FopaError::UndefinedOptimum(_) => FopaStatus::UndefinedOptimum,
        FopaError::NumericalInstability(_) => FopaStatus::NumericalInstability,
    }
}

/// Opaque noise report handle; create with one of the `fopa_*_report`
/// constructors, read with the getters, release with `fopa_report_free`.
pub struct FopaReport {
    inner: NoiseReport,
}

fn deliver(out: *mut *mut FopaReport, result: Result<NoiseReport, FopaError>) -> FopaStatus {
    if out.is_null() {
        return FopaStatus::NullPointer;
    }
    match result {
        Ok(report) => {
            unsafe { *out = Box::into_raw(Box::new(FopaReport { inner: report })) };
            FopaStatus::Ok
        }
        Err(e) => {
            unsafe { *out = std::ptr::null_mut() };
            status_of(&e)
        }
    }
}

/// Single-frequency-mode report at photon-number gain `g`.
#[no_mangle]
pub extern "C" fn fopa_singlemode_report(
    g: f64,
    eta_s: f64,
    eta_i: f64,
    r: f64,
    out: *mut *mut FopaReport,
) -> FopaStatus {
    deliver(out, sm_report(g, eta_s, eta_i, r))
}

/// Factorable-JSF report at gain coefficient `gc` and squared mode overlap
/// `f2`.
#[no_mangle]
pub extern "C" fn fopa_factorable_report(
    gc: f64,
    f2: f64,
    r: f64,
    out: *mut *mut FopaReport,
) -> FopaStatus {
    let run = || {
        if !(f2 >= 0.0 && f2 <= 1.0) {
            return Err(FopaError::InvalidArgument(format!(
                "f2 must be in [0, 1], got {f2}"
            )));
        }
        let f = C64::new(f2.sqrt(), 0.0);
        let h = fac_hterms(gc, f)?;
        let (i_s, i_i) = fac_photon_numbers(gc, f, 1.0)?;
        build_report(h, i_s, i_i, i_s, r)
    };
    deliver(out, run())
}

/// Broadband-JSF analytic-series report.
#[no_mangle]
pub extern "C" fn fopa_broadband_report(
    gp: f64,
    p: f64,
    s: f64,
    eta_s: f64,
    eta_i: f64,
    r: f64,
    n_trunc: usize,
    out: *mut *mut FopaReport,
) -> FopaStatus {
    let run = || {
        let params = BroadbandParams::new(gp, p, s, eta_s, eta_i, r)?.with_n_trunc(n_trunc)?;
        bb_filtered_report(&params)
    };
    deliver(out, run())
}

/// Grid Green-function engine report (numerical cross-check).
#[no_mangle]
pub extern "C" fn fopa_engine_report(
    gp: f64,
    p: f64,
    s: f64,
    eta_s: f64,
    eta_i: f64,
    r: f64,
    n_points: usize,
    n_trunc: usize,
    out: *mut *mut FopaReport,
) -> FopaStatus {
    deliver(
        out,
        broadband_engine_report(gp, p, s, eta_s, eta_i, r, n_points, n_trunc),
    )
}

/// Solve G' for a target photon-number gain at bandwidth ratio `p`.
#[no_mangle]
pub extern "C" fn fopa_gp_for_gain(
    g_target: f64,
    p: f64,
    n_trunc: usize,
    gp_max: f64,
    out: *mut f64,
) -> FopaStatus {
    if out.is_null() {
        return FopaStatus::NullPointer;
    }
    match gp_for_gain(g_target, p, n_trunc, gp_max) {
        Ok(gp) => {
            unsafe { *out = gp };
            FopaStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Scalar fields readable from a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FopaField {
    Gain = 0,
    PhotonNumberSignal = 1,
    PhotonNumberIdler = 2,
    NoiseSignal = 3,
    NoiseIdler = 4,
    NoiseFigure = 5,
    RatioUsed = 6,
    IntensityDifferenceNoise = 7,
    RatioOpt = 8,
    IntensityDifferenceNoiseAtOpt = 9,
}

/// Read one scalar field; `RatioOpt` and `IntensityDifferenceNoiseAtOpt`
/// return `UndefinedOptimum` when no optimum exists.
#[no_mangle]
pub extern "C" fn fopa_report_get(
    report: *const FopaReport,
    field: FopaField,
    out: *mut f64,
) -> FopaStatus {
    if report.is_null() || out.is_null() {
        return FopaStatus::NullPointer;
    }
    let r = unsafe { &(*report).inner };
    let value = match field {
        FopaField::Gain => r.g,
        FopaField::PhotonNumberSignal => r.i_s,
        FopaField::PhotonNumberIdler => r.i_i,
        FopaField::NoiseSignal => r.r_s,
        FopaField::NoiseIdler => r.r_i,
        FopaField::NoiseFigure => r.nf,
        FopaField::RatioUsed => r.r_used,
        FopaField::IntensityDifferenceNoise => r.rt_at_r,
        FopaField::RatioOpt => match r.r_opt {
            Some(v) => v,
            None => return FopaStatus::UndefinedOptimum,
        },
        FopaField::IntensityDifferenceNoiseAtOpt => match r.rt_at_ropt {
            Some(v) => v,
            None => return FopaStatus::UndefinedOptimum,
        },
    };
    unsafe { *out = value };
    FopaStatus::Ok
}

/// Release a report handle. Passing null is a no-op.
#[no_mangle]
pub extern "C" fn fopa_report_free(report: *mut FopaReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Static description of a status code; never null.
#[no_mangle]
pub extern "C" fn fopa_status_message(status: FopaStatus) -> *const c_char {
    let msg: &'static [u8] = match status {
        FopaStatus::Ok => b"ok\0",
        FopaStatus::InvalidArgument => b"invalid argument\0",
        FopaStatus::GridCoverage => b"frequency grid does not cover the spectrum\0",
        FopaStatus::GridMismatch => b"mismatched frequency grids\0",
        FopaStatus::TruncationInsufficient => b"series truncation order insufficient\0",
        FopaStatus::UndefinedOptimum => b"optimum undefined at this point\0",
        FopaStatus::NumericalInstability => b"numerical instability\0",
        FopaStatus::NullPointer => b"null pointer\0",
    };
    msg.as_ptr() as *const c_char
}

#[cfg(test)]
mod tests {
    use super::*;

    fn get(report: *const FopaReport, field: FopaField) -> f64 {
        let mut v = f64::NAN;
        assert_eq!(fopa_report_get(report, field, &mut v), FopaStatus::Ok);
        v
    }

    #[test]
    fn singlemode_roundtrip() {
        let mut report = std::ptr::null_mut();
        assert_eq!(
            fopa_singlemode_report(4.0, 1.0, 1.0, 1.0, &mut report),
            FopaStatus::Ok
        );
        assert!((get(report, FopaField::Gain) - 4.0).abs() < 1e-15);
        assert!((get(report, FopaField::NoiseSignal) - 7.0).abs() < 1e-13);
        assert!((get(report, FopaField::IntensityDifferenceNoise) - 1.0 / 7.0).abs() < 1e-14);
        fopa_report_free(report);
    }

    #[test]
    fn broadband_matches_engine() {
        let mut a = std::ptr::null_mut();
        let mut b = std::ptr::null_mut();
        assert_eq!(
            fopa_broadband_report(1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 12, &mut a),
            FopaStatus::Ok
        );
        assert_eq!(
            fopa_engine_report(1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 129, 12, &mut b),
            FopaStatus::Ok
        );
        let ga = get(a, FopaField::Gain);
        let gb = get(b, FopaField::Gain);
        assert!((ga - gb).abs() < 1e-6 * ga);
        fopa_report_free(a);
        fopa_report_free(b);
    }

    #[test]
    fn error_paths() {
        let mut report = std::ptr::null_mut();
        assert_eq!(
            fopa_singlemode_report(0.5, 1.0, 1.0, 1.0, &mut report),
            FopaStatus::InvalidArgument
        );
        assert!(report.is_null());
        assert_eq!(
            fopa_broadband_report(4.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2, &mut report),
            FopaStatus::TruncationInsufficient
        );
        let mut v = 0.0;
        assert_eq!(
            fopa_report_get(std::ptr::null(), FopaField::Gain, &mut v),
            FopaStatus::NullPointer
        );
        // Unit gain: no idler, no optimum.
        assert_eq!(
            fopa_singlemode_report(1.0, 1.0, 1.0, 1.0, &mut report),
            FopaStatus::Ok
        );
        assert_eq!(
            fopa_report_get(report, FopaField::RatioOpt, &mut v),
            FopaStatus::UndefinedOptimum
        );
        fopa_report_free(report);
        fopa_report_free(std::ptr::null_mut());
        assert!(!fopa_status_message(FopaStatus::GridCoverage).is_null());
    }
}
