//! Shared observable containers and the final noise assembly.
//!
//! Every regime (single-mode, factorable, broadband series, grid engine)
//! produces the same building blocks: detected photon numbers `i_s`, `i_i`
//! per input photon and the variance/covariance terms [`HTerms`]. This module
//! turns those into the reported quantities and houses the general optimal
//! detection ratio and the excess-input-noise adjustment.

use crate::error::{FopaError, Result};
use crate::minimize::golden_section_minimize_log;

/// Variance/covariance building blocks of the intensity noises, all per unit
/// input photon number.
///
/// `hs1 + hs2 + hvs` is the signal intensity variance, `hi1 + hi2 + hvi` the
/// idler one, and `hsi1 + hsi2` the twin-beam correlation that is subtracted
/// in the intensity-difference noise. `hvs`/`hvi` are the loss-induced vacuum
/// contributions; they vanish for ideal detection (`eta = 1`, flat filters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HTerms {
    pub hs1: f64,
    pub hs2: f64,
    pub hi1: f64,
    pub hi2: f64,
    pub hvs: f64,
    pub hvi: f64,
    pub hsi1: f64,
    pub hsi2: f64,
}

impl HTerms {
    /// Signal intensity variance per input photon.
    pub fn var_s(&self) -> f64 {
        self.hs1 + self.hs2 + self.hvs
    }

    /// Idler intensity variance per input photon.
    pub fn var_i(&self) -> f64 {
        self.hi1 + self.hi2 + self.hvi
    }

    /// Twin-beam correlation per input photon.
    pub fn correlation(&self) -> f64 {
        self.hsi1 + self.hsi2
    }
}

/// All observables for one parameter point.
///
/// Photon numbers are per unit input photon number: `i_s` is the detected
/// signal gain (equal to the photon-number gain `g` when detection is ideal
/// and unfiltered) and `i_i` the detected idler number per input photon.
#[derive(Debug, Clone, Copy)]
pub struct NoiseReport {
    pub g: f64,
    pub i_s: f64,
    pub i_i: f64,
    pub r_s: f64,
    pub r_i: f64,
    pub nf: f64,
    pub r_used: f64,
    pub rt_at_r: f64,
    pub r_opt: Option<f64>,
    pub rt_at_ropt: Option<f64>,
    pub hterms: HTerms,
}

/// Excess intensity noise of the input laser, modeled as a classical mixture
/// of coherent states. `v_ex` is the photon-number variance of the mixture,
/// `Var(|alpha'|^2)`, and `i0_mean` its mean photon number.
#[derive(Debug, Clone, Copy)]
pub struct ExcessNoise {
    pub v_ex: f64,
    pub i0_mean: f64,
}

impl ExcessNoise {
    pub fn new(v_ex: f64, i0_mean: f64) -> Result<Self> {
        if !(v_ex >= 0.0) {
            return Err(FopaError::invalid(format!("v_ex must be >= 0, got {v_ex}")));
        }
        if !(i0_mean > 0.0) {
            return Err(FopaError::invalid(format!(
                "i0_mean must be > 0, got {i0_mean}"
            )));
        }
        Ok(Self { v_ex, i0_mean })
    }

    /// Construct from a relative intensity noise factor `rin`, defined as
    /// `Var(I0)/I0_mean^2`.
    pub fn from_relative_intensity_noise(rin: f64, i0_mean: f64) -> Result<Self> {
        if !(rin >= 0.0) {
            return Err(FopaError::invalid(format!("rin must be >= 0, got {rin}")));
        }
        Self::new(rin * i0_mean * i0_mean, i0_mean)
    }
}

/// Normalized intensity-difference noise at detection ratio `r`.
pub fn rt_at(h: &HTerms, i_s: f64, i_i: f64, r: f64) -> f64 {
    (h.var_s() + r * r * h.var_i() - 2.0 * r * h.correlation()) / (i_s + r * r * i_i)
}

/// Closed-form optimal detection ratio minimizing [`rt_at`] over `r`.
pub fn ropt_general(h: &HTerms, i_s: f64, i_i: f64) -> Result<f64> {
    let a = h.correlation();
    if !(a > 0.0) || !(i_i > 0.0) {
        return Err(FopaError::UndefinedOptimum(
            "optimal ratio needs positive twin-beam correlation and idler flux".into(),
        ));
    }
    let hs = h.var_s();
    let hi = h.var_i();
    let disc = (4.0 * i_s * i_i * a * a + (i_s * hi - i_i * hs).powi(2)).sqrt();
    Ok((disc + (i_i * hs - i_s * hi)) / (2.0 * i_i * a))
}

/// Numerical fallback/cross-check for [`ropt_general`]: golden-section search
/// of [`rt_at`] over `r` in `[1e-3, 1e3]` on a log scale.
pub fn ropt_numeric(h: &HTerms, i_s: f64, i_i: f64) -> f64 {
    let (r, _) = golden_section_minimize_log(|r| rt_at(h, i_s, i_i, r), 1e-3, 1e3, 400);
    r
}

/// Assemble the full report from H terms and detected photon numbers.
pub fn build_report(h: HTerms, i_s: f64, i_i: f64, g: f64, r_used: f64) -> Result<NoiseReport> {
    if !(i_s > 0.0) {
        return Err(FopaError::NumericalInstability(format!(
            "non-positive detected signal flux {i_s}"
        )));
    }
    let var_s = h.var_s();
    let var_i = h.var_i();
    if var_s < 0.0 || var_i < 0.0 {
        return Err(FopaError::NumericalInstability(format!(
            "negative intensity variance (var_s = {var_s:.3e}, var_i = {var_i:.3e})"
        )));
    }
    let r_s = var_s / i_s;
    let r_i = if i_i > 0.0 { var_i / i_i } else { f64::NAN };
    let nf = var_s / (i_s * i_s);
    let rt_at_r = rt_at(&h, i_s, i_i, r_used);
    let (r_opt, rt_at_ropt) = match ropt_general(&h, i_s, i_i) {
        Ok(r) => (Some(r), Some(rt_at(&h, i_s, i_i, r))),
        Err(_) => (None, None),
    };
    Ok(NoiseReport {
        g,
        i_s,
        i_i,
        r_s,
        r_i,
        nf,
        r_used,
        rt_at_r,
        r_opt,
        rt_at_ropt,
        hterms: h,
    })
}

/// Fold the excess input noise into an existing report.
///
/// The added terms are `i_j * V_ex / I0` on `R_j` and
/// `(i_s - r*i_i)^2 / (i_s + r^2*i_i) * V_ex / I0` on `R_t` (photon numbers
/// per input photon; equivalently the detected means normalized by the
/// squared mean input). The penalty vanishes identically at
/// `r = i_s / i_i`. `r_opt` itself is left as the coherent-state optimum;
/// the penalty is evaluated at that same ratio.
pub fn apply_excess_noise(report: &NoiseReport, ex: &ExcessNoise) -> Result<NoiseReport> {
    if !(ex.v_ex >= 0.0) {
        return Err(FopaError::invalid("negative excess-noise variance"));
    }
    let scale = ex.v_ex / ex.i0_mean;
    let penalty = |r: f64| {
        let d = report.i_s - r * report.i_i;
        d * d / (report.i_s + r * r * report.i_i) * scale
    };
    let mut out = *report;
    out.r_s += report.i_s * scale;
    out.r_i += report.i_i * scale;
    out.rt_at_r += penalty(report.r_used);
    if let (Some(r), Some(rt)) = (report.r_opt, report.rt_at_ropt) {
        out.rt_at_ropt = Some(rt + penalty(r));
    }
    Ok(out)
}

/// Power ratio in decibels.
pub fn to_db(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(FopaError::invalid(format!("dB of non-positive value {x}")));
    }
    Ok(10.0 * x.log10())
}

/// Fixed CSV schema shared by every sweep output.
pub const CSV_HEADER: &str =
    "G',p,s,eta_s,eta_i,r,g,I_i,R_s,R_i,NF,NF_dB,R_t,R_t_dB,r_opt,R_t_opt,R_t_opt_dB";

fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// One CSV row in the fixed column order, full double precision.
pub fn csv_row(gp: f64, p: f64, s: f64, eta_s: f64, eta_i: f64, report: &NoiseReport) -> String {
    let db = |x: f64| to_db(x).map(fmt17).unwrap_or_else(|_| "nan".into());
    let cols = [
        fmt17(gp),
        fmt17(p),
        fmt17(s),
        fmt17(eta_s),
        fmt17(eta_i),
        fmt17(report.r_used),
        fmt17(report.g),
        fmt17(report.i_i),
        fmt17(report.r_s),
        fmt17(report.r_i),
        fmt17(report.nf),
        db(report.nf),
        fmt17(report.rt_at_r),
        db(report.rt_at_r),
        fmt17(report.r_opt.unwrap_or(f64::NAN)),
        fmt17(report.rt_at_ropt.unwrap_or(f64::NAN)),
        report
            .rt_at_ropt
            .map(db)
            .unwrap_or_else(|| "nan".into()),
    ];
    cols.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_valid_hterms(rng: &mut impl Rng) -> (HTerms, f64, f64) {
        // Single-mode-shaped terms scaled by random efficiencies stay
        // physically realizable (positive-definite quadratic form in r).
        let g: f64 = rng.random_range(1.05..50.0);
        let es: f64 = rng.random_range(0.2..1.0);
        let ei: f64 = rng.random_range(0.2..1.0);
        let mu2 = g;
        let nu2 = g - 1.0;
        let h = HTerms {
            hs1: es * es * (2.0 * mu2 * nu2),
            hs2: 0.0,
            hvs: es * mu2,
            hi1: ei * ei * (2.0 * nu2 * nu2),
            hi2: 0.0,
            hvi: ei * nu2,
            hsi1: es * ei * mu2 * nu2,
            hsi2: es * ei * mu2 * nu2,
        };
        (h, es * mu2, ei * nu2)
    }

    #[test]
    fn closed_form_ropt_matches_golden_section() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (h, is, ii) = random_valid_hterms(&mut rng);
            let r_cf = ropt_general(&h, is, ii).unwrap();
            let r_gs = ropt_numeric(&h, is, ii);
            assert_abs_diff_eq!(r_cf, r_gs, epsilon = 1e-8 * r_cf.max(1.0));
        }
    }

    #[test]
    fn ropt_is_a_minimum_over_log_spaced_ratios() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (h, is, ii) = random_valid_hterms(&mut rng);
            let r_opt = ropt_general(&h, is, ii).unwrap();
            let rt_opt = rt_at(&h, is, ii, r_opt);
            for k in 0..50 {
                let r = 1e-3 * 10f64.powf(6.0 * k as f64 / 49.0);
                assert!(rt_opt <= rt_at(&h, is, ii, r) + 1e-12);
            }
        }
    }

    #[test]
    fn excess_noise_cancels_at_photon_number_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let (h, is, ii) = random_valid_hterms(&mut rng);
            let mut report = build_report(h, is, ii, is, is / ii).unwrap();
            report.r_used = is / ii;
            report.rt_at_r = rt_at(&h, is, ii, report.r_used);
            let ex = ExcessNoise::new(rng.random_range(0.0..100.0), 1e6).unwrap();
            let adjusted = apply_excess_noise(&report, &ex).unwrap();
            assert!((adjusted.rt_at_r - report.rt_at_r).abs() < 1e-14);
        }
    }

    #[test]
    fn excess_noise_penalty_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let (h, is, ii) = random_valid_hterms(&mut rng);
            let r = rng.random_range(0.1..10.0);
            let report = build_report(h, is, ii, is, r).unwrap();
            let ex = ExcessNoise::new(rng.random_range(0.0..10.0), 1e5).unwrap();
            let adjusted = apply_excess_noise(&report, &ex).unwrap();
            assert!(adjusted.rt_at_r >= report.rt_at_r - 1e-15);
            assert!(adjusted.r_s >= report.r_s);
            assert!(adjusted.r_i >= report.r_i);
        }
    }

    #[test]
    fn db_conversion() {
        assert_abs_diff_eq!(to_db(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(to_db(2.0).unwrap(), 3.0102999566398120, epsilon = 1e-12);
        assert_abs_diff_eq!(to_db(0.5).unwrap(), -3.0102999566398120, epsilon = 1e-12);
        assert!(to_db(0.0).is_err());
        assert!(to_db(-1.0).is_err());
    }

    #[test]
    fn csv_row_has_fixed_width() {
        let (h, is, ii) = random_valid_hterms(&mut ChaCha8Rng::seed_from_u64(1));
        let report = build_report(h, is, ii, is, 1.0).unwrap();
        let row = csv_row(1.0, 0.5, 0.0, 1.0, 1.0, &report);
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
    }
}
