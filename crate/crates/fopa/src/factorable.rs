//! Closed forms for a spectrally factorable (rank-1) joint spectral kernel.
//!
//! With `psi = phi_s (x) phi_i` the multimode transform collapses onto a
//! single Schmidt mode, and every observable depends on the gain coefficient
//! `G` and one complex overlap `F` between the injected signal spectrum and
//! the amplified mode `phi_s`. At `|F| = 1` the single-mode results are
//! recovered exactly with `g = cosh^2 G`.

use crate::engine::GreenFunctions;
use crate::error::{FopaError, Result};
use crate::metrics::HTerms;
use crate::spectral::SignalSpectrum;
use crate::C64;
use nalgebra::DMatrix;

fn check_g(g: f64) -> Result<()> {
    if !(g >= 0.0) {
        return Err(FopaError::invalid(format!(
            "gain coefficient must be >= 0, got {g}"
        )));
    }
    Ok(())
}

fn check_f(f: C64) -> Result<()> {
    if f.norm() > 1.0 + 1e-12 {
        return Err(FopaError::invalid(format!(
            "|F| must be <= 1, got {}",
            f.norm()
        )));
    }
    Ok(())
}

/// Photon numbers of the amplified signal and generated idler:
/// `I_s = (1 + |F sinh G|^2) I_in`, `I_i = |F sinh G|^2 I_in`.
pub fn fac_photon_numbers(g: f64, f: C64, i_in: f64) -> Result<(f64, f64)> {
    check_g(g)?;
    check_f(f)?;
    if !(i_in > 0.0) {
        return Err(FopaError::invalid(format!("I_in must be > 0, got {i_in}")));
    }
    let fs2 = f.norm_sqr() * g.sinh().powi(2);
    Ok(((1.0 + fs2) * i_in, fs2 * i_in))
}

/// Variance/covariance terms per unit input photon, ideal detection.
pub fn fac_hterms(g: f64, f: C64) -> Result<HTerms> {
    check_g(g)?;
    check_f(f)?;
    let f2 = f.norm_sqr();
    let c = g.cosh();
    let s = g.sinh();
    let sc2 = f2 * (s * c).powi(2);
    Ok(HTerms {
        hs1: 1.0 + f2 * (c.powi(4) - 1.0),
        hs2: sc2,
        hi1: f2 * s.powi(4),
        hi2: sc2,
        hvs: 0.0,
        hvi: 0.0,
        hsi1: sc2,
        hsi2: sc2,
    })
}

/// Closed-form noise quantities at ideal detection, `r = 1`.
#[derive(Debug, Clone, Copy)]
pub struct FacNoise {
    pub r_s: f64,
    /// `sinh^2 G + cosh^2 G`, independent of `F`.
    pub r_i: f64,
    /// `None` when `F = 0` (no amplification, the noise figure of the
    /// amplified mode is undefined).
    pub nf: Option<f64>,
    /// `R_t` at `r = 1`: `1 / (2 |F sinh G|^2 + 1)`, exact.
    pub rt1: f64,
}

pub fn fac_noise(g: f64, f: C64) -> Result<FacNoise> {
    let h = fac_hterms(g, f)?;
    let f2 = f.norm_sqr();
    let s2 = g.sinh().powi(2);
    let i_s = 1.0 + f2 * s2;
    let hs = h.hs1 + h.hs2;
    Ok(FacNoise {
        r_s: hs / i_s,
        r_i: s2 + g.cosh().powi(2),
        nf: if f2 > 0.0 { Some(hs / (i_s * i_s)) } else { None },
        rt1: 1.0 / (2.0 * f2 * s2 + 1.0),
    })
}

/// Noise figure, erroring at `F = 0`. Approaches `2/|F|^2` at high gain.
pub fn fac_nf(g: f64, f: C64) -> Result<f64> {
    fac_noise(g, f)?
        .nf
        .ok_or_else(|| FopaError::UndefinedOptimum("noise figure undefined at F = 0".into()))
}

/// Exact Green functions of the rank-1 kernel:
/// `h1s = delta + (cosh G - 1) phi_s phi_s^*`, `h2s = sinh G phi_s phi_i`,
/// and the idler counterparts. Physical (delta = `1/step`) convention.
pub fn fac_green(
    g: f64,
    phi_s: &SignalSpectrum,
    phi_i: &SignalSpectrum,
) -> Result<GreenFunctions> {
    check_g(g)?;
    let c1 = g.cosh() - 1.0;
    let sh = g.sinh();
    let n_s = phi_s.grid.n_points;
    let n_i = phi_i.grid.n_points;
    let inv_ss = 1.0 / phi_s.grid.step();
    let inv_si = 1.0 / phi_i.grid.step();
    let h1s = DMatrix::from_fn(n_s, n_s, |r, c| {
        let delta = if r == c { C64::new(inv_ss, 0.0) } else { C64::new(0.0, 0.0) };
        delta + phi_s.values[r] * phi_s.values[c].conj() * c1
    });
    let h1i = DMatrix::from_fn(n_i, n_i, |r, c| {
        let delta = if r == c { C64::new(inv_si, 0.0) } else { C64::new(0.0, 0.0) };
        delta + phi_i.values[r] * phi_i.values[c].conj() * c1
    });
    let h2s = DMatrix::from_fn(n_s, n_i, |r, c| phi_s.values[r] * phi_i.values[c] * sh);
    let h2i = DMatrix::from_fn(n_i, n_s, |r, c| phi_i.values[r] * phi_s.values[c] * sh);
    Ok(GreenFunctions {
        h1s,
        h2s,
        h1i,
        h2i,
        grid_s: phi_s.grid.clone(),
        grid_i: phi_i.grid.clone(),
        g,
        n_trunc: 0,
    })
}

/// Power spectra of the amplified signal and generated idler per unit input
/// photon: `S_s = |s(w) + (cosh G - 1) F phi_s(w)|^2`,
/// `S_i = |F|^2 sinh^2 G |phi_i(w)|^2`.
pub fn fac_spectra(
    g: f64,
    f: C64,
    s: &SignalSpectrum,
    phi_s: &SignalSpectrum,
    phi_i: &SignalSpectrum,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_g(g)?;
    check_f(f)?;
    if s.grid != phi_s.grid {
        return Err(FopaError::GridMismatch(
            "signal and phi_s must share a grid".into(),
        ));
    }
    let c1 = g.cosh() - 1.0;
    let s2 = f.norm_sqr() * g.sinh().powi(2);
    let s_s = s
        .values
        .iter()
        .zip(&phi_s.values)
        .map(|(sv, pv)| (sv + pv * f * c1).norm_sqr())
        .collect();
    let s_i = phi_i.values.iter().map(|pv| s2 * pv.norm_sqr()).collect();
    Ok((s_s, s_i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{observables, unitarity_residuals, DetectionChain};
    use crate::metrics::{build_report, rt_at};
    use crate::singlemode::{sm_individual_noise, sm_noise_figure, sm_rt};
    use crate::spectral::{build_grid, flat_filter, gaussian_signal, overlap_f};
    use approx::assert_abs_diff_eq;

    const ONE: C64 = C64::new(1.0, 0.0);

    #[test]
    fn photon_numbers_closed_forms() {
        let (is, ii) = fac_photon_numbers(0.0, ONE, 1.0).unwrap();
        assert_abs_diff_eq!(is, 1.0);
        assert_abs_diff_eq!(ii, 0.0);
        let (is, _) = fac_photon_numbers(1.0, ONE, 1.0).unwrap();
        assert_abs_diff_eq!(is, 1f64.cosh().powi(2), epsilon = 1e-12);
        let (is, ii) = fac_photon_numbers(3.0, C64::new(0.0, 0.0), 2.5).unwrap();
        assert_abs_diff_eq!(is, 2.5);
        assert_abs_diff_eq!(ii, 0.0);
        // I_s - I_i = I_in exactly.
        let (is, ii) = fac_photon_numbers(2.0, C64::new(0.6, 0.3), 1.7).unwrap();
        assert_abs_diff_eq!(is - ii, 1.7, epsilon = 1e-12);
    }

    #[test]
    fn matches_single_mode_at_full_overlap() {
        for gc in [0.3f64, 1.0, 2.0] {
            let g = gc.cosh().powi(2);
            let n = fac_noise(gc, ONE).unwrap();
            assert_abs_diff_eq!(n.r_s, sm_individual_noise(g).unwrap(), epsilon = 1e-12);
            assert_abs_diff_eq!(n.r_i, sm_individual_noise(g).unwrap(), epsilon = 1e-12);
            assert_abs_diff_eq!(n.nf.unwrap(), sm_noise_figure(g).unwrap(), epsilon = 1e-12);
            assert_abs_diff_eq!(n.rt1, sm_rt(g, 1.0, 1.0, 1.0).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn nf_limits_and_values() {
        // High gain: NF -> 2/|F|^2.
        for f2 in [1.0f64, 0.8, 0.25] {
            let f = C64::new(f2.sqrt(), 0.0);
            let nf = fac_nf(12.0, f).unwrap();
            assert_abs_diff_eq!(nf, 2.0 / f2, epsilon = 1e-6);
        }
        assert!(fac_nf(1.0, C64::new(0.0, 0.0)).is_err());
        // G = 0: coherent pass-through.
        let n = fac_noise(0.0, ONE).unwrap();
        assert_abs_diff_eq!(n.r_s, 1.0);
        assert_abs_diff_eq!(n.r_i, 1.0);
        assert_abs_diff_eq!(n.rt1, 1.0);
    }

    #[test]
    fn only_magnitude_of_f_matters_and_monotonicity() {
        let a = fac_noise(1.5, C64::from_polar(0.7, 1.1)).unwrap();
        let b = fac_noise(1.5, C64::new(0.7, 0.0)).unwrap();
        assert_abs_diff_eq!(a.r_s, b.r_s, epsilon = 1e-14);
        assert_abs_diff_eq!(a.nf.unwrap(), b.nf.unwrap(), epsilon = 1e-14);
        assert_abs_diff_eq!(a.rt1, b.rt1, epsilon = 1e-14);
        // R_t decreases with |F| at any gain; NF does so in the high-gain
        // regime (at low gain NF is non-monotone: it rises from 1 at F = 0
        // before the 2/|F|^2 trend takes over).
        let mut last_nf = f64::INFINITY;
        let mut last_rt = f64::INFINITY;
        for f in [0.3, 0.5, 0.8, 1.0] {
            let n = fac_noise(1.5, C64::new(f, 0.0)).unwrap();
            assert!(n.rt1 < last_rt);
            last_rt = n.rt1;
            let n = fac_noise(12.0, C64::new(f, 0.0)).unwrap();
            assert!(n.nf.unwrap() < last_nf);
            last_nf = n.nf.unwrap();
        }
    }

    #[test]
    fn hterms_assemble_to_closed_forms() {
        let f = C64::new(0.9, 0.2);
        let gc = 1.3;
        let h = fac_hterms(gc, f).unwrap();
        let (is, ii) = fac_photon_numbers(gc, f, 1.0).unwrap();
        let n = fac_noise(gc, f).unwrap();
        let report = build_report(h, is, ii, is, 1.0).unwrap();
        assert_abs_diff_eq!(report.r_s, n.r_s, epsilon = 1e-12);
        assert_abs_diff_eq!(report.r_i, n.r_i, epsilon = 1e-12);
        assert_abs_diff_eq!(report.nf, n.nf.unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(rt_at(&h, is, ii, 1.0), n.rt1, epsilon = 1e-12);
    }

    #[test]
    fn green_functions_pass_engine_checks() {
        let grid = build_grid(0.0, 14.0, 129).unwrap();
        let phi_s = gaussian_signal(&grid, 0.0, 1.0).unwrap();
        let phi_i = gaussian_signal(&grid, 0.0, 0.8).unwrap();
        for gc in [0.0, 1.0, 4.0] {
            let green = fac_green(gc, &phi_s, &phi_i).unwrap();
            let (ra, rb, rc) = unitarity_residuals(&green);
            assert!(ra < 1e-6 && rb < 1e-6 && rc < 1e-6, "{ra} {rb} {rc}");
            // Eq.-level symmetry h2s(ws, wi) = h2i(wi, ws).
            let d = (&green.h2s - green.h2i.transpose())
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max);
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn engine_observables_reproduce_fac_noise() {
        let grid = build_grid(0.0, 20.0, 257).unwrap();
        let phi_s = gaussian_signal(&grid, 0.0, 1.0).unwrap();
        let phi_i = gaussian_signal(&grid, 0.0, 1.0).unwrap();
        // Injected signal broader than the amplified mode: |F| = sqrt(0.8).
        let s = gaussian_signal(&grid, 0.0, 2.0).unwrap();
        let f = overlap_f(&s, &phi_s).unwrap();
        assert_abs_diff_eq!(f.norm_sqr(), 0.8, epsilon = 1e-8);
        let gc = 1.2;
        let green = fac_green(gc, &phi_s, &phi_i).unwrap();
        let chain =
            DetectionChain::new(1.0, 1.0, flat_filter(&grid), flat_filter(&grid), 1.0).unwrap();
        let report = observables(&green, &s, &chain, None).unwrap();
        let n = fac_noise(gc, f).unwrap();
        let (is, ii) = fac_photon_numbers(gc, f, 1.0).unwrap();
        assert_abs_diff_eq!(report.i_s, is, epsilon = 1e-6);
        assert_abs_diff_eq!(report.i_i, ii, epsilon = 1e-6);
        assert_abs_diff_eq!(report.r_s, n.r_s, epsilon = 1e-6);
        assert_abs_diff_eq!(report.r_i, n.r_i, epsilon = 1e-6);
        assert_abs_diff_eq!(report.nf, n.nf.unwrap(), epsilon = 1e-6);
        assert_abs_diff_eq!(report.rt_at_r, n.rt1, epsilon = 1e-6);
    }

    #[test]
    fn spectra_shapes_and_integrals() {
        let grid = build_grid(0.0, 24.0, 513).unwrap();
        let phi_s = gaussian_signal(&grid, 0.0, 1.0).unwrap();
        let phi_i = gaussian_signal(&grid, 0.0, 1.0).unwrap();
        let s = gaussian_signal(&grid, 0.0, 2.0).unwrap();
        let f = overlap_f(&s, &phi_s).unwrap();
        let gc = 1.0;
        let (ss, si) = fac_spectra(gc, f, &s, &phi_s, &phi_i).unwrap();
        let step = grid.step();
        let int_s: f64 = ss.iter().sum::<f64>() * step;
        let int_i: f64 = si.iter().sum::<f64>() * step;
        let (is, ii) = fac_photon_numbers(gc, f, 1.0).unwrap();
        assert_abs_diff_eq!(int_s, is, epsilon = 1e-8);
        assert_abs_diff_eq!(int_i, ii, epsilon = 1e-8);
        // Idler spectrum shape always follows phi_i.
        let peak = si.iter().cloned().fold(0.0, f64::max);
        let pk_phi = phi_i.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        for (a, b) in si.iter().zip(&phi_i.values) {
            assert_abs_diff_eq!(a / peak, b.norm_sqr() / pk_phi, epsilon = 1e-10);
        }
        // F != 1: amplified signal spectrum differs in shape from the input.
        let ratio0 = ss[256] / s.values[256].norm_sqr();
        let k = 300;
        let ratio1 = ss[k] / s.values[k].norm_sqr();
        assert!((ratio0 - ratio1).abs() > 1e-2);
        // G = 0 passthrough.
        let (ss0, si0) = fac_spectra(0.0, f, &s, &phi_s, &phi_i).unwrap();
        for (a, b) in ss0.iter().zip(&s.values) {
            assert_abs_diff_eq!(*a, b.norm_sqr(), epsilon = 1e-14);
        }
        assert!(si0.iter().all(|v| *v == 0.0));
    }
}
