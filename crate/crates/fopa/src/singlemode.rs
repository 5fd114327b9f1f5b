//! Single-frequency-mode closed forms.
//!
//! With one signal and one idler mode the Bogoliubov transform has
//! coefficients `mu` and `nu` with `mu^2 - nu^2 = 1`, and the photon-number
//! gain is `g = mu^2`. Every observable reduces to a rational function of
//! `g` and the detection efficiencies.

use crate::error::{FopaError, Result};
use crate::metrics::{build_report, HTerms, NoiseReport};

fn check_gain(g: f64) -> Result<()> {
    if !(g >= 1.0) {
        return Err(FopaError::invalid(format!("gain must be >= 1, got {g}")));
    }
    Ok(())
}

fn check_eta(name: &str, eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(FopaError::invalid(format!(
            "{name} must be in (0, 1], got {eta}"
        )));
    }
    Ok(())
}

/// Normalized individual intensity noise of either twin beam at ideal
/// detection: `R_s = R_i = 2g - 1`.
pub fn sm_individual_noise(g: f64) -> Result<f64> {
    check_gain(g)?;
    Ok(2.0 * g - 1.0)
}

/// Noise figure of the amplified signal at ideal detection:
/// `NF = (2g - 1)/g`.
pub fn sm_noise_figure(g: f64) -> Result<f64> {
    check_gain(g)?;
    Ok((2.0 * g - 1.0) / g)
}

/// Normalized intensity-difference noise at detection ratio `r` with
/// efficiencies `eta_s`, `eta_i`.
pub fn sm_rt(g: f64, eta_s: f64, eta_i: f64, r: f64) -> Result<f64> {
    check_gain(g)?;
    check_eta("eta_s", eta_s)?;
    check_eta("eta_i", eta_i)?;
    if !(r >= 0.0) {
        return Err(FopaError::invalid(format!("r must be >= 0, got {r}")));
    }
    let mu2 = g;
    let nu2 = g - 1.0;
    let num = eta_i * (2.0 * eta_i * nu2 * nu2 + nu2) * r * r
        - 4.0 * eta_s * eta_i * mu2 * nu2 * r
        + 2.0 * eta_s * eta_s * mu2 * nu2
        + eta_s * mu2;
    let den = eta_s * mu2 + eta_i * nu2 * r * r;
    Ok(num / den)
}

/// Detection ratio minimizing [`sm_rt`] over `r`.
pub fn sm_ropt(g: f64, eta_s: f64, eta_i: f64) -> Result<f64> {
    check_gain(g)?;
    check_eta("eta_s", eta_s)?;
    check_eta("eta_i", eta_i)?;
    if g == 1.0 {
        return Err(FopaError::UndefinedOptimum(
            "no idler at unit gain, detection ratio is arbitrary".into(),
        ));
    }
    let root =
        ((4.0 * eta_s * eta_i * g + (eta_s - eta_i).powi(2) * (g - 1.0)) / (g - 1.0)).sqrt();
    Ok(0.5 * (eta_s / eta_i - 1.0) + root / (2.0 * eta_i))
}

/// Exact single-mode variance/covariance terms.
pub fn sm_hterms(g: f64, eta_s: f64, eta_i: f64) -> Result<HTerms> {
    check_gain(g)?;
    check_eta("eta_s", eta_s)?;
    check_eta("eta_i", eta_i)?;
    let mu2 = g;
    let nu2 = g - 1.0;
    Ok(HTerms {
        hs1: 2.0 * eta_s * eta_s * mu2 * nu2,
        hs2: 0.0,
        hi1: 2.0 * eta_i * eta_i * nu2 * nu2,
        hi2: 0.0,
        hvs: eta_s * mu2,
        hvi: eta_i * nu2,
        hsi1: eta_s * eta_i * mu2 * nu2,
        hsi2: eta_s * eta_i * mu2 * nu2,
    })
}

/// Full single-mode report at detection ratio `r`.
pub fn sm_report(g: f64, eta_s: f64, eta_i: f64, r: f64) -> Result<NoiseReport> {
    let h = sm_hterms(g, eta_s, eta_i)?;
    build_report(h, eta_s * g, eta_i * (g - 1.0), g, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ropt_general, rt_at};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_gain_is_noiseless() {
        assert_abs_diff_eq!(sm_individual_noise(1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(sm_noise_figure(1.0).unwrap(), 1.0);
    }

    #[test]
    fn high_gain_noise_figure_approaches_two() {
        assert_abs_diff_eq!(sm_noise_figure(1e9).unwrap(), 2.0, epsilon = 1e-8);
        assert!(sm_noise_figure(1e9).unwrap() < 2.0);
    }

    #[test]
    fn ideal_balanced_detection() {
        for g in [1.5, 3.0, 10.0, 100.0] {
            // r = 1, eta = 1: R_t = 1/(2g - 1).
            assert_abs_diff_eq!(
                sm_rt(g, 1.0, 1.0, 1.0).unwrap(),
                1.0 / (2.0 * g - 1.0),
                epsilon = 1e-14
            );
            // r = r_opt, eta = 1: R_t = 1/(mu + nu)^2.
            let r = sm_ropt(g, 1.0, 1.0).unwrap();
            let floor = 1.0 / (g.sqrt() + (g - 1.0).sqrt()).powi(2);
            assert_abs_diff_eq!(sm_rt(g, 1.0, 1.0, r).unwrap(), floor, epsilon = 1e-14);
        }
    }

    #[test]
    fn ropt_matches_general_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let g = rng.random_range(1.01..100.0);
            let es = rng.random_range(0.2..1.0);
            let ei = rng.random_range(0.2..1.0);
            let h = sm_hterms(g, es, ei).unwrap();
            let r_sm = sm_ropt(g, es, ei).unwrap();
            let r_gen = ropt_general(&h, es * g, ei * (g - 1.0)).unwrap();
            assert_abs_diff_eq!(r_sm, r_gen, epsilon = 1e-10 * r_sm);
            // And it really minimizes the rational form.
            let rt_opt = sm_rt(g, es, ei, r_sm).unwrap();
            for dr in [-1e-4, 1e-4] {
                assert!(sm_rt(g, es, ei, r_sm * (1.0 + dr)).unwrap() >= rt_opt);
            }
        }
    }

    #[test]
    fn hterms_reproduce_rational_rt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let g = rng.random_range(1.0..50.0);
            let es = rng.random_range(0.2..1.0);
            let ei = rng.random_range(0.2..1.0);
            let r = rng.random_range(0.1..10.0);
            let h = sm_hterms(g, es, ei).unwrap();
            assert_abs_diff_eq!(
                rt_at(&h, es * g, ei * (g - 1.0), r),
                sm_rt(g, es, ei, r).unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn report_matches_closed_forms() {
        let report = sm_report(4.0, 1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(report.g, 4.0);
        assert_abs_diff_eq!(report.i_i, 3.0);
        assert_abs_diff_eq!(report.r_s, 7.0, epsilon = 1e-14);
        assert_abs_diff_eq!(report.r_i, 7.0, epsilon = 1e-13);
        assert_abs_diff_eq!(report.nf, 7.0 / 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(report.rt_at_r, 1.0 / 7.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(sm_individual_noise(0.5).is_err());
        assert!(sm_rt(2.0, 0.0, 1.0, 1.0).is_err());
        assert!(sm_rt(2.0, 1.0, 1.1, 1.0).is_err());
        assert!(sm_ropt(1.0, 1.0, 1.0).is_err());
    }
}
