//! Randomized invariants across the closed-form regimes.

use fopa::broadband::{bb_filtered_report, bb_photon_numbers, BroadbandParams};
use fopa::factorable::{fac_noise, fac_photon_numbers};
use fopa::metrics::rt_at;
use fopa::singlemode::{sm_hterms, sm_ropt, sm_rt};
use fopa::C64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_mode_ropt_is_global_minimum(
        g in 1.01f64..100.0,
        es in 0.2f64..1.0,
        ei in 0.2f64..1.0,
        r in 0.05f64..20.0,
    ) {
        let r_opt = sm_ropt(g, es, ei).unwrap();
        let floor = sm_rt(g, es, ei, r_opt).unwrap();
        prop_assert!(sm_rt(g, es, ei, r).unwrap() >= floor - 1e-12);
        // The quadratic form never goes negative (physical variance).
        let h = sm_hterms(g, es, ei).unwrap();
        prop_assert!(rt_at(&h, es * g, ei * (g - 1.0), r) >= 0.0);
    }

    #[test]
    fn single_mode_noise_reduction_below_shot_noise(g in 1.0f64..200.0) {
        // Balanced ideal detection always beats the SNL: R_t = 1/(2g - 1).
        let rt = sm_rt(g, 1.0, 1.0, 1.0).unwrap();
        prop_assert!(rt <= 1.0 + 1e-15);
        prop_assert!((rt - 1.0 / (2.0 * g - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn factorable_conserves_photon_number(gc in 0.0f64..3.0, f2 in 0.01f64..1.0) {
        let f = C64::new(f2.sqrt(), 0.0);
        let (i_s, i_i) = fac_photon_numbers(gc, f, 1.0).unwrap();
        // Twin-beam conservation: every idler photon pairs a signal photon.
        prop_assert!((i_s - 1.0 - i_i).abs() < 1e-12 * i_s);
        let n = fac_noise(gc, f).unwrap();
        prop_assert!(n.rt1 > 0.0 && n.rt1 <= 1.0 + 1e-15);
        prop_assert!((n.rt1 - 1.0 / (2.0 * i_i + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn broadband_series_invariants(gp in 0.1f64..2.2, p in 0.0f64..2.0) {
        let (g, i_i) = bb_photon_numbers(gp, p, 12).unwrap();
        prop_assert!(g >= 1.0);
        prop_assert!((g - 1.0 - i_i).abs() < 1e-9 * g);
        let params = BroadbandParams::new(gp, p, 0.0, 1.0, 1.0, 1.0)
            .unwrap()
            .with_n_trunc(12)
            .unwrap();
        let report = bb_filtered_report(&params).unwrap();
        // Unfiltered ideal detection: R_t = 1/(2g - 1) independent of p.
        prop_assert!((report.rt_at_r - 1.0 / (2.0 * g - 1.0)).abs() < 1e-9);
        prop_assert!(report.r_s >= 1.0 - 1e-12);
        if let Some(ropt) = report.r_opt {
            prop_assert!(ropt >= 1.0 - 1e-9);
            prop_assert!(ropt <= report.i_s / report.i_i + 1e-9);
        }
    }

    #[test]
    fn filtered_noise_never_drops_below_optimum(
        gp in 0.3f64..2.0,
        p in 0.1f64..2.0,
        s in 0.0f64..3.0,
    ) {
        let params = BroadbandParams::new(gp, p, s, 1.0, 1.0, 1.0)
            .unwrap()
            .with_n_trunc(12)
            .unwrap();
        let report = bb_filtered_report(&params).unwrap();
        let h = report.hterms;
        let rt_opt = report.rt_at_ropt.unwrap_or(report.rt_at_r);
        for k in 0..20 {
            let r = 0.2 + 0.2 * k as f64;
            prop_assert!(rt_at(&h, report.i_s, report.i_i, r) >= rt_opt - 1e-12);
        }
    }
}
