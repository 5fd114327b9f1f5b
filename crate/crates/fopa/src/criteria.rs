//! Acceptance-criteria runner shared by `fopa verify` and the integration
//! test suite. Each criterion reports pass/fail with measured residuals;
//! nothing here relaxes a tolerance to force a pass.

use crate::broadband::{
    bb_filtered_report, conservation_residual, gp_for_gain, BroadbandParams,
};
use crate::engine::{broadband_engine_report, green_from_kernel, schmidt_oracle};
use crate::error::Result;
use crate::factorable::{fac_nf, fac_noise};
use crate::metrics::{apply_excess_noise, ropt_numeric, rt_at, ExcessNoise, NoiseReport};
use crate::singlemode::{sm_individual_noise, sm_noise_figure, sm_rt};
use crate::spectral::{build_grid, build_jsf_broadband};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

fn bb_report(gp: f64, p: f64, s: f64, es: f64, ei: f64, r: f64, n: usize) -> Result<NoiseReport> {
    bb_filtered_report(
        &BroadbandParams::new_extended(gp, p, s, es, ei, r)?.with_n_trunc(n)?,
    )
}

fn outcome(id: usize, name: &'static str, passed: bool, details: String) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name,
        passed,
        details,
    }
}

fn fail_from_err(id: usize, name: &'static str, e: impl std::fmt::Display) -> CriterionOutcome {
    outcome(id, name, false, format!("error: {e}"))
}

/// 1. Twin-beam conservation of the N = 10 series over the full gain range.
pub fn criterion_1() -> CriterionOutcome {
    let name = "conservation |g - i - 1| < 1e-11 at N = 10";
    let mut worst = (0.0f64, 0.0, 0.0);
    for &gp in &[0.5, 1.0, 2.0, 3.0, 4.0] {
        for &p in &[0.0, 0.1, 1.0, 10.0] {
            let res = conservation_residual(gp, p, 10);
            if res > worst.0 {
                worst = (res, gp, p);
            }
        }
    }
    outcome(
        1,
        name,
        worst.0 < 1e-11,
        format!(
            "worst residual {:.3e} at G' = {}, p = {}",
            worst.0, worst.1, worst.2
        ),
    )
}

/// 2. Broadband series at p = 0 equals single-mode closed forms.
pub fn criterion_2() -> CriterionOutcome {
    let name = "single-mode limit recovery at p = 0 within 1e-9";
    let mut worst = 0.0f64;
    for &gp in &[0.5, 1.0, 2.0, 3.0] {
        let report = match bb_report(gp, 0.0, 0.0, 1.0, 1.0, 1.0, 16) {
            Ok(r) => r,
            Err(e) => return fail_from_err(2, name, e),
        };
        let g = gp.cosh().powi(2);
        let rs = sm_individual_noise(g).unwrap();
        let devs = [
            (report.g - g).abs() / g,
            (report.r_s - rs).abs() / rs,
            (report.r_i - rs).abs() / rs,
            (report.nf - sm_noise_figure(g).unwrap()).abs(),
            (report.rt_at_r - sm_rt(g, 1.0, 1.0, 1.0).unwrap()).abs(),
        ];
        worst = devs.iter().cloned().fold(worst, f64::max);
    }
    outcome(2, name, worst < 1e-9, format!("worst deviation {worst:.3e}"))
}

/// 3. Factorable closed forms equal single-mode at |F| = 1; NF = 2/|F|^2.
pub fn criterion_3() -> CriterionOutcome {
    let name = "factorable <-> single-mode at |F| = 1; NF = 2/|F|^2";
    let mut worst = 0.0f64;
    for &gc in &[0.5f64, 1.0, 2.0] {
        let g = gc.cosh().powi(2);
        let n = fac_noise(gc, crate::C64::new(1.0, 0.0)).unwrap();
        worst = worst
            .max((n.r_s - sm_individual_noise(g).unwrap()).abs())
            .max((n.r_i - sm_individual_noise(g).unwrap()).abs())
            .max((n.nf.unwrap() - sm_noise_figure(g).unwrap()).abs())
            .max((n.rt1 - sm_rt(g, 1.0, 1.0, 1.0).unwrap()).abs());
    }
    let exact_ok = worst < 1e-12;
    let mut worst_nf = 0.0f64;
    for &f2 in &[1.0f64, 0.8, 0.25] {
        let nf = fac_nf(12.0, crate::C64::new(f2.sqrt(), 0.0)).unwrap();
        worst_nf = worst_nf.max((nf - 2.0 / f2).abs());
    }
    outcome(
        3,
        name,
        exact_ok && worst_nf < 1e-6,
        format!("single-mode deviation {worst:.3e}; high-gain NF deviation {worst_nf:.3e}"),
    )
}

/// 4. Engine quadrature vs analytic series, and series vs Schmidt oracle.
pub fn criterion_4() -> CriterionOutcome {
    let name = "oracle equivalence: engine vs series (1e-3), series vs Schmidt (1e-6)";
    let mut lattice = Vec::new();
    for &gp in &[0.5, 1.0, 2.0] {
        for &p in &[0.5, 1.0] {
            for &s in &[0.0, 1.0] {
                lattice.push((gp, p, s));
            }
        }
    }
    let devs: Vec<std::result::Result<f64, String>> = lattice
        .par_iter()
        .map(|&(gp, p, s)| {
            let eng = broadband_engine_report(gp, p, s, 1.0, 1.0, 1.0, 257, 12)
                .map_err(|e| e.to_string())?;
            let ana = bb_report(gp, p, s, 1.0, 1.0, 1.0, 12).map_err(|e| e.to_string())?;
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
            Ok(rel(eng.g, ana.g)
                .max(rel(eng.r_s, ana.r_s))
                .max(rel(eng.r_i, ana.r_i))
                .max(rel(eng.nf, ana.nf))
                .max(rel(eng.rt_at_r, ana.rt_at_r)))
        })
        .collect();
    let mut worst = 0.0f64;
    for d in devs {
        match d {
            Ok(v) => worst = worst.max(v),
            Err(e) => return fail_from_err(4, name, e),
        }
    }

    // Series vs Schmidt resummation at G' = 2, p = 1.
    let grid = build_grid(0.0, 24.0, 129).unwrap();
    let kernel = build_jsf_broadband(&grid, &grid, 0.0, 1.0).unwrap();
    let series = match green_from_kernel(&kernel, 2.0, 12) {
        Ok(g) => g,
        Err(e) => return fail_from_err(4, name, e),
    };
    let oracle = schmidt_oracle(&kernel, 2.0).unwrap();
    let frob = |m: &nalgebra::DMatrix<crate::C64>| -> f64 {
        m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    };
    let mut schmidt_dev = 0.0f64;
    for (a, b) in [
        (&series.h1s, &oracle.h1s),
        (&series.h2s, &oracle.h2s),
        (&series.h1i, &oracle.h1i),
        (&series.h2i, &oracle.h2i),
    ] {
        schmidt_dev = schmidt_dev.max(frob(&(a - b)) / frob(b));
    }
    outcome(
        4,
        name,
        worst < 1e-3 && schmidt_dev < 1e-6,
        format!("engine-vs-series max relative {worst:.3e}; series-vs-Schmidt {schmidt_dev:.3e}"),
    )
}

/// 5. High-gain NF plateau: > 2 for finite p, exactly 2 (1e-6) at p = 0.
pub fn criterion_5() -> CriterionOutcome {
    let name = "NF plateau > 2 for p in {1, 10}; = 2 within 1e-6 at p = 0";
    let mut details = String::new();
    let mut passed = true;
    for &p in &[1.0, 10.0] {
        for &gp in &[3.5, 4.0] {
            match bb_report(gp, p, 0.0, 1.0, 1.0, 1.0, 14) {
                Ok(r) => {
                    if r.nf <= 2.0 {
                        passed = false;
                    }
                    details.push_str(&format!("NF(G'={gp}, p={p}) = {:.4}; ", r.nf));
                }
                Err(e) => return fail_from_err(5, name, e),
            }
        }
    }
    // p = 0 needs extreme gain to expose the plateau: G' = 8, N = 24.
    match bb_report(8.0, 0.0, 0.0, 1.0, 1.0, 1.0, 24) {
        Ok(r) => {
            let dev = (r.nf - 2.0).abs();
            details.push_str(&format!("p=0 at g = {:.3e}: |NF - 2| = {dev:.3e}", r.g));
            if dev >= 1e-6 {
                passed = false;
            }
        }
        Err(e) => return fail_from_err(5, name, e),
    }
    outcome(5, name, passed, details)
}

/// 6. R_t(r = 1) independence of p at matched gain.
pub fn criterion_6() -> CriterionOutcome {
    let name = "R_t(r = 1) p-independence at matched g within 1e-6";
    let mut worst = 0.0f64;
    for &g in &[2.0, 4.0, 10.0] {
        let mut values = Vec::new();
        for &p in &[0.1, 1.0, 10.0] {
            let gp = match gp_for_gain(g, p, 14, 4.0) {
                Ok(gp) => gp,
                Err(e) => return fail_from_err(6, name, e),
            };
            match bb_report(gp, p, 0.0, 1.0, 1.0, 1.0, 14) {
                Ok(r) => values.push(r.rt_at_r),
                Err(e) => return fail_from_err(6, name, e),
            }
        }
        let spread = values.iter().cloned().fold(f64::MIN, f64::max)
            - values.iter().cloned().fold(f64::MAX, f64::min);
        worst = worst.max(spread);
    }
    outcome(6, name, worst < 1e-6, format!("worst spread {worst:.3e}"))
}

/// 7. r_opt bracket 1 <= r_opt <= I_s/I_i, both -> 1 at high gain.
pub fn criterion_7() -> CriterionOutcome {
    let name = "r_opt in [1, I_s/I_i]; both -> 1 within 1% at g > 100";
    let mut passed = true;
    let mut details = String::new();
    for &p in &[0.1, 1.0, 10.0] {
        for &gp in &[1.0, 2.0, 3.0, 4.0] {
            let r = match bb_report(gp, p, 0.0, 1.0, 1.0, 1.0, 14) {
                Ok(r) => r,
                Err(e) => return fail_from_err(7, name, e),
            };
            let ropt = match r.r_opt {
                Some(x) => x,
                None => {
                    return outcome(7, name, false, format!("no r_opt at G'={gp}, p={p}"))
                }
            };
            let ratio = r.i_s / r.i_i;
            if !(ropt >= 1.0 - 1e-9 && ropt <= ratio + 1e-9) {
                passed = false;
                details.push_str(&format!(
                    "bracket violated at G'={gp}, p={p}: r_opt={ropt:.6}, ratio={ratio:.6}; "
                ));
            }
        }
    }
    for &p in &[0.1, 1.0] {
        let gp = match gp_for_gain(120.0, p, 14, 4.0) {
            Ok(gp) => gp,
            Err(e) => return fail_from_err(7, name, e),
        };
        let r = bb_report(gp, p, 0.0, 1.0, 1.0, 1.0, 14).unwrap();
        let ropt = r.r_opt.unwrap();
        let ratio = r.i_s / r.i_i;
        details.push_str(&format!(
            "g=120, p={p}: r_opt={ropt:.5}, I_s/I_i={ratio:.5}; "
        ));
        if (ropt - 1.0).abs() > 0.01 || (ratio - 1.0).abs() > 0.01 {
            passed = false;
        }
    }
    outcome(7, name, passed, details)
}

/// 8. R_t = 1 contour at G' = 3 crosses p = 1.75 +- 0.2.
pub fn criterion_8() -> CriterionOutcome {
    let name = "Fig. 7 contour threshold p = 1.75 +- 0.2 at G' = 3";
    // Worst R_t over s <= 10 minus 1, increasing in p.
    let excess = |p: f64| -> f64 {
        let mut worst = f64::MIN;
        for k in 0..21 {
            let s = 10.0 * k as f64 / 20.0;
            let rt = bb_report(3.0, p, s, 1.0, 1.0, 1.0, 14)
                .map(|r| r.rt_at_r)
                .unwrap_or(f64::INFINITY);
            worst = worst.max(rt);
        }
        worst - 1.0
    };
    match crate::minimize::bisect_increasing(excess, 1.0, 2.5) {
        Some(p_star) => outcome(
            8,
            name,
            (p_star - 1.75).abs() <= 0.2,
            format!("threshold at p = {p_star:.4}"),
        ),
        None => outcome(8, name, false, "threshold not bracketed in [1, 2.5]".into()),
    }
}

/// 9. Efficiency-mismatch crossings at p = s = 1, r = 1.
pub fn criterion_9() -> CriterionOutcome {
    let name = "R_t crossings near g = 18 and g = 30 (within 15%)";
    let rt = |g: f64, es: f64, ei: f64| -> Result<f64> {
        let gp = gp_for_gain(g, 1.0, 14, 4.0)?;
        Ok(bb_report(gp, 1.0, 1.0, es, ei, 1.0, 14)?.rt_at_r)
    };
    let d1 = |g: f64| rt(g, 0.75, 0.85).unwrap() - rt(g, 0.85, 0.85).unwrap();
    let d2 = |g: f64| rt(g, 0.75, 0.85).unwrap() - rt(g, 0.75, 0.75).unwrap();
    let g1 = crate::minimize::bisect_increasing(d1, 2.0, 100.0);
    let g2 = crate::minimize::bisect_increasing(d2, 2.0, 100.0);
    match (g1, g2) {
        (Some(g1), Some(g2)) => outcome(
            9,
            name,
            (g1 - 18.0).abs() <= 0.15 * 18.0 && (g2 - 30.0).abs() <= 0.15 * 30.0,
            format!("crossings at g = {g1:.2} (vs 18) and g = {g2:.2} (vs 30)"),
        ),
        _ => outcome(9, name, false, "crossing not bracketed in [2, 100]".into()),
    }
}

/// 10. Excess-noise cancellation at r = I_s/I_i and Monte Carlo mixture
/// agreement with the closed-form penalty.
pub fn criterion_10() -> CriterionOutcome {
    let name = "excess-noise cancellation (1e-14) and MC mixture oracle (3 sigma)";
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let base = match bb_report(1.5, 1.0, 1.0, 0.8, 0.9, 1.0, 12) {
        Ok(r) => r,
        Err(e) => return fail_from_err(10, name, e),
    };
    // (a) exact cancellation at the photon-number ratio.
    let r_cancel = base.i_s / base.i_i;
    let cancel = match bb_report(1.5, 1.0, 1.0, 0.8, 0.9, r_cancel, 12) {
        Ok(r) => r,
        Err(e) => return fail_from_err(10, name, e),
    };
    let mut worst_cancel = 0.0f64;
    for _ in 0..50 {
        let ex = ExcessNoise::new(rng.random_range(0.0..1e10), 1e5).unwrap();
        let adjusted = apply_excess_noise(&cancel, &ex).unwrap();
        worst_cancel = worst_cancel.max((adjusted.rt_at_r - cancel.rt_at_r).abs());
    }
    // (b) Monte Carlo over a mixture of coherent states: input photon number
    // I0 = i0_mean (1 + d), d uniform, V_ex = i0_mean^2 a^2/3. The mixture's
    // output intensity-difference variance is E[coherent variance] (linear
    // in I0) plus the variance of the mean difference across the mixture.
    let i0_mean = 1e4;
    let a = 0.05;
    let v_ex = i0_mean * i0_mean * a * a / 3.0;
    let ex = ExcessNoise::new(v_ex, i0_mean).unwrap();
    let adjusted = match apply_excess_noise(&base, &ex) {
        Ok(r) => r,
        Err(e) => return fail_from_err(10, name, e),
    };
    let h = base.hterms;
    let r = base.r_used;
    let coh_var = h.var_s() + r * r * h.var_i() - 2.0 * r * h.correlation();
    let slope = base.i_s - r * base.i_i;
    let n_samples = 20_000usize;
    let mut lin = Vec::with_capacity(n_samples);
    let mut mean_diff = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let i0 = i0_mean * (1.0 + rng.random_range(-a..a));
        lin.push(coh_var * i0);
        mean_diff.push(slope * i0);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let lin_mean = mean(&lin);
    let md_mean = mean(&mean_diff);
    let md_var = mean_diff
        .iter()
        .map(|x| (x - md_mean).powi(2))
        .sum::<f64>()
        / (n_samples - 1) as f64;
    let mc_numerator = lin_mean + md_var;
    // Closed form R'_t re-expressed as an absolute variance for the mixture.
    let denom_coeff = coh_var / base.rt_at_r;
    let exact = adjusted.rt_at_r * denom_coeff * i0_mean;
    // Standard errors: mean of lin, and the variance estimator of mean_diff.
    let lin_var = lin.iter().map(|x| (x - lin_mean).powi(2)).sum::<f64>()
        / (n_samples - 1) as f64;
    let m4 = mean_diff
        .iter()
        .map(|x| (x - md_mean).powi(4))
        .sum::<f64>()
        / n_samples as f64;
    let se = ((lin_var + (m4 - md_var * md_var).max(0.0)) / n_samples as f64).sqrt();
    let mc_dev = (mc_numerator - exact).abs();
    let passed = worst_cancel < 1e-14 * cancel.rt_at_r.max(1.0) && mc_dev <= 3.0 * se;
    outcome(
        10,
        name,
        passed,
        format!(
            "cancellation residual {worst_cancel:.3e}; MC deviation {mc_dev:.3e} vs 3 sigma = {:.3e}",
            3.0 * se
        ),
    )
}

/// 11. Narrow filters push all noises to the shot-noise limit.
pub fn criterion_11() -> CriterionOutcome {
    let name = "s = 20 narrow filters: R_s, R_i, R_t within [0.98, 1.02]";
    let mut passed = true;
    let mut details = String::new();
    for &p in &[1.0, 2.0] {
        let r = match bb_report(0.5, p, 20.0, 1.0, 1.0, 1.0, 12) {
            Ok(r) => r,
            Err(e) => return fail_from_err(11, name, e),
        };
        details.push_str(&format!(
            "p={p}: R_s={:.4}, R_i={:.4}, R_t={:.4}; ",
            r.r_s, r.r_i, r.rt_at_r
        ));
        for v in [r.r_s, r.r_i, r.rt_at_r] {
            if !(0.98..=1.02).contains(&v) {
                passed = false;
            }
        }
    }
    outcome(11, name, passed, details)
}

/// 12. r_opt optimality on randomized parameter points.
pub fn criterion_12() -> CriterionOutcome {
    let name = "r_opt optimality and closed-form/golden-section agreement (1e-8)";
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_agree = 0.0f64;
    for k in 0..200 {
        let gp = rng.random_range(0.3..2.2);
        let p = rng.random_range(0.1..2.0);
        let s = rng.random_range(0.0..2.0);
        let es = rng.random_range(0.4..1.0);
        let ei = rng.random_range(0.4..1.0);
        let report = match bb_report(gp, p, s, es, ei, 1.0, 12) {
            Ok(r) => r,
            Err(e) => return fail_from_err(12, name, e),
        };
        let r_cf = match report.r_opt {
            Some(r) => r,
            None => return outcome(12, name, false, format!("no r_opt at sample {k}")),
        };
        let h = report.hterms;
        let r_gs = ropt_numeric(&h, report.i_s, report.i_i);
        worst_agree = worst_agree.max((r_cf - r_gs).abs() / r_cf);
        let rt_opt = rt_at(&h, report.i_s, report.i_i, r_cf);
        for j in 0..50 {
            let r = 1e-3 * 10f64.powf(6.0 * j as f64 / 49.0);
            if rt_opt > rt_at(&h, report.i_s, report.i_i, r) + 1e-12 {
                return outcome(
                    12,
                    name,
                    false,
                    format!("r_opt not optimal at sample {k}, r = {r:.3e}"),
                );
            }
        }
    }
    outcome(
        12,
        name,
        worst_agree < 1e-8,
        format!("worst closed-form vs golden-section deviation {worst_agree:.3e}"),
    )
}

/// Run the full acceptance suite in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
        criterion_11(),
        criterion_12(),
    ]
}

// Exercised end to end by tests/acceptance.rs; a smoke test here keeps the
// cheap criteria under unit coverage.
#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_criteria_pass() {
        assert!(criterion_3().passed, "{}", criterion_3().details);
        assert!(criterion_11().passed, "{}", criterion_11().details);
        assert!(criterion_12().passed, "{}", criterion_12().details);
    }

    #[test]
    fn ideal_hterms_feed_criteria() {
        // Sanity that the ideal H terms at moderate gain are finite and obey
        // the printed equalities used throughout the criteria.
        let h = crate::broadband::bb_ideal_hterms(2.0, 1.0, 12).unwrap();
        assert_eq!(h.hs2, h.hi2);
        assert_eq!(h.hs2, h.hsi1);
        assert_eq!(h.hs2, h.hsi2);
        assert!(h.hs1 > 1.0);
    }
}
