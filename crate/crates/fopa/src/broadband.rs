//! Truncated-series observables for the broadband non-factorable kernel.
//!
//! All quantities are double/quadruple power series in the gain coefficient
//! `G'`, with radicands `1/sqrt(1 + xi)` carrying the bandwidth ratios
//! `p = sigma_p/sigma` (pump to signal) and `s = sigma/sigma_f` (signal to
//! filter). Terms span many orders of magnitude at large `G'`, so every sum
//! is accumulated with compensated summation in descending magnitude order,
//! and a last-shell tail estimate guards the truncation.

use crate::error::{FopaError, Result};
use crate::metrics::{build_report, HTerms, NoiseReport};
use crate::minimize::bisect_increasing;
use crate::spectral::FrequencyGrid;

/// Parameters of one broadband evaluation.
#[derive(Debug, Clone, Copy)]
pub struct BroadbandParams {
    pub gp: f64,
    pub p: f64,
    pub s: f64,
    pub eta_s: f64,
    pub eta_i: f64,
    pub r: f64,
    pub n_trunc: usize,
}

pub const DEFAULT_N_TRUNC: usize = 10;

/// Upper end of the gain range the series was validated over.
pub const GP_MAX: f64 = 4.0;

impl BroadbandParams {
    pub fn new(gp: f64, p: f64, s: f64, eta_s: f64, eta_i: f64, r: f64) -> Result<Self> {
        if !(gp >= 0.0 && gp <= GP_MAX) {
            return Err(FopaError::invalid(format!(
                "G' must be in [0, {GP_MAX}], got {gp}"
            )));
        }
        Self::new_extended(gp, p, s, eta_s, eta_i, r)
    }

    /// Like [`BroadbandParams::new`] but without the `G' <= 4` cap, for limit
    /// studies at extreme gain (use a correspondingly larger `n_trunc`).
    pub fn new_extended(gp: f64, p: f64, s: f64, eta_s: f64, eta_i: f64, r: f64) -> Result<Self> {
        if !(gp >= 0.0) {
            return Err(FopaError::invalid(format!("G' must be >= 0, got {gp}")));
        }
        if !(p >= 0.0) {
            return Err(FopaError::invalid(format!("p must be >= 0, got {p}")));
        }
        if !(s >= 0.0) {
            return Err(FopaError::invalid(format!("s must be >= 0, got {s}")));
        }
        for (name, eta) in [("eta_s", eta_s), ("eta_i", eta_i)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(FopaError::invalid(format!(
                    "{name} must be in (0, 1], got {eta}"
                )));
            }
        }
        if !(r > 0.0) {
            return Err(FopaError::invalid(format!("r must be > 0, got {r}")));
        }
        Ok(Self {
            gp,
            p,
            s,
            eta_s,
            eta_i,
            r,
            n_trunc: DEFAULT_N_TRUNC,
        })
    }

    pub fn with_n_trunc(mut self, n_trunc: usize) -> Result<Self> {
        if n_trunc < 1 {
            return Err(FopaError::invalid("n_trunc must be >= 1"));
        }
        self.n_trunc = n_trunc;
        Ok(self)
    }
}

/// Radicand coefficient of the filtered H-term series. Depends on the inner
/// index pair only through `k3 + k4` and is symmetric in `k1 <-> k2`.
pub fn xi_f(k1: u32, k2: u32, k3: u32, k4: u32, p: f64, s: f64) -> f64 {
    xi_f_k34(k1, k2, k3 + k4, p, s)
}

fn xi_f_k34(k1: u32, k2: u32, k34: u32, p: f64, s: f64) -> f64 {
    let (k1, k2, k34) = (k1 as f64, k2 as f64, k34 as f64);
    let p2 = p * p;
    let s2 = s * s;
    (k1 + k2 + k34) * p2
        + s2 * (2.0
            + 4.0 * (k1 + k2 + k34) * p2
            + 4.0 * ((k1 + k2) * k34 + 2.0 * k1 * k2) * p2 * p2)
        + 4.0 * s2 * s2 * p2 * (1.0 + 2.0 * k1 * p2) * (1.0 + 2.0 * k2 * p2) * k34
}

/// Radicand coefficient of the photon-number / vacuum-term series,
/// `x = 1` for the direct term and `x = 2` for the vacuum correction.
pub fn xi_vac(k1: u32, k2: u32, x: u32, p: f64, s: f64) -> Result<f64> {
    if x != 1 && x != 2 {
        return Err(FopaError::invalid(format!("x must be 1 or 2, got {x}")));
    }
    let (k1, k2) = (k1 as f64, k2 as f64);
    let p2 = p * p;
    Ok((k1 + k2) * p2 + x as f64 * s * s * (1.0 + 2.0 * k1 * p2) * (1.0 + 2.0 * k2 * p2))
}

/// Reciprocal factorials `1/k!` for `k = 0..=n`.
fn rf_table(n: usize) -> Vec<f64> {
    let mut rf = Vec::with_capacity(n + 1);
    rf.push(1.0);
    for k in 1..=n {
        let last = *rf.last().unwrap();
        rf.push(last / k as f64);
    }
    rf
}

/// Compensated (Kahan) sum after sorting by descending magnitude.
fn kahan_sorted(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
    let mut sum = 0.0;
    let mut c = 0.0;
    for t in terms {
        let y = t - c;
        let next = sum + y;
        c = (next - sum) - y;
        sum = next;
    }
    sum
}

/// Photon-number-style double sum. `odd = false` gives the signal series
/// (even factorials, power `G'^(2(n1+n2))`), `odd = true` the idler series
/// (odd factorials, extra `G'^2`).
fn i_sum(gp: f64, p: f64, s: f64, n: usize, odd: bool) -> f64 {
    let rf = rf_table(2 * n + 2);
    let gp2 = gp * gp;
    let (off, pow_off) = if odd { (1u32, 1i32) } else { (0, 0) };
    let mut terms = Vec::with_capacity((n + 1) * (n + 1));
    for n1 in 0..=n {
        for n2 in 0..=n {
            let k1 = 2 * n1 as u32 + off;
            let k2 = 2 * n2 as u32 + off;
            let xi = xi_vac(k1, k2, 1, p, s).unwrap();
            terms.push(
                gp2.powi((n1 + n2) as i32 + pow_off)
                    * rf[k1 as usize]
                    * rf[k2 as usize]
                    / (1.0 + xi).sqrt(),
            );
        }
    }
    kahan_sorted(terms)
}

/// Loss-induced vacuum double sum (per detected beam).
fn hv_sum(gp: f64, p: f64, s: f64, eta: f64, n: usize, odd: bool) -> f64 {
    let rf = rf_table(2 * n + 2);
    let gp2 = gp * gp;
    let (off, pow_off) = if odd { (1u32, 1i32) } else { (0, 0) };
    let mut terms = Vec::with_capacity((n + 1) * (n + 1));
    for n1 in 0..=n {
        for n2 in 0..=n {
            let k1 = 2 * n1 as u32 + off;
            let k2 = 2 * n2 as u32 + off;
            let xi1 = xi_vac(k1, k2, 1, p, s).unwrap();
            let xi2 = xi_vac(k1, k2, 2, p, s).unwrap();
            terms.push(
                gp2.powi((n1 + n2) as i32 + pow_off)
                    * rf[k1 as usize]
                    * rf[k2 as usize]
                    * (1.0 / (1.0 + xi1).sqrt() - eta / (1.0 + xi2).sqrt()),
            );
        }
    }
    kahan_sorted(terms)
}

/// Index pattern of one quadruple H-term series: parity offsets of the four
/// factorial indices (0 even, 1 odd) and the power offset of `G'^2`.
#[derive(Clone, Copy)]
struct HPattern {
    o1: u32,
    o2: u32,
    o3: u32,
    o4: u32,
    pow_off: i32,
}

const HS1: HPattern = HPattern { o1: 0, o2: 0, o3: 0, o4: 0, pow_off: 0 };
const HS2: HPattern = HPattern { o1: 0, o2: 0, o3: 1, o4: 1, pow_off: 1 };
const HI1: HPattern = HPattern { o1: 1, o2: 1, o3: 1, o4: 1, pow_off: 2 };
const HI2: HPattern = HPattern { o1: 1, o2: 1, o3: 0, o4: 0, pow_off: 1 };
const HSI1: HPattern = HPattern { o1: 0, o2: 1, o3: 0, o4: 1, pow_off: 1 };
const HSI2: HPattern = HPattern { o1: 1, o2: 0, o3: 1, o4: 0, pow_off: 1 };

/// Quadruple sum with the inner index pair collapsed: `xi_f` depends on
/// `(n3, n4)` only through `n3 + n4`, so the inner pair is folded into a
/// per-diagonal weight table, reducing `(N+1)^4` terms to `(N+1)^2 (2N+1)`.
/// Exactness against the naive loops is enforced by a unit test.
fn h_sum(gp: f64, p: f64, s: f64, n: usize, pat: HPattern) -> f64 {
    let rf = rf_table(2 * n + 2);
    let gp2 = gp * gp;
    // w[m] = sum over n3 + n4 = m of 1/(2n3+o3)! 1/(2n4+o4)!.
    let mut w = vec![0.0f64; 2 * n + 1];
    for n3 in 0..=n {
        for n4 in 0..=n {
            w[n3 + n4] += rf[2 * n3 + pat.o3 as usize] * rf[2 * n4 + pat.o4 as usize];
        }
    }
    let mut terms = Vec::with_capacity((n + 1) * (n + 1) * (2 * n + 1));
    for n1 in 0..=n {
        for n2 in 0..=n {
            let k1 = 2 * n1 as u32 + pat.o1;
            let k2 = 2 * n2 as u32 + pat.o2;
            let base = rf[k1 as usize] * rf[k2 as usize];
            for m in 0..=(2 * n) {
                let k34 = 2 * m as u32 + pat.o3 + pat.o4;
                let xi = xi_f_k34(k1, k2, k34, p, s);
                terms.push(
                    gp2.powi((n1 + n2 + m) as i32 + pat.pow_off) * base * w[m]
                        / (1.0 + xi).sqrt(),
                );
            }
        }
    }
    kahan_sorted(terms)
}

/// Naive quadruple loop, retained as the exactness oracle for [`h_sum`].
#[cfg(test)]
fn h_sum_naive(gp: f64, p: f64, s: f64, n: usize, pat: HPattern) -> f64 {
    let rf = rf_table(2 * n + 2);
    let gp2 = gp * gp;
    let mut terms = Vec::new();
    for n1 in 0..=n {
        for n2 in 0..=n {
            for n3 in 0..=n {
                for n4 in 0..=n {
                    let k1 = 2 * n1 as u32 + pat.o1;
                    let k2 = 2 * n2 as u32 + pat.o2;
                    let k3 = 2 * n3 as u32 + pat.o3;
                    let k4 = 2 * n4 as u32 + pat.o4;
                    let xi = xi_f(k1, k2, k3, k4, p, s);
                    terms.push(
                        gp2.powi((n1 + n2 + n3 + n4) as i32 + pat.pow_off)
                            * rf[k1 as usize]
                            * rf[k2 as usize]
                            * rf[k3 as usize]
                            * rf[k4 as usize]
                            / (1.0 + xi).sqrt(),
                    );
                }
            }
        }
    }
    kahan_sorted(terms)
}

/// Last-shell tail guard: the series' shell at order `N` costs a factor
/// `~ G'^2/((2N+1)(2N+2))` per further order; if that estimate exceeds
/// `1e-12` of the total, the truncation is insufficient.
fn guard(total: f64, prev: f64, gp: f64, n: usize, context: &str) -> Result<f64> {
    let shell = (total - prev).abs();
    let tail = shell * gp * gp / ((2 * n + 1) as f64 * (2 * n + 2) as f64);
    let threshold = 1e-12;
    if tail > threshold * total.abs() {
        return Err(FopaError::TruncationInsufficient {
            context: format!("{context} at G' = {gp}, N = {n}"),
            tail: tail / total.abs(),
            threshold,
        });
    }
    Ok(total)
}

fn guarded_i(gp: f64, p: f64, s: f64, n: usize, odd: bool, context: &str) -> Result<f64> {
    guard(
        i_sum(gp, p, s, n, odd),
        i_sum(gp, p, s, n - 1, odd),
        gp,
        n,
        context,
    )
}

fn guarded_h(gp: f64, p: f64, s: f64, n: usize, pat: HPattern, context: &str) -> Result<f64> {
    guard(
        h_sum(gp, p, s, n, pat),
        h_sum(gp, p, s, n - 1, pat),
        gp,
        n,
        context,
    )
}

/// Unfiltered photon numbers per input photon: `(g, I_i/|alpha|^2)`.
///
/// Errors only when the truncated sums are grossly inconsistent
/// (`|g - i - 1| > 1e-6`); the fine `1e-11` conservation level is reported
/// by [`conservation_residual`] and checked by the acceptance suite.
pub fn bb_photon_numbers(gp: f64, p: f64, n_trunc: usize) -> Result<(f64, f64)> {
    if n_trunc < 1 {
        return Err(FopaError::invalid("n_trunc must be >= 1"));
    }
    let g = i_sum(gp, p, 0.0, n_trunc, false);
    let ii = i_sum(gp, p, 0.0, n_trunc, true);
    let residual = (g - ii - 1.0).abs();
    if residual > 1e-6 {
        return Err(FopaError::TruncationInsufficient {
            context: format!("photon-number conservation at G' = {gp}, p = {p}, N = {n_trunc}"),
            tail: residual,
            threshold: 1e-6,
        });
    }
    Ok((g, ii))
}

/// Twin-beam conservation residual `|g - I_i/|alpha|^2 - 1|` of the
/// truncated sums (no guard; diagnostic).
pub fn conservation_residual(gp: f64, p: f64, n_trunc: usize) -> f64 {
    let g = i_sum(gp, p, 0.0, n_trunc, false);
    let ii = i_sum(gp, p, 0.0, n_trunc, true);
    (g - ii - 1.0).abs()
}

/// Invert the gain series: find `G'` giving photon-number gain `g_target`
/// at bandwidth ratio `p`, searching `0 <= G' <= gp_max`.
pub fn gp_for_gain(g_target: f64, p: f64, n_trunc: usize, gp_max: f64) -> Result<f64> {
    if !(g_target >= 1.0) {
        return Err(FopaError::invalid(format!(
            "target gain must be >= 1, got {g_target}"
        )));
    }
    bisect_increasing(
        |gp| i_sum(gp, p, 0.0, n_trunc, false) - g_target,
        0.0,
        gp_max,
    )
    .ok_or_else(|| {
        FopaError::invalid(format!(
            "gain {g_target} not reachable with G' <= {gp_max} at p = {p}"
        ))
    })
}

/// Ideal (unfiltered, unit-efficiency) variance terms.
pub fn bb_ideal_hterms(gp: f64, p: f64, n_trunc: usize) -> Result<HTerms> {
    if n_trunc < 1 {
        return Err(FopaError::invalid("n_trunc must be >= 1"));
    }
    let hs1 = guarded_h(gp, p, 0.0, n_trunc, HS1, "H_s1")?;
    let hs2 = guarded_h(gp, p, 0.0, n_trunc, HS2, "H_s2")?;
    let hi1 = guarded_h(gp, p, 0.0, n_trunc, HI1, "H_i1")?;
    // H_i2 = H_si1 = H_si2 = H_s2 exactly (identical summands over the
    // symmetric index region).
    Ok(HTerms {
        hs1,
        hs2,
        hi1,
        hi2: hs2,
        hvs: 0.0,
        hvi: 0.0,
        hsi1: hs2,
        hsi2: hs2,
    })
}

/// Power spectra of the amplified signal and generated idler on `grid`
/// (offsets from each band center, in units where `sigma = 1`), per input
/// photon. `integral S_s domega = g`.
pub fn bb_spectra(
    gp: f64,
    p: f64,
    grid: &FrequencyGrid,
    n_trunc: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let needed = 6.0 * (1.0 + 4.0 * n_trunc as f64 * p * p).sqrt();
    if 0.5 * grid.span < needed {
        return Err(FopaError::GridCoverage(format!(
            "grid half-span {} below the broadened spectrum extent {needed:.2}",
            0.5 * grid.span
        )));
    }
    let rf = rf_table(2 * n_trunc + 2);
    let gp2 = gp * gp;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let spectrum = |odd: bool| -> Vec<f64> {
        grid.points()
            .iter()
            .map(|&w| {
                let nu = w - grid.center;
                let mut terms = Vec::with_capacity((n_trunc + 1) * (n_trunc + 1));
                for n1 in 0..=n_trunc {
                    for n2 in 0..=n_trunc {
                        let (a, b, amp, pw) = if odd {
                            (
                                1.0 + 2.0 * (2 * n1 + 1) as f64 * p * p,
                                1.0 + 2.0 * (2 * n2 + 1) as f64 * p * p,
                                rf[2 * n1 + 1] * rf[2 * n2 + 1],
                                (n1 + n2 + 1) as i32,
                            )
                        } else {
                            (
                                1.0 + 4.0 * n1 as f64 * p * p,
                                1.0 + 4.0 * n2 as f64 * p * p,
                                rf[2 * n1] * rf[2 * n2],
                                (n1 + n2) as i32,
                            )
                        };
                        terms.push(
                            inv_sqrt_pi
                                * gp2.powi(pw)
                                * amp
                                * (-nu * nu / (2.0 * a)).exp()
                                * (-nu * nu / (2.0 * b)).exp()
                                / (a * b).sqrt(),
                        );
                    }
                }
                kahan_sorted(terms)
            })
            .collect()
    };
    Ok((spectrum(false), spectrum(true)))
}

/// Full filtered/lossy report: detected photon numbers, H terms, and the
/// assembled noise quantities at `params.r` and at the optimal ratio.
pub fn bb_filtered_report(params: &BroadbandParams) -> Result<NoiseReport> {
    let BroadbandParams {
        gp,
        p,
        s,
        eta_s,
        eta_i,
        r,
        n_trunc,
    } = *params;
    if n_trunc < 1 {
        return Err(FopaError::invalid("n_trunc must be >= 1"));
    }
    let i_s = eta_s * guarded_i(gp, p, s, n_trunc, false, "I_s")?;
    let i_i = eta_i * guarded_i(gp, p, s, n_trunc, true, "I_i")?;
    let h = HTerms {
        hs1: eta_s * eta_s * guarded_h(gp, p, s, n_trunc, HS1, "H_s1")?,
        hs2: eta_s * eta_s * guarded_h(gp, p, s, n_trunc, HS2, "H_s2")?,
        hi1: eta_i * eta_i * guarded_h(gp, p, s, n_trunc, HI1, "H_i1")?,
        hi2: eta_i * eta_i * guarded_h(gp, p, s, n_trunc, HI2, "H_i2")?,
        hvs: eta_s * hv_sum(gp, p, s, eta_s, n_trunc, false),
        hvi: eta_i * hv_sum(gp, p, s, eta_i, n_trunc, true),
        hsi1: eta_s * eta_i * guarded_h(gp, p, s, n_trunc, HSI1, "H_si1")?,
        hsi2: eta_s * eta_i * guarded_h(gp, p, s, n_trunc, HSI2, "H_si2")?,
    };
    build_report(h, i_s, i_i, i_s, r)
}
