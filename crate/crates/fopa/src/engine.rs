//! Grid-based Green-function engine.
//!
//! For any [`JointSpectralKernel`] this evaluates the four multimode
//! Bogoliubov kernels as truncated matrix series, checks their unitarity,
//! and computes every observable by quadrature. It is the independent
//! cross-check for the analytic [`crate::broadband`] and
//! [`crate::factorable`] paths.
//!
//! Internally everything runs in the l2 convention: functions are scaled by
//! `sqrt(step)`, kernels by `sqrt(step_row * step_col)`, so integrals become
//! plain matrix products and the delta function becomes the identity. The
//! public [`GreenFunctions`] store the physical kernels (delta = `1/step` on
//! the diagonal).

use crate::error::{FopaError, Result};
use crate::metrics::{build_report, HTerms, NoiseReport};
use crate::spectral::{FilterSpectrum, JointSpectralKernel, SignalSpectrum};
use crate::spectral::FrequencyGrid;
use crate::C64;
use nalgebra::{DMatrix, DVector};

/// Detection chain: filters, quantum efficiencies, and the AC response
/// ratio between the two detector arms.
#[derive(Debug, Clone)]
pub struct DetectionChain {
    pub eta_s: f64,
    pub eta_i: f64,
    pub filter_s: FilterSpectrum,
    pub filter_i: FilterSpectrum,
    pub r: f64,
}

impl DetectionChain {
    pub fn new(
        eta_s: f64,
        eta_i: f64,
        filter_s: FilterSpectrum,
        filter_i: FilterSpectrum,
        r: f64,
    ) -> Result<Self> {
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
            eta_s,
            eta_i,
            filter_s,
            filter_i,
            r,
        })
    }
}

/// The four Bogoliubov kernels in physical (delta = `1/step`) convention.
///
/// `h1s`, `h1i` are square on the signal/idler grids; `h2s` maps idler to
/// signal rows and `h2i` the reverse.
#[derive(Debug, Clone)]
pub struct GreenFunctions {
    pub h1s: DMatrix<C64>,
    pub h2s: DMatrix<C64>,
    pub h1i: DMatrix<C64>,
    pub h2i: DMatrix<C64>,
    pub grid_s: FrequencyGrid,
    pub grid_i: FrequencyGrid,
    pub g: f64,
    pub n_trunc: usize,
}

impl GreenFunctions {
    fn step_s(&self) -> f64 {
        self.grid_s.step()
    }

    fn step_i(&self) -> f64 {
        self.grid_i.step()
    }

    /// l2-convention matrices (delta = identity).
    pub fn l2(&self) -> (DMatrix<C64>, DMatrix<C64>, DMatrix<C64>, DMatrix<C64>) {
        let ss = self.step_s();
        let si = self.step_i();
        let w = (ss * si).sqrt();
        (
            self.h1s.map(|v| v * ss),
            self.h2s.map(|v| v * w),
            self.h1i.map(|v| v * si),
            self.h2i.map(|v| v * w),
        )
    }
}

fn from_l2(
    kernel: &JointSpectralKernel,
    g: f64,
    n_trunc: usize,
    h1s: DMatrix<C64>,
    h2s: DMatrix<C64>,
    h1i: DMatrix<C64>,
    h2i: DMatrix<C64>,
) -> GreenFunctions {
    let ss = kernel.grid_s.step();
    let si = kernel.grid_i.step();
    let w = (ss * si).sqrt();
    GreenFunctions {
        h1s: h1s.map(|v| v / ss),
        h2s: h2s.map(|v| v / w),
        h1i: h1i.map(|v| v / si),
        h2i: h2i.map(|v| v / w),
        grid_s: kernel.grid_s.clone(),
        grid_i: kernel.grid_i.clone(),
        g,
        n_trunc,
    }
}

fn frob(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Evaluate the Green-function series for a kernel at gain coefficient `g`.
///
/// `h1s = delta + sum_{n>=1} g^{2n}/(2n)! (Psi Psi^dag)^n`,
/// `h2s = sum_{n>=0} g^{2n+1}/(2n+1)! (Psi Psi^dag)^n Psi`, and the idler
/// counterparts with `Psi^T Psi^*`; all products are quadrature-weighted.
pub fn green_from_kernel(
    kernel: &JointSpectralKernel,
    g: f64,
    n_trunc: usize,
) -> Result<GreenFunctions> {
    if !(g >= 0.0) {
        return Err(FopaError::invalid(format!("g must be >= 0, got {g}")));
    }
    if n_trunc < 1 {
        return Err(FopaError::invalid("n_trunc must be >= 1"));
    }
    let a = kernel.weighted().map(|v| v * kernel.gain_scale);
    let n_s = a.nrows();
    let n_i = a.ncols();
    let g2 = g * g;

    let b = &a * a.adjoint();
    let eye_s = DMatrix::<C64>::identity(n_s, n_s);
    let mut h1s = eye_s.clone();
    let mut p = eye_s;
    for k in 1..=n_trunc {
        p = (&p * &b).map(|v| v * (g2 / ((2 * k - 1) as f64 * (2 * k) as f64)));
        h1s += &p;
    }

    let mut h2s = a.map(|v| v * g);
    let mut q = h2s.clone();
    for k in 1..=n_trunc {
        q = (&b * &q).map(|v| v * (g2 / ((2 * k) as f64 * (2 * k + 1) as f64)));
        h2s += &q;
    }

    let bi = a.transpose() * a.conjugate();
    let eye_i = DMatrix::<C64>::identity(n_i, n_i);
    let mut h1i = eye_i.clone();
    let mut pi = eye_i;
    for k in 1..=n_trunc {
        pi = (&pi * &bi).map(|v| v * (g2 / ((2 * k - 1) as f64 * (2 * k) as f64)));
        h1i += &pi;
    }

    let h2i = h2s.transpose();

    // Tail bound: the next term is p * b * g^2 / ((2N+1)(2N+2)).
    let next = (2 * n_trunc + 1) as f64 * (2 * n_trunc + 2) as f64;
    let tail = frob(&p) * frob(&b) * g2 / next;
    let ratio = tail / frob(&h1s);
    if ratio > 1e-10 {
        return Err(FopaError::TruncationInsufficient {
            context: format!("Green-function series at g = {g}, N = {n_trunc}"),
            tail: ratio,
            threshold: 1e-10,
        });
    }

    Ok(from_l2(kernel, g, n_trunc, h1s, h2s, h1i, h2i))
}

/// Exact resummation via singular value decomposition of the weighted
/// kernel: `cosh`/`sinh` of the gain per Schmidt mode. No truncation error.
pub fn schmidt_oracle(kernel: &JointSpectralKernel, g: f64) -> Result<GreenFunctions> {
    if !(g >= 0.0) {
        return Err(FopaError::invalid(format!("g must be >= 0, got {g}")));
    }
    let m = kernel.weighted().map(|v| v * kernel.gain_scale);
    if m.nrows() != m.ncols() {
        return Err(FopaError::GridMismatch(
            "Schmidt resummation needs square-compatible grids (full unitary factors)".into(),
        ));
    }
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => {
            return Err(FopaError::NumericalInstability(
                "singular value decomposition failed".into(),
            ))
        }
    };
    let cosh: Vec<C64> = svd
        .singular_values
        .iter()
        .map(|&l| C64::new((g * l).cosh(), 0.0))
        .collect();
    let sinh: Vec<C64> = svd
        .singular_values
        .iter()
        .map(|&l| C64::new((g * l).sinh(), 0.0))
        .collect();

    let scale_cols = |m: &DMatrix<C64>, d: &[C64]| {
        let mut out = m.clone();
        for (j, &s) in d.iter().enumerate() {
            out.column_mut(j).iter_mut().for_each(|v| *v *= s);
        }
        out
    };

    // M = U S V^H with V^H = v_t; so V = v_t^H, V^* = v_t^T.
    let h1s = scale_cols(&u, &cosh) * u.adjoint();
    let h2s = scale_cols(&u, &sinh) * &v_t;
    let vconj = v_t.transpose();
    let h1i = scale_cols(&vconj, &cosh) * v_t.conjugate();
    let h2i = scale_cols(&vconj, &sinh) * u.transpose();
    Ok(from_l2(kernel, g, 0, h1s, h2s, h1i, h2i))
}

/// Max-norm residuals of the unitarity constraints:
/// cross relation `h1s h2i - h2s h1i = 0` and the two delta-normalization
/// relations `h1 h1^dag - h2 h2^dag = delta` (signal and idler).
pub fn unitarity_residuals(green: &GreenFunctions) -> (f64, f64, f64) {
    let (h1s, h2s, h1i, h2i) = green.l2();
    let max_abs = |m: &DMatrix<C64>| m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let ra = max_abs(&(&h1s * h2i.transpose() - &h2s * h1i.transpose()));
    let n_s = h1s.nrows();
    let n_i = h1i.nrows();
    let rb = max_abs(
        &(&h1s * h1s.adjoint() - &h2s * h2s.adjoint() - DMatrix::<C64>::identity(n_s, n_s)),
    );
    let rc = max_abs(
        &(&h1i * h1i.adjoint() - &h2i * h2i.adjoint() - DMatrix::<C64>::identity(n_i, n_i)),
    );
    (ra, rb, rc)
}

fn check_grid(name: &str, expected: &FrequencyGrid, got: &FrequencyGrid) -> Result<()> {
    if expected != got {
        return Err(FopaError::GridMismatch(format!(
            "{name} is on a different grid than the Green functions"
        )));
    }
    Ok(())
}

/// Quadrature evaluation of all observables for an injected signal and a
/// detection chain.
///
/// Photon numbers are per unit input photon number; spontaneous photon
/// numbers (independent of the input) are added only when
/// `spontaneous_alpha2 = Some(|alpha|^2)` supplies the scale to divide by.
pub fn observables(
    green: &GreenFunctions,
    signal: &SignalSpectrum,
    chain: &DetectionChain,
    spontaneous_alpha2: Option<f64>,
) -> Result<NoiseReport> {
    check_grid("signal", &green.grid_s, &signal.grid)?;
    check_grid("signal filter", &green.grid_s, &chain.filter_s.grid)?;
    check_grid("idler filter", &green.grid_i, &chain.filter_i.grid)?;
    let (h1s, h2s, h1i, h2i) = green.l2();

    let sqrt_step = green.grid_s.step().sqrt();
    let x = DVector::from_iterator(
        signal.values.len(),
        signal.values.iter().map(|v| v * sqrt_step),
    );
    let ms: Vec<f64> = chain.filter_s.values.iter().map(|v| v.norm_sqr()).collect();
    let mi: Vec<f64> = chain.filter_i.values.iter().map(|v| v.norm_sqr()).collect();

    let a = &h1s * &x;
    let b = &h2i * x.map(|v| v.conj());
    let u = DVector::from_iterator(a.len(), a.iter().zip(&ms).map(|(v, &m)| v * m));
    let v = DVector::from_iterator(b.len(), b.iter().zip(&mi).map(|(w, &m)| w * m));

    let eta_s = chain.eta_s;
    let eta_i = chain.eta_i;
    let mut i_s = eta_s
        * a.iter()
            .zip(&ms)
            .map(|(v, &m)| m * v.norm_sqr())
            .sum::<f64>();
    let mut i_i = eta_i
        * b.iter()
            .zip(&mi)
            .map(|(w, &m)| m * w.norm_sqr())
            .sum::<f64>();

    let quad = |m: &DMatrix<C64>, w: &DVector<C64>| -> f64 {
        let t = m.adjoint() * w;
        // w^dag M M^dag w = |M^dag w|^2, real by construction.
        t.iter().map(|v| v.norm_sqr()).sum()
    };
    let hs1 = eta_s * eta_s * quad(&h1s, &u);
    let hs2 = eta_s * eta_s * quad(&h2s, &u);
    let hi1 = eta_i * eta_i * quad(&h2i, &v);
    let hi2 = eta_i * eta_i * quad(&h1i, &v);

    // Loss-induced vacuum terms: beamsplitter transmission T = eta |f|^2
    // contributes T (1 - T) per mode.
    let hvs = eta_s
        * a.iter()
            .zip(&ms)
            .map(|(v, &m)| m * (1.0 - eta_s * m) * v.norm_sqr())
            .sum::<f64>();
    let hvi = eta_i
        * b.iter()
            .zip(&mi)
            .map(|(w, &m)| m * (1.0 - eta_i * m) * w.norm_sqr())
            .sum::<f64>();

    let vbar = v.map(|w| w.conj());
    let hsi1: C64 = u
        .map(|z| z.conj())
        .dot(&(&h1s * (h2i.transpose() * &vbar)));
    let hsi2: C64 = u
        .map(|z| z.conj())
        .dot(&(&h2s * (h1i.transpose() * &vbar)))
        .conj();
    let hsi1 = eta_s * eta_i * hsi1.re;
    let hsi2 = eta_s * eta_i * hsi2.re;

    if let Some(alpha2) = spontaneous_alpha2 {
        if !(alpha2 > 0.0) {
            return Err(FopaError::invalid(format!(
                "|alpha|^2 must be > 0, got {alpha2}"
            )));
        }
        let spont = |h2: &DMatrix<C64>, m: &[f64]| -> f64 {
            h2.row_iter()
                .zip(m)
                .map(|(row, &mm)| mm * row.iter().map(|v| v.norm_sqr()).sum::<f64>())
                .sum()
        };
        i_s += eta_s * spont(&h2s, &ms) / alpha2;
        i_i += eta_i * spont(&h2i, &mi) / alpha2;
    }

    let h = HTerms {
        hs1,
        hs2,
        hi1,
        hi2,
        hvs,
        hvi,
        hsi1,
        hsi2,
    };
    build_report(h, i_s, i_i, i_s, chain.r)
}

/// One-call engine evaluation of the broadband configuration in the
/// dimensionless units of the analytic series (`sigma = 1`, `p`, `s`).
///
/// Builds a symmetric grid whose half-span `6 sqrt(1 + 4 N p^2)` covers the
/// gain-broadened spectra, a broadband kernel at pump bandwidth `p`, a unit
/// Gaussian signal, and Gaussian filters of bandwidth `1/s` (flat at
/// `s = 0`).
pub fn broadband_engine_report(
    gp: f64,
    p: f64,
    s: f64,
    eta_s: f64,
    eta_i: f64,
    r: f64,
    n_points: usize,
    n_trunc: usize,
) -> Result<NoiseReport> {
    let half = 6.0 * (1.0 + 4.0 * n_trunc as f64 * p * p).sqrt().max(p);
    let grid = crate::spectral::build_grid(0.0, 2.0 * half, n_points)?;
    let kernel = crate::spectral::build_jsf_broadband(&grid, &grid, 0.0, p)?;
    let green = green_from_kernel(&kernel, gp, n_trunc)?;
    let signal = crate::spectral::gaussian_signal(&grid, 0.0, 1.0)?;
    let filter = if s > 0.0 {
        crate::spectral::gaussian_filter(&grid, 0.0, 1.0 / s)?
    } else {
        crate::spectral::flat_filter(&grid)
    };
    let chain = DetectionChain::new(eta_s, eta_i, filter.clone(), filter, r)?;
    observables(&green, &signal, &chain, None)
}

/// Nested-loop evaluation of the same observables, kept as a correctness
/// oracle for small grids (n <= 32). No matrix products: every integral is
/// an explicit sum.
pub fn observables_naive(
    green: &GreenFunctions,
    signal: &SignalSpectrum,
    chain: &DetectionChain,
) -> Result<NoiseReport> {
    let n_s = green.grid_s.n_points;
    let n_i = green.grid_i.n_points;
    if n_s > 32 || n_i > 32 {
        return Err(FopaError::invalid(
            "naive evaluation is limited to grids of 32 points",
        ));
    }
    check_grid("signal", &green.grid_s, &signal.grid)?;
    check_grid("signal filter", &green.grid_s, &chain.filter_s.grid)?;
    check_grid("idler filter", &green.grid_i, &chain.filter_i.grid)?;
    let (h1s, h2s, h1i, h2i) = green.l2();
    let sqrt_step = green.grid_s.step().sqrt();
    let x: Vec<C64> = signal.values.iter().map(|v| v * sqrt_step).collect();
    let ms: Vec<f64> = chain.filter_s.values.iter().map(|v| v.norm_sqr()).collect();
    let mi: Vec<f64> = chain.filter_i.values.iter().map(|v| v.norm_sqr()).collect();

    let mut a = vec![C64::new(0.0, 0.0); n_s];
    for k in 0..n_s {
        for j in 0..n_s {
            a[k] += h1s[(k, j)] * x[j];
        }
    }
    let mut b = vec![C64::new(0.0, 0.0); n_i];
    for k in 0..n_i {
        for j in 0..n_s {
            b[k] += h2i[(k, j)] * x[j].conj();
        }
    }
    let u: Vec<C64> = a.iter().zip(&ms).map(|(v, &m)| v * m).collect();
    let v: Vec<C64> = b.iter().zip(&mi).map(|(w, &m)| w * m).collect();

    let eta_s = chain.eta_s;
    let eta_i = chain.eta_i;
    let i_s = eta_s * a.iter().zip(&ms).map(|(z, &m)| m * z.norm_sqr()).sum::<f64>();
    let i_i = eta_i * b.iter().zip(&mi).map(|(z, &m)| m * z.norm_sqr()).sum::<f64>();

    let mut hs1 = C64::new(0.0, 0.0);
    let mut hs2 = C64::new(0.0, 0.0);
    let mut hi1 = C64::new(0.0, 0.0);
    let mut hi2 = C64::new(0.0, 0.0);
    let mut hsi1 = C64::new(0.0, 0.0);
    let mut hsi2 = C64::new(0.0, 0.0);
    for k in 0..n_s {
        for l in 0..n_s {
            for j in 0..n_s {
                hs1 += u[k].conj() * h1s[(k, j)] * h1s[(l, j)].conj() * u[l];
            }
            for j in 0..n_i {
                hs2 += u[k].conj() * h2s[(k, j)] * h2s[(l, j)].conj() * u[l];
            }
        }
    }
    for k in 0..n_i {
        for l in 0..n_i {
            for j in 0..n_s {
                hi1 += v[k].conj() * h2i[(k, j)] * h2i[(l, j)].conj() * v[l];
            }
            for j in 0..n_i {
                hi2 += v[k].conj() * h1i[(k, j)] * h1i[(l, j)].conj() * v[l];
            }
        }
    }
    for k in 0..n_s {
        for l in 0..n_i {
            for j in 0..n_s {
                hsi1 += u[k].conj() * h1s[(k, j)] * h2i[(l, j)] * v[l].conj();
            }
            for j in 0..n_i {
                hsi2 += (u[k].conj() * h2s[(k, j)] * h1i[(l, j)] * v[l].conj()).conj();
            }
        }
    }
    let hvs = eta_s
        * a.iter()
            .zip(&ms)
            .map(|(z, &m)| m * (1.0 - eta_s * m) * z.norm_sqr())
            .sum::<f64>();
    let hvi = eta_i
        * b.iter()
            .zip(&mi)
            .map(|(z, &m)| m * (1.0 - eta_i * m) * z.norm_sqr())
            .sum::<f64>();
    let h = HTerms {
        hs1: eta_s * eta_s * hs1.re,
        hs2: eta_s * eta_s * hs2.re,
        hi1: eta_i * eta_i * hi1.re,
        hi2: eta_i * eta_i * hi2.re,
        hvs,
        hvi,
        hsi1: eta_s * eta_i * hsi1.re,
        hsi2: eta_s * eta_i * hsi2.re,
    };
    build_report(h, i_s, i_i, i_s, chain.r)
}
