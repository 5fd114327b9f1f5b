//! Frequency grids, input/filter spectra, and joint spectral kernels.
//!
//! Conventions shared with [`crate::engine`]:
//! * quadrature is the midpoint rule with weight `step`,
//! * the on-grid delta function is `1/step` on the diagonal,
//! * each kernel stores a `gain_scale` relating the stored unit-norm matrix
//!   to the physical kernel, so a gain coefficient defined against the
//!   physical kernel can drive the engine directly.

use crate::error::{FopaError, Result};
use crate::C64;
use nalgebra::DMatrix;

/// Uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub center: f64,
    pub span: f64,
    pub n_points: usize,
}

impl FrequencyGrid {
    pub fn step(&self) -> f64 {
        self.span / (self.n_points - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        self.center - 0.5 * self.span + k as f64 * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.point(k)).collect()
    }

    pub fn min(&self) -> f64 {
        self.center - 0.5 * self.span
    }

    pub fn max(&self) -> f64 {
        self.center + 0.5 * self.span
    }
}

pub fn build_grid(center: f64, span: f64, n_points: usize) -> Result<FrequencyGrid> {
    if !(span > 0.0) {
        return Err(FopaError::invalid(format!("span must be > 0, got {span}")));
    }
    if n_points < 16 {
        return Err(FopaError::invalid(format!(
            "n_points must be >= 16, got {n_points}"
        )));
    }
    Ok(FrequencyGrid {
        center,
        span,
        n_points,
    })
}

/// Default grid for a set of bandwidths placed on one band: 257 points,
/// span 12x the largest bandwidth.
pub fn default_grid(center: f64, bandwidths: &[f64]) -> Result<FrequencyGrid> {
    let largest = bandwidths.iter().cloned().fold(0.0, f64::max);
    if !(largest > 0.0) {
        return Err(FopaError::invalid("need a positive bandwidth"));
    }
    build_grid(center, 12.0 * largest, 257)
}

/// Input signal amplitude spectrum, unit quadrature norm.
#[derive(Debug, Clone)]
pub struct SignalSpectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<C64>,
}

impl SignalSpectrum {
    /// `integral |s|^2 domega` by quadrature.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.step()
    }

    fn check_unit_norm(&self, tol: f64) -> Result<()> {
        let defect = (self.norm_sq() - 1.0).abs();
        if defect > tol {
            return Err(FopaError::invalid(format!(
                "spectrum is not unit-normalized (defect {defect:.3e})"
            )));
        }
        Ok(())
    }
}

pub fn gaussian_signal(grid: &FrequencyGrid, w0: f64, sigma: f64) -> Result<SignalSpectrum> {
    if !(sigma > 0.0) {
        return Err(FopaError::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    if w0 < grid.min() || w0 > grid.max() {
        return Err(FopaError::invalid(format!(
            "center {w0} outside grid [{}, {}]",
            grid.min(),
            grid.max()
        )));
    }
    let amp = 1.0 / (std::f64::consts::PI.powf(0.25) * sigma.sqrt());
    let values: Vec<C64> = grid
        .points()
        .iter()
        .map(|&w| C64::new(amp * (-(w - w0).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0))
        .collect();
    let spectrum = SignalSpectrum {
        grid: grid.clone(),
        values,
    };
    let defect = (spectrum.norm_sq() - 1.0).abs();
    if defect > 1e-6 {
        return Err(FopaError::GridCoverage(format!(
            "Gaussian (sigma {sigma}) truncated by grid: norm defect {defect:.3e}"
        )));
    }
    let scale = 1.0 / spectrum.norm_sq().sqrt();
    Ok(SignalSpectrum {
        values: spectrum.values.iter().map(|v| v * scale).collect(),
        ..spectrum
    })
}

/// Filter transmission spectrum, `|f| <= 1`.
#[derive(Debug, Clone)]
pub struct FilterSpectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<C64>,
}

pub fn gaussian_filter(grid: &FrequencyGrid, w0: f64, sigma_f: f64) -> Result<FilterSpectrum> {
    if !(sigma_f > 0.0) {
        return Err(FopaError::invalid(format!(
            "sigma_f must be > 0, got {sigma_f}"
        )));
    }
    let values = grid
        .points()
        .iter()
        .map(|&w| C64::new((-(w - w0).powi(2) / (2.0 * sigma_f * sigma_f)).exp(), 0.0))
        .collect();
    Ok(FilterSpectrum {
        grid: grid.clone(),
        values,
    })
}

/// Fully transparent filter (the no-filter limit).
pub fn flat_filter(grid: &FrequencyGrid) -> FilterSpectrum {
    FilterSpectrum {
        grid: grid.clone(),
        values: vec![C64::new(1.0, 0.0); grid.n_points],
    }
}

/// Pump pulse and fiber parameters for the general kernel.
#[derive(Debug, Clone, Copy)]
pub struct PumpParams {
    /// Pump bandwidth (rad/s).
    pub sigma_p: f64,
    /// Pump center frequency.
    pub w_p0: f64,
    /// Peak power (W).
    pub p_peak: f64,
    /// Nonlinear coefficient (1/W/m).
    pub gamma: f64,
    /// Fiber length (m).
    pub length: f64,
}

impl PumpParams {
    pub fn new(sigma_p: f64, w_p0: f64, p_peak: f64, gamma: f64, length: f64) -> Result<Self> {
        for (name, v) in [
            ("sigma_p", sigma_p),
            ("p_peak", p_peak),
            ("gamma", gamma),
            ("length", length),
        ] {
            if !(v > 0.0) {
                return Err(FopaError::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(Self {
            sigma_p,
            w_p0,
            p_peak,
            gamma,
            length,
        })
    }
}

/// Taylor dispersion around the pump center.
#[derive(Debug, Clone, Copy, Default)]
pub struct DispersionModel {
    /// Group-velocity dispersion (s^2/m).
    pub beta2: f64,
    /// Third-order dispersion (s^3/m).
    pub beta3: f64,
}

impl DispersionModel {
    /// Phase mismatch `k_s + k_i - 2k_p + 2 gamma P_p` at detunings
    /// `nu = omega - omega_p0`, with the pump taken at the mean detuning.
    pub fn delta_k(&self, pump: &PumpParams, nu_s: f64, nu_i: f64) -> f64 {
        let nu_p = 0.5 * (nu_s + nu_i);
        self.beta2 / 2.0 * (nu_s * nu_s + nu_i * nu_i - 2.0 * nu_p * nu_p)
            + self.beta3 / 6.0 * (nu_s.powi(3) + nu_i.powi(3) - 2.0 * nu_p.powi(3))
            + 2.0 * pump.gamma * pump.p_peak
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    General,
    Factorable,
    Broadband,
    NearDelta,
}

/// Joint spectral kernel `psi(omega_s, omega_i)` (signal rows, idler
/// columns), stored with unit quadrature norm.
///
/// `gain_scale` is the Frobenius norm of the weighted *physical* kernel, so
/// the engine's effective matrix is `G * gain_scale * weighted(psi)`. For
/// kernels that are physically normalizable (factorable) it is exactly 1.
#[derive(Debug, Clone)]
pub struct JointSpectralKernel {
    pub grid_s: FrequencyGrid,
    pub grid_i: FrequencyGrid,
    pub psi: DMatrix<C64>,
    pub kind: KernelKind,
    pub gain_scale: f64,
}

impl JointSpectralKernel {
    /// `double integral |psi|^2` by quadrature.
    pub fn norm_sq(&self) -> f64 {
        self.psi.iter().map(|v| v.norm_sqr()).sum::<f64>()
            * self.grid_s.step()
            * self.grid_i.step()
    }

    /// The l2-weighted unit-Frobenius matrix consumed by the engine.
    pub fn weighted(&self) -> DMatrix<C64> {
        let w = (self.grid_s.step() * self.grid_i.step()).sqrt();
        self.psi.map(|v| v * w)
    }
}

fn normalize_kernel(
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
    physical: DMatrix<C64>,
    kind: KernelKind,
) -> Result<JointSpectralKernel> {
    let w = (grid_s.step() * grid_i.step()).sqrt();
    // Frobenius norm of the weighted physical kernel doubles as both the
    // normalization constant and the gain scale.
    let gain_scale = (physical.iter().map(|v| v.norm_sqr()).sum::<f64>() * w * w).sqrt();
    if !(gain_scale > 1e-150) {
        return Err(FopaError::NumericalInstability(
            "kernel vanishes on the grid, cannot normalize".into(),
        ));
    }
    Ok(JointSpectralKernel {
        grid_s: grid_s.clone(),
        grid_i: grid_i.clone(),
        psi: physical.map(|v| v / gain_scale),
        kind,
        gain_scale,
    })
}

fn check_pump_coverage(grid: &FrequencyGrid, name: &str, sigma_p: f64) -> Result<()> {
    if grid.span < 12.0 * sigma_p {
        return Err(FopaError::GridCoverage(format!(
            "{name} span {} covers less than +-6 sigma_p = {}",
            grid.span,
            6.0 * sigma_p
        )));
    }
    Ok(())
}

/// Perfectly phase-matched broadband kernel,
/// `psi ~ exp(-(omega_s + omega_i - 2 omega_p0)^2 / 4 sigma_p^2)`.
///
/// The physical prefactor `1/(2 sqrt(pi) sigma_p)` fixes the gain scale so
/// that the engine's `G` matches the analytic series coefficient `G'`.
pub fn build_jsf_broadband(
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
    w_p0: f64,
    sigma_p: f64,
) -> Result<JointSpectralKernel> {
    if !(sigma_p > 0.0) {
        return Err(FopaError::invalid(format!(
            "sigma_p must be > 0, got {sigma_p}"
        )));
    }
    if (grid_s.center + grid_i.center - 2.0 * w_p0).abs() > 1e-9 * sigma_p {
        return Err(FopaError::invalid(
            "band centers must satisfy w_s0 + w_i0 = 2 w_p0",
        ));
    }
    check_pump_coverage(grid_s, "signal grid", sigma_p)?;
    check_pump_coverage(grid_i, "idler grid", sigma_p)?;
    let prefactor = 1.0 / (2.0 * std::f64::consts::PI.sqrt() * sigma_p);
    let ws = grid_s.points();
    let wi = grid_i.points();
    let physical = DMatrix::from_fn(grid_s.n_points, grid_i.n_points, |r, c| {
        let d = ws[r] + wi[c] - 2.0 * w_p0;
        C64::new(prefactor * (-d * d / (4.0 * sigma_p * sigma_p)).exp(), 0.0)
    });
    normalize_kernel(grid_s, grid_i, physical, KernelKind::Broadband)
}

/// Rank-1 kernel `psi = phi_s (x) phi_i` from unit-normalized mode profiles.
pub fn build_jsf_factorable(
    phi_s: &SignalSpectrum,
    phi_i: &SignalSpectrum,
) -> Result<JointSpectralKernel> {
    phi_s.check_unit_norm(1e-8)?;
    phi_i.check_unit_norm(1e-8)?;
    let physical = DMatrix::from_fn(phi_s.grid.n_points, phi_i.grid.n_points, |r, c| {
        phi_s.values[r] * phi_i.values[c]
    });
    normalize_kernel(&phi_s.grid, &phi_i.grid, physical, KernelKind::Factorable)
}

/// General kernel with a sinc phase-matching factor.
pub fn build_jsf_general(
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
    pump: &PumpParams,
    dispersion: &DispersionModel,
) -> Result<JointSpectralKernel> {
    let w_p0 = pump.w_p0;
    if (grid_s.center + grid_i.center - 2.0 * w_p0).abs() > 1e-9 * pump.sigma_p {
        return Err(FopaError::invalid(
            "band centers must satisfy w_s0 + w_i0 = 2 w_p0",
        ));
    }
    check_pump_coverage(grid_s, "signal grid", pump.sigma_p)?;
    check_pump_coverage(grid_i, "idler grid", pump.sigma_p)?;
    let prefactor = 1.0 / (2.0 * std::f64::consts::PI.sqrt() * pump.sigma_p);
    let ws = grid_s.points();
    let wi = grid_i.points();
    let physical = DMatrix::from_fn(grid_s.n_points, grid_i.n_points, |r, c| {
        let nu_s = ws[r] - w_p0;
        let nu_i = wi[c] - w_p0;
        let d = nu_s + nu_i;
        let gauss = (-d * d / (4.0 * pump.sigma_p * pump.sigma_p)).exp();
        let x = 0.5 * dispersion.delta_k(pump, nu_s, nu_i) * pump.length;
        C64::new(prefactor * gauss * sinc(x), 0.0)
    });
    normalize_kernel(grid_s, grid_i, physical, KernelKind::General)
}

/// Single-frequency limit: the energy-conservation delta regularized to one
/// grid cell (anti-diagonal kernel). Requires matching square grids.
pub fn build_jsf_near_delta(
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
) -> Result<JointSpectralKernel> {
    if grid_s.n_points != grid_i.n_points || (grid_s.step() - grid_i.step()).abs() > 1e-12 {
        return Err(FopaError::GridMismatch(
            "near-delta kernel needs grids with equal size and step".into(),
        ));
    }
    let n = grid_s.n_points;
    // Physical value 1/step on the anti-diagonal: delta((w_s-w_s0)+(w_i-w_i0)).
    let inv_step = 1.0 / grid_s.step();
    let physical = DMatrix::from_fn(n, n, |r, c| {
        if r + c == n - 1 {
            C64::new(inv_step, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    normalize_kernel(grid_s, grid_i, physical, KernelKind::NearDelta)
}

/// Spectral-matching overlap `F = integral s(omega) phi_s*(omega) domega`.
pub fn overlap_f(s: &SignalSpectrum, phi_s: &SignalSpectrum) -> Result<C64> {
    if s.grid != phi_s.grid {
        return Err(FopaError::GridMismatch(
            "overlap requires spectra on the same grid".into(),
        ));
    }
    Ok(s.values
        .iter()
        .zip(&phi_s.values)
        .map(|(a, b)| a * b.conj())
        .sum::<C64>()
        * s.grid.step())
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_arithmetic() {
        let g = build_grid(0.0, 10.0, 16).unwrap();
        assert_abs_diff_eq!(g.step(), 10.0 / 15.0);
        assert_abs_diff_eq!(g.point(0), -5.0);
        assert_abs_diff_eq!(g.point(15), 5.0);
        assert!(build_grid(0.0, 10.0, 2).is_err());
        assert!(build_grid(0.0, -1.0, 32).is_err());
    }

    #[test]
    fn gaussian_signal_normalization_and_peak() {
        let g = build_grid(0.0, 12.0, 257).unwrap();
        let s = gaussian_signal(&g, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.norm_sq(), 1.0, epsilon = 1e-12);
        // Peak value pi^(-1/4) at the center point.
        let mid = &s.values[128];
        assert_abs_diff_eq!(mid.re, std::f64::consts::PI.powf(-0.25), epsilon = 1e-6);
    }

    #[test]
    fn gaussian_signal_coverage_error() {
        let g = build_grid(0.0, 4.0, 64).unwrap();
        assert!(matches!(
            gaussian_signal(&g, 0.0, 1.0),
            Err(FopaError::GridCoverage(_))
        ));
    }

    #[test]
    fn gaussian_filter_values() {
        let g = build_grid(0.0, 12.0, 257).unwrap();
        let f = gaussian_filter(&g, 0.0, 1.0).unwrap();
        assert!(f.values.iter().all(|v| v.norm() <= 1.0 + 1e-15));
        // Gaussian profile exp(-omega^2 / (2 sigma_f^2)) at every grid point.
        let w = g.points();
        let k = ((1.0 - g.min()) / g.step()).round() as usize;
        assert_abs_diff_eq!(
            f.values[k].re,
            (-0.5 * w[k] * w[k]).exp(),
            epsilon = 1e-12
        );
        let flat = flat_filter(&g);
        assert!(flat.values.iter().all(|v| (v.re - 1.0).abs() < 1e-15));
    }

    #[test]
    fn broadband_kernel_is_antidiagonal_constant_and_normalized() {
        let g = build_grid(0.0, 12.0, 257).unwrap();
        let k = build_jsf_broadband(&g, &g, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(k.norm_sq(), 1.0, epsilon = 1e-10);
        // psi(ws + d, wi - d) = psi(ws, wi).
        for d in [1usize, 5, 40] {
            let a = k.psi[(100, 100)];
            let b = k.psi[(100 + d, 100 - d)];
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12 * a.re.abs());
        }
        // Maximum on the energy-conserving anti-diagonal.
        let peak = k.psi[(128, 128)].norm();
        assert!(k.psi.iter().all(|v| v.norm() <= peak + 1e-15));
    }

    #[test]
    fn factorable_kernel_is_rank_one_with_unit_gain_scale() {
        let g = build_grid(0.0, 14.0, 129).unwrap();
        let phi_s = gaussian_signal(&g, 0.0, 1.0).unwrap();
        let phi_i = gaussian_signal(&g, 0.5, 0.8).unwrap();
        let k = build_jsf_factorable(&phi_s, &phi_i).unwrap();
        assert_abs_diff_eq!(k.norm_sq(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(k.gain_scale, 1.0, epsilon = 1e-10);
        let svd = k.weighted().svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_abs_diff_eq!(sv[0], 1.0, epsilon = 1e-10);
        assert!(sv[1] < 1e-12);
        // Swapping the factors transposes the kernel.
        let kt = build_jsf_factorable(&phi_i, &phi_s).unwrap();
        let diff = (kt.psi.transpose() - &k.psi).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn general_kernel_degenerates_to_broadband() {
        let g = build_grid(0.0, 12.0, 129).unwrap();
        let bb = build_jsf_broadband(&g, &g, 0.0, 1.0).unwrap();
        let pump = PumpParams::new(1.0, 0.0, 1e-30, 1e-30, 1.0).unwrap();
        let gen = build_jsf_general(&g, &g, &pump, &DispersionModel::default()).unwrap();
        let diff = (&gen.psi - &bb.psi).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "max entry diff {diff}");
        assert_abs_diff_eq!(gen.gain_scale, bb.gain_scale, epsilon = 1e-10);
    }

    #[test]
    fn general_kernel_sinc_zero() {
        let g = build_grid(0.0, 12.0, 129).unwrap();
        // Delta-k = beta2 (nu_s - nu_i)^2 / 4 + 2 gamma P_p; with beta2 =
        // 2 pi / 9 and negligible SPM, Delta-k L/2 hits pi at nu_s - nu_i = 6,
        // which lies on-grid at (nu_s, nu_i) = (3, -3).
        let pump = PumpParams::new(1.0, 0.0, 1e-12, 1e-12, 1.0).unwrap();
        let disp = DispersionModel {
            beta2: 2.0 * std::f64::consts::PI / 9.0,
            beta3: 0.0,
        };
        let gen = build_jsf_general(&g, &g, &pump, &disp).unwrap();
        let peak = gen.psi.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(gen.psi[(96, 32)].norm() < 1e-9 * peak);
        assert_abs_diff_eq!(gen.norm_sq(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn overlap_values() {
        let g = build_grid(0.0, 30.0, 513).unwrap();
        let a = gaussian_signal(&g, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(overlap_f(&a, &a).unwrap().re, 1.0, epsilon = 1e-10);
        let b = gaussian_signal(&g, 0.0, 2.0).unwrap();
        // Analytic Gaussian overlap sqrt(2 s1 s2 / (s1^2 + s2^2)) = sqrt(4/5).
        assert_abs_diff_eq!(
            overlap_f(&a, &b).unwrap().re,
            (4.0f64 / 5.0).sqrt(),
            epsilon = 1e-8
        );
        let far = gaussian_signal(&g, 12.0, 0.5).unwrap();
        assert!(overlap_f(&a, &far).unwrap().norm() < 1e-8);
    }

    #[test]
    fn near_delta_kernel_shape() {
        let g = build_grid(0.0, 12.0, 65).unwrap();
        let k = build_jsf_near_delta(&g, &g).unwrap();
        assert_abs_diff_eq!(k.norm_sq(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.gain_scale, (65f64).sqrt(), epsilon = 1e-12);
        assert!(k.psi[(0, 64)].re > 0.0);
        assert_abs_diff_eq!(k.psi[(0, 0)].re, 0.0);
    }
}
