//! Regime evaluation shared by the single-point commands, `sweep`, and the
//! figure presets, plus CSV/metadata/plot-script writers.

use fopa::broadband::{bb_filtered_report, gp_for_gain, BroadbandParams, GP_MAX};
use fopa::engine::broadband_engine_report;
use fopa::factorable::{fac_hterms, fac_photon_numbers};
use fopa::metrics::{build_report, csv_row, NoiseReport, CSV_HEADER};
use fopa::singlemode::sm_report;
use fopa::{C64, FopaError};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Singlemode,
    Factorable,
    Broadband,
    Engine,
}

impl FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "singlemode" => Ok(Self::Singlemode),
            "factorable" => Ok(Self::Factorable),
            "broadband" => Ok(Self::Broadband),
            "engine" => Ok(Self::Engine),
            other => Err(format!(
                "unknown regime `{other}` (expected singlemode | factorable | broadband | engine)"
            )),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Singlemode => "singlemode",
            Self::Factorable => "factorable",
            Self::Broadband => "broadband",
            Self::Engine => "engine",
        })
    }
}

/// How the detection ratio is chosen at each lattice point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RPolicy {
    Fixed(f64),
    Opt,
    PhotonRatio,
}

impl FromStr for RPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "opt" => Ok(Self::Opt),
            "ratio" | "photon-ratio" => Ok(Self::PhotonRatio),
            other => other
                .parse::<f64>()
                .map(Self::Fixed)
                .map_err(|_| format!("bad detection ratio `{other}` (number, opt, or ratio)")),
        }
    }
}

impl fmt::Display for RPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(x) => write!(f, "{x}"),
            Self::Opt => f.write_str("opt"),
            Self::PhotonRatio => f.write_str("ratio"),
        }
    }
}

/// One fully resolved lattice point. Fields not used by a regime are ignored
/// (`f2` only matters for factorable, `gp` for broadband/engine, ...).
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub gp: f64,
    pub g: Option<f64>,
    pub p: f64,
    pub s: f64,
    pub eta_s: f64,
    pub eta_i: f64,
    pub f2: f64,
    pub n_trunc: usize,
    pub n_points: usize,
}

impl Default for Point {
    fn default() -> Self {
        Self {
            gp: 1.0,
            g: None,
            p: 1.0,
            s: 0.0,
            eta_s: 1.0,
            eta_i: 1.0,
            f2: 1.0,
            n_trunc: 14,
            n_points: 257,
        }
    }
}

fn apply_policy(report: NoiseReport, policy: RPolicy) -> Result<NoiseReport, FopaError> {
    let r = match policy {
        RPolicy::Fixed(_) => return Ok(report),
        RPolicy::Opt => report.r_opt.ok_or(FopaError::UndefinedOptimum(
            "no optimal ratio at this point".into(),
        ))?,
        RPolicy::PhotonRatio => {
            if !(report.i_i > 0.0) {
                return Err(FopaError::UndefinedOptimum(
                    "photon-number ratio undefined without idler flux".into(),
                ));
            }
            report.i_s / report.i_i
        }
    };
    build_report(report.hterms, report.i_s, report.i_i, report.g, r)
}

/// Evaluate one point and return the fixed-schema CSV row.
pub fn evaluate(regime: Regime, pt: &Point, policy: RPolicy) -> Result<String, FopaError> {
    let r0 = match policy {
        RPolicy::Fixed(x) => x,
        _ => 1.0,
    };
    match regime {
        Regime::Singlemode => {
            let g = pt.g.unwrap_or(pt.gp.cosh().powi(2));
            let report = apply_policy(sm_report(g, pt.eta_s, pt.eta_i, r0)?, policy)?;
            Ok(csv_row(f64::NAN, f64::NAN, f64::NAN, pt.eta_s, pt.eta_i, &report))
        }
        Regime::Factorable => {
            let f = C64::new(pt.f2.sqrt(), 0.0);
            let h = fac_hterms(pt.gp, f)?;
            let (i_s, i_i) = fac_photon_numbers(pt.gp, f, 1.0)?;
            let report = apply_policy(build_report(h, i_s, i_i, i_s, r0)?, policy)?;
            Ok(csv_row(pt.gp, f64::NAN, f64::NAN, 1.0, 1.0, &report))
        }
        Regime::Broadband => {
            let gp = match pt.g {
                Some(g) => gp_for_gain(g, pt.p, pt.n_trunc, GP_MAX)?,
                None => pt.gp,
            };
            let params =
                BroadbandParams::new(gp, pt.p, pt.s, pt.eta_s, pt.eta_i, r0)?
                    .with_n_trunc(pt.n_trunc)?;
            let report = apply_policy(bb_filtered_report(&params)?, policy)?;
            Ok(csv_row(gp, pt.p, pt.s, pt.eta_s, pt.eta_i, &report))
        }
        Regime::Engine => {
            let gp = match pt.g {
                Some(g) => gp_for_gain(g, pt.p, pt.n_trunc, GP_MAX)?,
                None => pt.gp,
            };
            let report = apply_policy(
                broadband_engine_report(
                    gp, pt.p, pt.s, pt.eta_s, pt.eta_i, r0, pt.n_points, pt.n_trunc,
                )?,
                policy,
            )?;
            Ok(csv_row(gp, pt.p, pt.s, pt.eta_s, pt.eta_i, &report))
        }
    }
}

/// Write a CSV (header + rows) and its sidecar metadata file; optionally a
/// gnuplot script.
pub fn write_outputs(
    path: &Path,
    header: &str,
    rows: &[String],
    meta: &[(String, String)],
    plot: Option<&str>,
) -> std::io::Result<()> {
    let mut csv = String::with_capacity(rows.len() * 128);
    csv.push_str(header);
    csv.push('\n');
    for row in rows {
        csv.push_str(row);
        csv.push('\n');
    }
    std::fs::write(path, csv)?;

    let mut meta_text = String::new();
    meta_text.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    for (k, v) in meta {
        meta_text.push_str(&format!("{k} = {v}\n"));
    }
    std::fs::write(path.with_extension("csv.meta"), meta_text)?;

    if let Some(script) = plot {
        std::fs::write(path.with_extension("csv.gp"), script)?;
    }
    Ok(())
}

/// Default gnuplot script plotting column `ycol` against `xcol`.
pub fn gnuplot_script(csv_name: &str, xcol: usize, ycol: usize, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set title '{title}'\n\
         plot '{csv_name}' using {xcol}:{ycol} with lines\n"
    )
}

/// Print a single row to stdout with the header.
pub fn print_row(row: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{CSV_HEADER}");
    let _ = writeln!(out, "{row}");
}
