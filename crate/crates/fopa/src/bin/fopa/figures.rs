//! Frozen figure presets. Each preset writes one CSV (fixed schema for noise
//! figures, long format for spectra and contours), a sidecar metadata file,
//! and a gnuplot script.

use crate::run::{evaluate, gnuplot_script, write_outputs, Point, RPolicy, Regime};
use fopa::broadband::{bb_filtered_report, bb_spectra, BroadbandParams};
use fopa::metrics::CSV_HEADER;
use fopa::spectral::build_grid;
use fopa::FopaError;
use rayon::prelude::*;
use std::path::{Path, PathBuf};

pub const FIGURE_IDS: &[&str] = &[
    "fig2a", "fig2b", "fig3", "fig4", "fig5a", "fig5b", "fig6", "fig7a", "fig7b", "fig7c",
    "fig8a", "fig8b", "fig9a", "fig9b",
];

#[derive(Debug)]
pub enum FigureError {
    Numeric(FopaError),
    Io(std::io::Error),
}

impl std::fmt::Display for FigureError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Numeric(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for FigureError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

fn lin(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let step = (stop - start) / (count - 1) as f64;
    (0..count).map(|k| start + step * k as f64).collect()
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Evaluate a lattice in parallel, keeping lattice order, and name the
/// failing point on error.
fn rows_parallel<T: Sync + std::fmt::Debug>(
    lattice: &[T],
    eval: impl Fn(&T) -> Result<String, FopaError> + Sync,
) -> Result<Vec<String>, FigureError> {
    let results: Vec<Result<String, FopaError>> = lattice.par_iter().map(&eval).collect();
    let mut rows = Vec::with_capacity(results.len());
    for (point, res) in lattice.iter().zip(results) {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => {
                return Err(FigureError::Numeric(FopaError::NumericalInstability(
                    format!("at lattice point {point:?}: {e}"),
                )))
            }
        }
    }
    Ok(rows)
}

fn noise_figure_preset(
    path: &Path,
    regime: Regime,
    policy: RPolicy,
    lattice: Vec<Point>,
    meta: Vec<(String, String)>,
    title: &str,
    xcol: usize,
    ycol: usize,
) -> Result<(), FigureError> {
    let rows = rows_parallel(&lattice, |pt| evaluate(regime, pt, policy))?;
    let name = path.file_name().unwrap().to_string_lossy().to_string();
    let plot = gnuplot_script(&name, xcol, ycol, title);
    write_outputs(path, CSV_HEADER, &rows, &meta, Some(&plot))?;
    Ok(())
}

fn meta_common(id: &str, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut m = vec![("figure".to_string(), id.to_string())];
    for (k, v) in extra {
        m.push((k.to_string(), v.clone()));
    }
    m
}

const ETA_PAIRS: [(f64, f64); 3] = [(0.75, 0.75), (0.85, 0.85), (0.75, 0.85)];

fn fig2(path: &Path, id: &str, policy: RPolicy) -> Result<(), FigureError> {
    let mut lattice = Vec::new();
    for (es, ei) in ETA_PAIRS {
        for g in lin(1.05, 30.0, 120) {
            lattice.push(Point {
                g: Some(g),
                eta_s: es,
                eta_i: ei,
                ..Point::default()
            });
        }
    }
    let meta = meta_common(
        id,
        &[
            ("regime", "singlemode".into()),
            ("g", "lin:1.05:30:120".into()),
            ("eta_pairs", "0.75/0.75,0.85/0.85,0.75/0.85".into()),
            ("r", policy.to_string()),
        ],
    );
    noise_figure_preset(
        path,
        Regime::Singlemode,
        policy,
        lattice,
        meta,
        "single-mode R_t vs g",
        7,
        13,
    )
}

fn fig3(path: &Path) -> Result<(), FigureError> {
    let n_trunc = 12;
    let half = 6.0 * (1.0 + 4.0 * n_trunc as f64).sqrt();
    let grid = build_grid(0.0, 2.0 * half + 1.0, 1025).map_err(FigureError::Numeric)?;
    let nu = grid.points();
    let mut rows = Vec::new();
    for gp in [1.0, 2.0, 3.0] {
        let (ss, si) = bb_spectra(gp, 1.0, &grid, n_trunc).map_err(FigureError::Numeric)?;
        for (k, &x) in nu.iter().enumerate() {
            let s_in = (-x * x).exp() / std::f64::consts::PI.sqrt();
            rows.push(format!(
                "{},{},{},{},{}",
                fmt17(gp),
                fmt17(x),
                fmt17(s_in),
                fmt17(ss[k]),
                fmt17(si[k])
            ));
        }
    }
    let meta = meta_common(
        "fig3",
        &[
            ("regime", "broadband".into()),
            ("gp", "1,2,3".into()),
            ("p", "1".into()),
            ("n_trunc", n_trunc.to_string()),
            ("grid", format!("center=0 span={} points=1025", 2.0 * half + 1.0)),
        ],
    );
    let name = path.file_name().unwrap().to_string_lossy().to_string();
    let plot = format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set title 'signal and idler spectra'\n\
         plot '{name}' using 2:4 with lines, '' using 2:5 with lines\n"
    );
    write_outputs(path, "G',nu,S_in,S_s,S_i", &rows, &meta, Some(&plot))?;
    Ok(())
}

fn fig4(path: &Path) -> Result<(), FigureError> {
    let mut lattice = Vec::new();
    for p in [0.1, 1.0, 10.0] {
        for gp in lin(0.05, 4.0, 80) {
            lattice.push(Point {
                gp,
                p,
                ..Point::default()
            });
        }
    }
    let meta = meta_common(
        "fig4",
        &[
            ("regime", "broadband".into()),
            ("gp", "lin:0.05:4:80".into()),
            ("p", "0.1,1,10".into()),
            ("r", "1".into()),
            ("n_trunc", "14".into()),
        ],
    );
    noise_figure_preset(
        path,
        Regime::Broadband,
        RPolicy::Fixed(1.0),
        lattice,
        meta,
        "gain and NF vs pump power",
        1,
        7,
    )
}

fn rt_vs_gain_preset(
    path: &Path,
    id: &str,
    p_values: &[f64],
    s: f64,
    eta_pairs: &[(f64, f64)],
    policy: RPolicy,
    title: &str,
) -> Result<(), FigureError> {
    let mut lattice = Vec::new();
    for &p in p_values {
        for &(es, ei) in eta_pairs {
            for g in lin(1.2, 25.0, 100) {
                lattice.push(Point {
                    g: Some(g),
                    p,
                    s,
                    eta_s: es,
                    eta_i: ei,
                    ..Point::default()
                });
            }
        }
    }
    let meta = meta_common(
        id,
        &[
            ("regime", "broadband".into()),
            ("g", "lin:1.2:25:100".into()),
            (
                "p",
                p_values
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("s", s.to_string()),
            ("r", policy.to_string()),
            ("n_trunc", "14".into()),
        ],
    );
    noise_figure_preset(path, Regime::Broadband, policy, lattice, meta, title, 7, 13)
}

fn fig7(path: &Path, id: &str) -> Result<(), FigureError> {
    let p_axis = lin(0.25, 3.0, 61);
    let s_axis = lin(0.0, 10.0, 61);
    let mut lattice = Vec::new();
    for &p in &p_axis {
        for &s in &s_axis {
            lattice.push((p, s));
        }
    }
    let rows = rows_parallel(&lattice, |&(p, s)| {
        let params = BroadbandParams::new(3.0, p, s, 1.0, 1.0, 1.0)?.with_n_trunc(14)?;
        let report = bb_filtered_report(&params)?;
        let h = report.hterms;
        let value = match id {
            "fig7a" => report.rt_at_r,
            "fig7b" => (h.var_s() + h.var_i()) / (report.i_s + report.i_i),
            _ => 2.0 * h.correlation() / (report.i_s + report.i_i),
        };
        Ok(format!("{},{},{}", fmt17(p), fmt17(s), fmt17(value)))
    })?;
    let meta = meta_common(
        id,
        &[
            ("regime", "broadband".into()),
            ("gp", "3".into()),
            ("p", "lin:0.25:3:61".into()),
            ("s", "lin:0:10:61".into()),
            ("r", "1".into()),
            ("n_trunc", "14".into()),
        ],
    );
    let name = path.file_name().unwrap().to_string_lossy().to_string();
    let plot = format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set view map\n\
         set dgrid3d 61,61\n\
         splot '{name}' using 1:2:3 with pm3d\n"
    );
    write_outputs(path, "p,s,value", &rows, &meta, Some(&plot))?;
    Ok(())
}

pub fn run_figure(id: &str, out_dir: &Path) -> Result<PathBuf, FigureError> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{id}.csv"));
    match id {
        "fig2a" => fig2(&path, id, RPolicy::Fixed(1.0))?,
        "fig2b" => fig2(&path, id, RPolicy::Opt)?,
        "fig3" => fig3(&path)?,
        "fig4" => fig4(&path)?,
        "fig5a" => rt_vs_gain_preset(
            &path,
            id,
            &[0.1, 1.0, 10.0],
            0.0,
            &[(1.0, 1.0)],
            RPolicy::Fixed(1.0),
            "R_t vs g at r = 1",
        )?,
        "fig5b" => rt_vs_gain_preset(
            &path,
            id,
            &[0.1, 1.0, 10.0],
            0.0,
            &[(1.0, 1.0)],
            RPolicy::Opt,
            "R_t vs g at r = r_opt",
        )?,
        // r_opt and I_s/I_i are columns of the fixed schema; the r = 1 run
        // already carries both.
        "fig6" => rt_vs_gain_preset(
            &path,
            id,
            &[0.1, 1.0, 10.0],
            0.0,
            &[(1.0, 1.0)],
            RPolicy::Fixed(1.0),
            "r_opt and photon-number ratio vs g",
        )?,
        "fig7a" | "fig7b" | "fig7c" => fig7(&path, id)?,
        "fig8a" => fig8(&path, id, 0.1)?,
        "fig8b" => fig8(&path, id, 1.0)?,
        "fig9a" => rt_vs_gain_preset(
            &path,
            id,
            &[1.0],
            1.0,
            &[(1.0, 1.0), (0.85, 0.85), (0.75, 0.85), (0.75, 0.75)],
            RPolicy::Fixed(1.0),
            "R_t vs g, efficiency mismatch, r = 1",
        )?,
        "fig9b" => rt_vs_gain_preset(
            &path,
            id,
            &[1.0],
            1.0,
            &[(1.0, 1.0), (0.85, 0.85), (0.75, 0.85), (0.75, 0.75)],
            RPolicy::Opt,
            "R_t vs g, efficiency mismatch, r = r_opt",
        )?,
        other => {
            return Err(FigureError::Numeric(FopaError::InvalidArgument(format!(
                "unknown figure `{other}` (expected one of {})",
                FIGURE_IDS.join(", ")
            ))))
        }
    }
    Ok(path)
}

fn fig8(path: &Path, id: &str, p: f64) -> Result<(), FigureError> {
    let mut lattice = Vec::new();
    for s in [0.1, 1.0, 10.0] {
        for g in lin(1.2, 25.0, 100) {
            lattice.push(Point {
                g: Some(g),
                p,
                s,
                ..Point::default()
            });
        }
    }
    let meta = meta_common(
        id,
        &[
            ("regime", "broadband".into()),
            ("g", "lin:1.2:25:100".into()),
            ("p", p.to_string()),
            ("s", "0.1,1,10".into()),
            ("r", "1".into()),
            ("n_trunc", "14".into()),
        ],
    );
    noise_figure_preset(
        path,
        Regime::Broadband,
        RPolicy::Fixed(1.0),
        lattice,
        meta,
        "R_t vs g for filter bandwidths",
        7,
        13,
    )
}
