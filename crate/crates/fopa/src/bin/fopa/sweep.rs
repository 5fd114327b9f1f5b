//! Config-driven parameter sweeps: up to two swept axes over the regime
//! parameters, evaluated in parallel and written in lattice order.

use crate::config::{parse_values, Config, ConfigError};
use crate::run::{evaluate, gnuplot_script, write_outputs, Point, RPolicy, Regime};
use crate::CliError;
use fopa::metrics::CSV_HEADER;
use rayon::prelude::*;
use std::path::{Path, PathBuf};

/// Parameters that may carry a value list. Axis order in the output follows
/// this canonical order, not the order of keys in the file.
const AXIS_KEYS: &[&str] = &["gp", "g", "p", "s", "eta_s", "eta_i", "f2"];
const SCALAR_KEYS: &[&str] = &["regime", "out", "r", "n_trunc", "points"];

struct Spec {
    regime: Regime,
    policy: RPolicy,
    values: Vec<(String, Vec<f64>)>, // one entry per AXIS_KEY present
    n_trunc: Option<usize>,
    n_points: Option<usize>,
    out: Option<PathBuf>,
}

fn build_spec(cfg: &Config) -> Result<Spec, CliError> {
    for key in cfg.keys() {
        if !AXIS_KEYS.contains(&key) && !SCALAR_KEYS.contains(&key) {
            return Err(CliError::Config(format!(
                "unknown sweep key `{key}` (axes: {}; scalars: {})",
                AXIS_KEYS.join(", "),
                SCALAR_KEYS.join(", ")
            )));
        }
    }
    let regime: Regime = cfg
        .get("regime")
        .ok_or_else(|| CliError::Config("missing required key `regime`".into()))?
        .parse()
        .map_err(CliError::Config)?;
    let policy: RPolicy = cfg
        .get("r")
        .unwrap_or("1")
        .parse()
        .map_err(CliError::Config)?;
    let mut values = Vec::new();
    let mut swept = 0;
    for &key in AXIS_KEYS {
        if let Some(spec) = cfg.get(key) {
            let list = parse_values(spec).map_err(|e: ConfigError| CliError::Config(e.0))?;
            if list.len() > 1 {
                swept += 1;
            }
            values.push((key.to_string(), list));
        }
    }
    if swept > 2 {
        return Err(CliError::Config(format!(
            "at most 2 swept axes per run, got {swept}"
        )));
    }
    Ok(Spec {
        regime,
        policy,
        values,
        n_trunc: cfg.usize("n_trunc").map_err(|e| CliError::Config(e.0))?,
        n_points: cfg.usize("points").map_err(|e| CliError::Config(e.0))?,
        out: cfg.get("out").map(PathBuf::from),
    })
}

fn lattice(spec: &Spec) -> Vec<Point> {
    let mut points = vec![Point::default()];
    if let Some(n) = spec.n_trunc {
        points[0].n_trunc = n;
    }
    if let Some(n) = spec.n_points {
        points[0].n_points = n;
    }
    for (key, list) in &spec.values {
        let mut next = Vec::with_capacity(points.len() * list.len());
        for pt in &points {
            for &v in list {
                let mut q = *pt;
                match key.as_str() {
                    "gp" => q.gp = v,
                    "g" => q.g = Some(v),
                    "p" => q.p = v,
                    "s" => q.s = v,
                    "eta_s" => q.eta_s = v,
                    "eta_i" => q.eta_i = v,
                    _ => q.f2 = v,
                }
                next.push(q);
            }
        }
        points = next;
    }
    points
}

pub fn run_sweep(
    config_path: &Path,
    sets: &[String],
    out_flag: Option<&Path>,
    plot: bool,
) -> Result<(), CliError> {
    let mut cfg = Config::load(config_path).map_err(|e| CliError::Config(e.0))?;
    for set in sets {
        let Some((key, value)) = set.split_once('=') else {
            return Err(CliError::Config(format!(
                "--set expects KEY=VALUE, got `{set}`"
            )));
        };
        cfg.set(key.trim(), value.trim());
    }
    let spec = build_spec(&cfg)?;
    let points = lattice(&spec);

    let results: Vec<Result<String, fopa::FopaError>> = points
        .par_iter()
        .map(|pt| evaluate(spec.regime, pt, spec.policy))
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for (pt, res) in points.iter().zip(results) {
        rows.push(res.map_err(|e| {
            CliError::Numeric(format!(
                "at G'={} g={:?} p={} s={} eta_s={} eta_i={}: {e}",
                pt.gp, pt.g, pt.p, pt.s, pt.eta_s, pt.eta_i
            ))
        })?);
    }

    let out = out_flag
        .map(Path::to_path_buf)
        .or(spec.out)
        .ok_or_else(|| CliError::Config("no output path (config key `out` or --out)".into()))?;
    let mut meta = vec![
        ("command".to_string(), "sweep".to_string()),
        ("config".to_string(), config_path.display().to_string()),
        ("regime".to_string(), spec.regime.to_string()),
        ("r".to_string(), spec.policy.to_string()),
        (
            "n_trunc".to_string(),
            spec.n_trunc.unwrap_or(Point::default().n_trunc).to_string(),
        ),
    ];
    for (key, list) in &spec.values {
        meta.push((
            key.clone(),
            list.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ));
    }
    let script = plot.then(|| {
        gnuplot_script(
            &out.file_name().unwrap().to_string_lossy(),
            7,
            13,
            "sweep",
        )
    });
    write_outputs(&out, CSV_HEADER, &rows, &meta, script.as_deref())?;
    println!("wrote {}", out.display());
    Ok(())
}
