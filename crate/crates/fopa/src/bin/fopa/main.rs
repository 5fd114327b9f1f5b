//! Command-line front end: single-point evaluations, sweeps, figure presets,
//! and the acceptance verifier.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical/truncation error,
//! 4 verification failure.

mod config;
mod figures;
mod run;
mod sweep;

use clap::{Args, Parser, Subcommand};
use config::Config;
use fopa::FopaError;
use run::{evaluate, print_row, Point, RPolicy, Regime};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fopa", version, about = "Quantum-noise observables of a pulse-pumped fiber OPA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Flat key=value config file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Detection ratio: a number, `opt`, or `ratio`
    #[arg(long)]
    r: Option<String>,
    /// Signal detection efficiency
    #[arg(long)]
    eta_s: Option<f64>,
    /// Idler detection efficiency
    #[arg(long)]
    eta_i: Option<f64>,
    /// Write the CSV row(s) to this path instead of stdout
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-frequency-mode closed forms at photon-number gain g
    Singlemode {
        #[command(flatten)]
        common: Common,
        /// Photon-number gain (>= 1)
        #[arg(long)]
        g: Option<f64>,
    },
    /// Factorable-JSF closed forms at gain coefficient G and mode overlap |F|^2
    Factorable {
        #[command(flatten)]
        common: Common,
        /// Gain coefficient G (total gain is 1 + |F|^2 sinh^2 G)
        #[arg(long)]
        gc: Option<f64>,
        /// Squared overlap |F|^2 between input signal and amplified mode
        #[arg(long)]
        f2: Option<f64>,
    },
    /// Broadband-JSF analytic series
    Broadband {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bb: BbArgs,
    },
    /// Grid Green-function engine (numerical cross-check of `broadband`)
    Engine {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bb: BbArgs,
        /// Frequency grid points per axis
        #[arg(long)]
        points: Option<usize>,
    },
    /// Parameter sweep driven by a config file (up to two axes)
    Sweep {
        /// Config file; see `sweep --help-config` keys in the README
        #[arg(long)]
        config: PathBuf,
        /// Override config keys, e.g. --set p=2 --set r=opt
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Output CSV path (overrides `out` in the config)
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also emit a gnuplot script next to the CSV
        #[arg(long)]
        plot: bool,
    },
    /// Reproduce a paper figure dataset (fig2a .. fig9b)
    #[command(name = "fig", visible_aliases = ["figure"])]
    Fig {
        /// Figure id: fig2a, fig2b, fig3, fig4, fig5a, fig5b, fig6,
        /// fig7a, fig7b, fig7c, fig8a, fig8b, fig9a, fig9b
        id: String,
        /// Output directory
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run the acceptance-criteria suite and report pass/fail per criterion
    Verify {
        /// Override the conservation-check truncation order (criterion 1)
        #[arg(long)]
        n_trunc: Option<usize>,
    },
}

#[derive(Args, Debug, Default)]
struct BbArgs {
    /// Pump gain coefficient G'
    #[arg(long)]
    gp: Option<f64>,
    /// Target photon-number gain (alternative to --gp; solved via G')
    #[arg(long, conflicts_with = "gp")]
    g: Option<f64>,
    /// Pump-to-signal bandwidth ratio p = sigma_p / sigma
    #[arg(long)]
    p: Option<f64>,
    /// Pump-to-filter bandwidth ratio s = sigma_p / sigma_f (0 = no filter)
    #[arg(long)]
    s: Option<f64>,
    /// Series truncation order N
    #[arg(long)]
    n_trunc: Option<usize>,
}

enum CliError {
    Config(String),
    Numeric(String),
    Verification,
}

impl From<FopaError> for CliError {
    fn from(e: FopaError) -> Self {
        match e {
            FopaError::InvalidArgument(_) => Self::Config(e.to_string()),
            _ => Self::Numeric(e.to_string()),
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Config(e.to_string())
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<Config, CliError> {
    match path {
        Some(p) => Ok(Config::load(p)?),
        None => Ok(Config::default()),
    }
}

fn resolve_f64(flag: Option<f64>, cfg: &Config, key: &str, default: f64) -> Result<f64, CliError> {
    Ok(flag.or(cfg.f64(key)?).unwrap_or(default))
}

fn resolve_policy(common: &Common, cfg: &Config) -> Result<RPolicy, CliError> {
    let text = common
        .r
        .clone()
        .or_else(|| cfg.get("r").map(str::to_string))
        .unwrap_or_else(|| "1".to_string());
    text.parse::<RPolicy>().map_err(CliError::Config)
}

fn emit(common: &Common, row: String) -> Result<(), CliError> {
    match &common.out {
        Some(path) => {
            run::write_outputs(path, fopa::metrics::CSV_HEADER, &[row], &[], None)?;
            Ok(())
        }
        None => {
            print_row(&row);
            Ok(())
        }
    }
}

fn point_from(common: &Common, bb: &BbArgs, cfg: &Config) -> Result<Point, CliError> {
    let mut pt = Point {
        gp: resolve_f64(bb.gp, cfg, "gp", 1.0)?,
        g: match bb.g {
            Some(g) => Some(g),
            None => cfg.f64("g")?,
        },
        p: resolve_f64(bb.p, cfg, "p", 1.0)?,
        s: resolve_f64(bb.s, cfg, "s", 0.0)?,
        eta_s: resolve_f64(common.eta_s, cfg, "eta_s", 1.0)?,
        eta_i: resolve_f64(common.eta_i, cfg, "eta_i", 1.0)?,
        ..Point::default()
    };
    if let Some(n) = bb.n_trunc.or(cfg.usize("n_trunc")?) {
        pt.n_trunc = n;
    }
    Ok(pt)
}

fn real_main() -> Result<(), CliError> {
    init_thread_pool();
    let cli = Cli::parse();
    match cli.command {
        Command::Singlemode { common, g } => {
            let cfg = load_config(common.config.as_ref())?;
            let policy = resolve_policy(&common, &cfg)?;
            let pt = Point {
                g: Some(resolve_f64(g, &cfg, "g", 2.0)?),
                eta_s: resolve_f64(common.eta_s, &cfg, "eta_s", 1.0)?,
                eta_i: resolve_f64(common.eta_i, &cfg, "eta_i", 1.0)?,
                ..Point::default()
            };
            emit(&common, evaluate(Regime::Singlemode, &pt, policy)?)
        }
        Command::Factorable { common, gc, f2 } => {
            let cfg = load_config(common.config.as_ref())?;
            let policy = resolve_policy(&common, &cfg)?;
            let pt = Point {
                gp: resolve_f64(gc, &cfg, "gc", 1.0)?,
                f2: resolve_f64(f2, &cfg, "f2", 1.0)?,
                ..Point::default()
            };
            emit(&common, evaluate(Regime::Factorable, &pt, policy)?)
        }
        Command::Broadband { common, bb } => {
            let cfg = load_config(common.config.as_ref())?;
            let policy = resolve_policy(&common, &cfg)?;
            let pt = point_from(&common, &bb, &cfg)?;
            emit(&common, evaluate(Regime::Broadband, &pt, policy)?)
        }
        Command::Engine { common, bb, points } => {
            let cfg = load_config(common.config.as_ref())?;
            let policy = resolve_policy(&common, &cfg)?;
            let mut pt = point_from(&common, &bb, &cfg)?;
            if let Some(n) = points.or(cfg.usize("points")?) {
                pt.n_points = n;
            }
            emit(&common, evaluate(Regime::Engine, &pt, policy)?)
        }
        Command::Sweep {
            config,
            sets,
            out,
            plot,
        } => sweep::run_sweep(&config, &sets, out.as_deref(), plot),
        Command::Fig { id, out_dir } => {
            let path = figures::run_figure(&id, &out_dir).map_err(|e| match e {
                figures::FigureError::Numeric(FopaError::InvalidArgument(m)) => {
                    CliError::Config(m)
                }
                figures::FigureError::Numeric(err) => CliError::Numeric(err.to_string()),
                figures::FigureError::Io(err) => CliError::Config(err.to_string()),
            })?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Verify { n_trunc } => verify(n_trunc),
    }
}

fn verify(n_trunc: Option<usize>) -> Result<(), CliError> {
    let mut outcomes = fopa::criteria::run_all();
    if let Some(n) = n_trunc {
        // Re-run the conservation check at the requested truncation order.
        let mut worst = (0.0f64, 0.0, 0.0);
        for gp in [0.5, 1.0, 2.0, 3.0, 4.0] {
            for p in [0.0, 0.1, 1.0, 10.0] {
                let res = fopa::broadband::conservation_residual(gp, p, n);
                if res > worst.0 {
                    worst = (res, gp, p);
                }
            }
        }
        outcomes[0].passed = worst.0 < 1e-11;
        outcomes[0].details = format!(
            "at N = {n}: worst residual {:.3e} at G' = {}, p = {}",
            worst.0, worst.1, worst.2
        );
    }
    let mut all_pass = true;
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{}] {} -- {}", o.id, status, o.name, o.details);
        all_pass &= o.passed;
    }
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Verification)
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("FOPA_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Verification) => ExitCode::from(4),
    }
}
