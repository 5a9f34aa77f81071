//! Command-line experiment runner.
//!
//! Every subcommand reads an optional TOML config, applies flag overrides,
//! validates the result and writes its artifacts (CSV tables, SVG plots,
//! `summary.json`, the config as given and as used) to the output directory.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 invalid input,
//! 3 resource or resolution failure.

pub mod commands;
pub mod config;
pub mod golden;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{parse_modes, ExperimentConfig};
pub use golden::{golden_check, GoldenReport, Manifest, DEFAULT_TOLERANCE, REDUCTION_FLOOR};
pub use output::{Check, Summary};

use crate::error::{Error, Result};
use crate::geometry::ExpFamily;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const THREADS_ENV: &str = "FERMI_FORGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fermi-forge", version, about = "Minimal-surface inverse problem laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Newton solve of the minimal graph equation
    Forward(Common),
    /// Nonlinear DN map and the area difference check
    Dnmap(Common),
    /// Integral identities of the second or third linearization
    Identities {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Decay of CGO remainders over an h sweep
    CgoDecay {
        #[command(flatten)]
        common: Common,
        /// phase label; repeat for several
        #[arg(long)]
        phase: Vec<String>,
        /// comma-separated exponents from {2, 4}
        #[arg(long, value_delimiter = ',')]
        p_norms: Vec<u32>,
        /// spectral grid size
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Pointwise recovery at an interior point
    Recover {
        #[command(flatten)]
        common: Common,
        /// k1, h2 or conformal
        #[arg(long)]
        target: Option<String>,
        /// "x,y"
        #[arg(long)]
        z0: Option<String>,
        /// "h_min,h_max,count"
        #[arg(long)]
        h_sweep: Option<String>,
        /// target bump "amp,cx,cy,width"
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Gauge, holomorphic-trace, Carleman, WKB and period checks
    CalderonChecks {
        #[command(flatten)]
        common: Common,
        /// gauge, holo-trace, carleman, wkb, periods or all
        #[arg(long)]
        check: Option<String>,
        /// re-z or re-z2
        #[arg(long)]
        weight: Option<String>,
    },
    /// Compare CSV outputs with a golden directory
    Golden {
        output: PathBuf,
        golden: PathBuf,
        /// tolerance manifest (default: <golden>/tolerances.toml)
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

/// Flags shared by the experiment subcommands; each overrides the config.
#[derive(Debug, Default, Args)]
pub struct Common {
    /// TOML experiment config
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// disk or annulus
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub level: Option<usize>,
    /// comma-separated refinement levels
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<usize>,
    /// catalog family name
    #[arg(long)]
    pub family: Option<String>,
    /// family parameters as JSON, e.g. '{"alpha":{"c0":0.5}}'
    #[arg(long)]
    pub params: Option<String>,
    /// boundary data; repeat for several (forward and dnmap use the first)
    #[arg(long)]
    pub boundary: Vec<String>,
    #[arg(long)]
    pub nf: Option<usize>,
    #[arg(long)]
    pub h_min: Option<f64>,
    #[arg(long)]
    pub h_max: Option<f64>,
    #[arg(long)]
    pub h_count: Option<usize>,
    /// comma-separated difference steps
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Newton residual bound
    #[arg(long)]
    pub tol: Option<f64>,
}

fn parse_floats<const N: usize>(field: &str, s: &str) -> Result<[f64; N]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Invalid(format!("{field}: expected {N} comma-separated numbers, got '{s}'")))?;
    v.try_into().map_err(|_| Error::Invalid(format!("{field}: expected {N} comma-separated numbers, got '{s}'")))
}

impl Common {
    /// Loads the config file (if any) and applies the flags. Returns the
    /// config and the file text as given.
    pub fn resolve(&self, command: &str) -> Result<(ExperimentConfig, Option<String>)> {
        let (mut cfg, text) = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::Invalid(format!("config {}: {e}", p.display())))?;
                (ExperimentConfig::from_toml(&text)?, Some(text))
            }
            None => (ExperimentConfig::default(), None),
        };
        if let Some(v) = &self.out {
            cfg.output = Some(v.clone());
        }
        if cfg.output.is_none() {
            cfg.output = Some(PathBuf::from("out").join(command));
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.domain {
            cfg.mesh.domain = v.clone();
        }
        if let Some(v) = self.level {
            cfg.mesh.level = v;
            cfg.mesh.levels.clear();
        }
        if !self.levels.is_empty() {
            cfg.mesh.levels = self.levels.clone();
        }
        if let Some(v) = &self.family {
            cfg.family.name = v.clone();
            cfg.family.params = None;
        }
        if let Some(v) = &self.params {
            let p: ExpFamily = serde_json::from_str(v).map_err(|e| Error::Invalid(format!("family.params: {e}")))?;
            cfg.family.params = Some(p);
        }
        if !self.boundary.is_empty() {
            if matches!(command, "forward" | "dnmap") {
                cfg.forward.boundary = self.boundary[0].clone();
            } else {
                cfg.boundary.data = self.boundary.clone();
            }
        }
        if let Some(v) = self.nf {
            cfg.boundary.nf = v;
        }
        if self.h_min.is_some() {
            cfg.sweep.h_min = self.h_min;
        }
        if self.h_max.is_some() {
            cfg.sweep.h_max = self.h_max;
        }
        if self.h_count.is_some() {
            cfg.sweep.count = self.h_count;
        }
        if !self.eps.is_empty() {
            cfg.eps.steps = self.eps.clone();
        }
        if let Some(v) = self.tol {
            cfg.tolerances.newton = v;
        }
        Ok((cfg, text))
    }
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Calibration(_) => EXIT_ASSERTION,
        Error::Invalid(_) | Error::LoopNotInterior(_) | Error::NotSpd { .. } | Error::DegenerateTriangle(_) => {
            EXIT_VALIDATION
        }
        Error::UnderResolved { .. }
        | Error::Resource(_)
        | Error::Io(_)
        | Error::NewtonDivergence { .. }
        | Error::SeriesDivergence { .. }
        | Error::EigenvalueCollision { .. }
        | Error::OutOfRange { .. } => EXIT_RESOURCE,
    }
}

/// Sizes the global thread pool from `FERMI_FORGE_THREADS` when set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::Invalid(format!("{THREADS_ENV}: expected a positive integer, got '{v}'")))?;
    // a second initialization in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn prepare(cfg: &ExperimentConfig, text: Option<&str>, command: &str) -> Result<output::Run> {
    cfg.validate()?;
    let dir = cfg.output.clone().expect("output set by resolve");
    let mut run = output::Run::new(dir, command, cfg.seed)?;
    if let Some(t) = text {
        run.text("config.toml", t)?;
    }
    run.text("effective.toml", &cfg.to_toml())?;
    Ok(run)
}

/// Runs a parsed command. `Ok` carries the summary (or the golden report);
/// the caller turns it into an exit code with [`outcome_code`].
pub fn run(cli: Cli) -> Result<Outcome> {
    init_threads()?;
    let (name, common) = match &cli.command {
        Command::Forward(c) => ("forward", c),
        Command::Dnmap(c) => ("dnmap", c),
        Command::Identities { common, .. } => ("identities", common),
        Command::CgoDecay { common, .. } => ("cgo-decay", common),
        Command::Recover { common, .. } => ("recover", common),
        Command::CalderonChecks { common, .. } => ("calderon-checks", common),
        Command::Golden { output, golden, manifest } => {
            return Ok(Outcome::Golden(golden_check(output, golden, manifest.as_deref())?));
        }
    };
    let (mut cfg, text) = common.resolve(name)?;
    match &cli.command {
        Command::Identities { order: Some(o), .. } => cfg.identities.order = *o,
        Command::CgoDecay { phase, p_norms, grid, .. } => {
            if !phase.is_empty() {
                cfg.cgo.phases = phase.clone();
            }
            if !p_norms.is_empty() {
                cfg.cgo.p_norms = p_norms.clone();
            }
            if let Some(n) = grid {
                cfg.cgo.n = *n;
            }
        }
        Command::Recover { target, z0, h_sweep, profile, grid, .. } => {
            if let Some(t) = target {
                cfg.recover.target = t.clone();
            }
            if let Some(z) = z0 {
                cfg.recover.z0 = parse_floats::<2>("recover.z0", z)?;
            }
            if let Some(s) = h_sweep {
                let [lo, hi, n] = parse_floats::<3>("sweep", s)?;
                if n.fract() != 0.0 || n < 0.0 {
                    return Err(Error::Invalid(format!("sweep.count: expected an integer, got {n}")));
                }
                cfg.sweep.h_min = Some(lo);
                cfg.sweep.h_max = Some(hi);
                cfg.sweep.count = Some(n as usize);
            }
            if let Some(p) = profile {
                cfg.recover.profile = Some(parse_floats::<4>("recover.profile", p)?);
            }
            if let Some(n) = grid {
                cfg.recover.n = *n;
            }
        }
        Command::CalderonChecks { check, weight, .. } => {
            if let Some(c) = check {
                cfg.calderon.check = c.clone();
            }
            if let Some(w) = weight {
                cfg.calderon.weight = w.clone();
            }
        }
        _ => {}
    }
    let run = prepare(&cfg, text.as_deref(), name)?;
    let summary = match name {
        "forward" => commands::forward(&cfg, run),
        "dnmap" => commands::dnmap(&cfg, run),
        "identities" => commands::identities(&cfg, run),
        "cgo-decay" => commands::cgo_decay(&cfg, run),
        "recover" => commands::recover(&cfg, run),
        _ => commands::calderon(&cfg, run),
    }?;
    Ok(Outcome::Summary(summary))
}

#[derive(Debug)]
pub enum Outcome {
    Summary(Summary),
    Golden(GoldenReport),
}

impl Outcome {
    pub fn code(&self) -> i32 {
        let ok = match self {
            Outcome::Summary(s) => s.passed,
            Outcome::Golden(g) => g.is_clean(),
        };
        if ok {
            EXIT_PASS
        } else {
            EXIT_ASSERTION
        }
    }

    pub fn render(&self) -> String {
        match self {
            Outcome::Golden(g) => g.render(),
            Outcome::Summary(s) => {
                let mut out = String::new();
                for c in &s.checks {
                    out += &format!("{} {}: {:.6e} {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.bound);
                }
                out + &format!("{}: {}\n", s.command, if s.passed { "all checks passed" } else { "checks failed" })
            }
        }
    }
}

/// Parses `args`, runs, prints the report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_PASS };
        }
    };
    match run(cli) {
        Ok(o) => {
            print!("{}", o.render());
            o.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `summary.json` from a run directory.
pub fn read_summary(dir: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(dir.join("summary.json"))?;
    serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("summary.json: {e}")))
}
