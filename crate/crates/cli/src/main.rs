//! `runtumble`: simulate run-and-tumble ensembles, analyze their path
//! lengths and MSD, and evaluate the fractional diffusion limit.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for usage or
//! configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use runtumble::config::RunConfig;
use runtumble::io::{self, RunManifest, MANIFEST_FILE, MSD_FILE, POSITIONS_FILE, RUNS_FILE};
use runtumble::limit_theory::mu_theoretical;
use runtumble::pipeline::{self, LimitsReport, LimitsRequest};
use runtumble::simulator::Case;
use runtumble::validation::{self, Status};
use runtumble::Error;

/// Prints to stdout, ending the process quietly when the reader has gone
/// away (for example when piped into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        if let Err(e) = write!(std::io::stdout(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            return Err(e.into());
        }
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        out!($($arg)*);
        out!("\n");
    }};
}

const DEFAULT_OUT_DIR: &str = "runtumble-out";

#[derive(Parser)]
#[command(
    name = "runtumble",
    version,
    about = "Run-and-tumble chemotaxis simulator and Levy-walk analysis"
)]
struct Cli {
    /// Log level for diagnostics on stderr (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an ensemble and write runs.csv, msd.csv, activity_hist.csv,
    /// positions.csv and manifest.toml.
    Simulate(SimulateArgs),
    /// Fit the path-length tail and the MSD exponent of a finished run.
    Analyze(AnalyzeArgs),
    /// Report the fractional-limit constants of a parameter family.
    Limits(LimitsArgs),
    /// Compare final particle positions with the fractional heat solution.
    Compare(CompareArgs),
    /// Run the invariant suite on a configuration.
    Validate(ConfigArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    #[value(name = "I")]
    I,
    #[value(name = "II")]
    Ii,
    #[value(name = "III")]
    Iii,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::I => Case::I,
            CaseArg::Ii => Case::II,
            CaseArg::Iii => Case::III,
        }
    }
}

/// Base configuration plus key overrides.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// Preset parameter set used as the base configuration.
    #[arg(long, value_enum, conflicts_with = "config")]
    case: Option<CaseArg>,
    /// TOML config or run manifest used as the base configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    particles: Option<String>,
    /// Time step in seconds.
    #[arg(long)]
    dt: Option<String>,
    /// Horizon in seconds.
    #[arg(long = "T")]
    total_time: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long = "n")]
    n: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// Adaptation time in seconds.
    #[arg(long = "Ta")]
    adaptation_time: Option<String>,
    /// Cell speed in mm/s.
    #[arg(long)]
    v0: Option<String>,
    /// milstein or eulermaruyama.
    #[arg(long)]
    scheme: Option<String>,
    /// MSD fit window `lo,hi` in seconds.
    #[arg(long)]
    fit_window: Option<String>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long)]
    workers: Option<String>,
    /// Any other config key, as `key=value` or `section.key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn base(&self) -> runtumble::Result<RunConfig> {
        match (&self.config, self.case) {
            (Some(path), _) => RunConfig::load(path),
            (None, Some(case)) => Ok(RunConfig::preset(case.into())),
            (None, None) => Ok(RunConfig::preset(Case::I)),
        }
    }

    fn resolve(&self) -> runtumble::Result<RunConfig> {
        let mut cfg = self.base()?;
        let named = [
            ("seed", &self.seed),
            ("particles", &self.particles),
            ("dt", &self.dt),
            ("T", &self.total_time),
            ("theta", &self.theta),
            ("n", &self.n),
            ("beta", &self.beta),
            ("Ta", &self.adaptation_time),
            ("v0", &self.v0),
            ("scheme", &self.scheme),
            ("fit_window", &self.fit_window),
            ("workers", &self.workers),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for pair in &self.set {
            let (key, value) = pair.split_once('=').ok_or_else(|| Error::Config {
                field: pair.clone(),
                message: "expected key=value".into(),
            })?;
            cfg.set(key.trim(), value)?;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "RUNTUMBLE_OUT_DIR", default_value = DEFAULT_OUT_DIR)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutDir,
    /// Print a progress line every 10% of the particles.
    #[arg(long)]
    progress: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directory holding the run; defaults to the output directory.
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Run-length ledger; defaults to DIR/runs.csv.
    #[arg(long)]
    runs: Option<PathBuf>,
    /// MSD series; defaults to DIR/msd.csv when present.
    #[arg(long)]
    msd: Option<PathBuf>,
    /// Manifest supplying the horizon and analysis settings; defaults to
    /// DIR/manifest.toml when present.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// MSD fit window `lo,hi` in seconds.
    #[arg(long)]
    fit_window: Option<String>,
    /// Tail-fit count window `lo,hi`.
    #[arg(long)]
    tail_window: Option<String>,
    /// Path-length bin width in mm.
    #[arg(long)]
    dx: Option<String>,
    /// r² lead one model needs over the other.
    #[arg(long)]
    r2_margin: Option<String>,
    /// Horizon in seconds, used for the bin count without a manifest.
    #[arg(long = "T")]
    total_time: Option<String>,
    /// Print the JSON report instead of the text report.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct LimitsArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Scaled cell speed entering the flux constant.
    #[arg(long = "v0-scaled", default_value_t = 1.0)]
    v0_scaled: f64,
    /// Override of the fractional exponent.
    #[arg(long)]
    mu: Option<f64>,
    /// Velocity dimension.
    #[arg(long, default_value_t = 1)]
    dimension: usize,
    /// Print the JSON report instead of the text report.
    #[arg(long)]
    json: bool,
    /// Also write limits.json into this directory.
    #[arg(long)]
    write_to: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory holding the run; defaults to the output directory.
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Final positions; defaults to DIR/positions.csv.
    #[arg(long)]
    positions: Option<PathBuf>,
    /// Limits report (JSON) supplying mu and the physical nu.
    #[arg(long)]
    limits: Option<PathBuf>,
    /// Fractional exponent, overriding the limits report.
    #[arg(long)]
    mu: Option<f64>,
    /// Diffusivity in mm^(1+mu)/s, overriding the limits report.
    #[arg(long)]
    nu: Option<f64>,
    /// Fit nu to the positions instead of using a given value.
    #[arg(long, conflicts_with = "nu")]
    fit: bool,
    /// Observation time in seconds; defaults to the manifest horizon.
    #[arg(long)]
    time: Option<f64>,
    /// Grid points (power of two).
    #[arg(long, default_value_t = 256)]
    points: usize,
    /// Grid half-width in mm.
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    out: OutDir,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(command: Command) -> runtumble::Result<ExitCode> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Analyze(args) => analyze(args),
        Command::Limits(args) => limits(args),
        Command::Compare(args) => compare(args),
        Command::Validate(args) => validate(args),
    }
}

fn simulate(args: SimulateArgs) -> runtumble::Result<ExitCode> {
    let cfg = args.config.resolve()?;
    let (out, manifest) = pipeline::run_simulation(&cfg, args.progress)?;
    let files = io::write_outputs(&args.out.out_dir, &out, &manifest)?;
    outln!(
        "{} particles, {} runs, {} s horizon ({} regime) in {:.2} s",
        cfg.sim.particles,
        out.ledger.count(),
        cfg.sim.total_time,
        manifest.report.regime,
        manifest.run.runtime_s
    );
    outln!("wrote {}", files.runs.display());
    outln!("wrote {}", files.msd.display());
    outln!("wrote {}", files.activity.display());
    outln!("wrote {}", files.positions.display());
    outln!("wrote {}", files.manifest.display());
    Ok(ExitCode::SUCCESS)
}

fn load_manifest(path: &Path) -> runtumble::Result<RunManifest> {
    let text = std::fs::read_to_string(path)?;
    RunManifest::from_toml_str(&text, &path.display().to_string())
}

fn analyze(args: AnalyzeArgs) -> runtumble::Result<ExitCode> {
    let dir = args.dir.clone().unwrap_or_else(|| args.out.out_dir.clone());
    let runs_path = args.runs.clone().unwrap_or_else(|| dir.join(RUNS_FILE));
    let msd_path = args
        .msd
        .clone()
        .or_else(|| Some(dir.join(MSD_FILE)).filter(|p| p.exists()));
    let manifest_path = args
        .manifest
        .clone()
        .or_else(|| Some(dir.join(MANIFEST_FILE)).filter(|p| p.exists()));

    let mut cfg = match &manifest_path {
        Some(p) => load_manifest(p)?.config,
        None => RunConfig::default(),
    };
    let ledger = io::read_runs(&runs_path)?;
    let msd = msd_path.as_deref().map(io::read_msd).transpose()?;
    if manifest_path.is_none() {
        if let Some(last) = msd.as_ref().and_then(|m| m.times.last()) {
            cfg.set("T", &format!("{last:?}"))?;
        }
    }
    for (key, value) in [
        ("fit_window", &args.fit_window),
        ("tail_window", &args.tail_window),
        ("dx", &args.dx),
        ("r2_margin", &args.r2_margin),
        ("T", &args.total_time),
    ] {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }

    let report = pipeline::analyze(&ledger, msd.as_ref(), &cfg.analysis, cfg.sim.total_time)?;
    let json = report.to_json();
    std::fs::create_dir_all(&dir)?;
    let report_path = dir.join("analysis.json");
    io::write_atomic(&report_path, json.as_bytes())?;
    if args.json {
        outln!("{json}");
    } else {
        out!("{}", report.to_text());
        outln!("wrote {}", report_path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn limits(args: LimitsArgs) -> runtumble::Result<ExitCode> {
    let cfg = args.config.resolve()?;
    let req = LimitsRequest {
        family: cfg.family_params(),
        v0_scaled: args.v0_scaled,
        dimension: args.dimension,
        mu_override: args.mu,
        physical: Some((cfg.scaling.length, cfg.scaling.t_tumble, cfg.sim.v0)),
    };
    let report = pipeline::limits(&req)?;
    let json = report.to_json();
    if let Some(dir) = &args.write_to {
        std::fs::create_dir_all(dir)?;
        io::write_atomic(&dir.join("limits.json"), json.as_bytes())?;
    }
    if args.json {
        outln!("{json}");
    } else {
        out!("{}", report.to_text());
    }
    Ok(ExitCode::SUCCESS)
}

fn compare(args: CompareArgs) -> runtumble::Result<ExitCode> {
    let dir = args.dir.clone().unwrap_or_else(|| args.out.out_dir.clone());
    let positions = io::read_positions(
        &args
            .positions
            .clone()
            .unwrap_or_else(|| dir.join(POSITIONS_FILE)),
    )?;
    let limits: Option<LimitsReport> = match &args.limits {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Some(serde_json::from_str(&text).map_err(|e| Error::Schema {
                file: p.display().to_string(),
                message: e.to_string(),
            })?)
        }
        None => None,
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = if manifest_path.exists() {
        Some(load_manifest(&manifest_path)?)
    } else {
        None
    };
    let mu = match args.mu.or(limits.as_ref().map(|l| l.mu)) {
        Some(mu) => Some(mu),
        None => manifest
            .as_ref()
            .map(|m| mu_theoretical(&m.config.family_params()))
            .transpose()?
            .map(|m| m.value),
    };
    let mu = mu.ok_or_else(|| {
        Error::InvalidInput("give --mu, --limits or a directory with a manifest".into())
    })?;
    let nu = if args.fit {
        None
    } else {
        Some(
            args.nu
                .or(limits.as_ref().and_then(|l| l.nu_physical))
                .ok_or_else(|| {
                    Error::InvalidInput("give --nu, --limits with a finite nu, or --fit".into())
                })?,
        )
    };
    let time = match (args.time, &manifest) {
        (Some(t), _) => t,
        (None, Some(m)) => m.config.sim.total_time,
        (None, None) => {
            return Err(Error::InvalidInput(
                "give --time or a directory with a manifest".into(),
            ));
        }
    };
    let report = pipeline::compare(&positions, mu, nu, time, args.half_width, args.points)?;
    let json = report.to_json();
    std::fs::create_dir_all(&dir)?;
    io::write_atomic(&dir.join("compare.json"), json.as_bytes())?;
    if args.json {
        outln!("{json}");
    } else {
        out!("{}", report.to_text());
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ConfigArgs) -> runtumble::Result<ExitCode> {
    let cfg = args.resolve()?;
    let outcomes = validation::run_suite(&cfg)?;
    let mut failed = false;
    for o in &outcomes {
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed = true;
                "FAIL"
            }
            Status::Skip => "INFO",
        };
        outln!("{tag}  {:<40} {}", o.name, o.detail);
    }
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}
