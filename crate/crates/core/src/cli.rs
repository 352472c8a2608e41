//! Command-line front end: `simulate`, `pattern`, `coverage`, `linkbudget`
//! and `oracle`.
//!
//! Failures print `{"error": {"kind": ..., "message": ...}}` on stderr and
//! exit with 2 (validation), 3 (numerical) or 4 (guard refusal).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::analysis::{coverage_map, radiation_pattern, Cut, GridSpec};
use crate::beamforming::{
    exhaustive_optimize, greedy_optimize, random_baseline, relaxed_upper_bound,
    statistical_optimize, OptimizationOutcome,
};
use crate::channel::{friis_power_db, link_budget, FadingModel, LinkBudgetChain};
use crate::element::{Configuration, Granularity};
use crate::error::{Error, ErrorKind, Result};
use crate::geometry::Side;
use crate::output::{
    coverage_csv, coverage_pgm, pattern_csv, to_json, OutcomeReport, RunParameters, RunReport,
};
use crate::scenefile::{parse_scene, SceneBundle};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "OMNISIM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "omnisim",
    version,
    about = "Intelligent omni-surface link simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize the surface configuration and write a run report.
    Simulate(SimulateArgs),
    /// Sweep the radiation pattern of a fixed configuration.
    Pattern(PatternArgs),
    /// Spectral-efficiency map over a grid.
    Coverage(CoverageArgs),
    /// Itemized dB link budget.
    Linkbudget(LinkBudgetArgs),
    /// Exhaustive search (small search spaces only).
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Greedy,
    Exhaustive,
    Random,
    Statistical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GranularityArg {
    Element,
    Group,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::Element => Granularity::PerElement,
            GranularityArg::Group => Granularity::PerGroup,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Reflection,
    Refraction,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CutArg {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelSource {
    Measured,
    Friis,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value = "greedy")]
    pub optimizer: OptimizerArg,
    #[arg(long, value_enum, default_value = "group")]
    pub granularity: GranularityArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::beamforming::DEFAULT_MAX_SWEEPS)]
    pub sweeps: usize,
    #[arg(long, default_value_t = crate::beamforming::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Rician K-factor for the statistical optimizer.
    #[arg(long, default_value_t = 10.0)]
    pub k_factor_db: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock time in the report (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

/// Where a fixed configuration comes from.
#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct ConfigSource {
    /// Every element in this state.
    #[arg(long)]
    pub uniform_state: Option<usize>,
    /// Comma-separated state per group.
    #[arg(long, value_delimiter = ',')]
    pub group_states: Option<Vec<usize>>,
    /// Element states from a `simulate` report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PatternArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub side: SideArg,
    #[arg(long, default_value_t = 1.0)]
    pub step_deg: f64,
    #[arg(long, default_value_t = crate::analysis::DEFAULT_EVAL_RADIUS_M)]
    pub radius_m: f64,
    #[arg(long, value_enum, default_value = "horizontal")]
    pub cut: CutArg,
    #[command(flatten)]
    pub source: ConfigSource,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// `x0,x1,y0,y1,nx,ny`; x runs along the panel, y along its normal.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    #[command(flatten)]
    pub source: ConfigSource,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LinkBudgetArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub ios_gain_db: f64,
    /// Channel gains to use; defaults to measured values when the scene has them.
    #[arg(long, value_enum)]
    pub channel: Option<ChannelSource>,
    /// User whose path is budgeted.
    #[arg(long, default_value_t = 0)]
    pub user: usize,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value = "group")]
    pub granularity: GranularityArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn write_artifact(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(Error::io(p))?,
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(Error::io("<stdout>"))?,
    }
    Ok(())
}

fn parse_grid(spec: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || Error::Usage(format!("grid must be x0,x1,y0,y1,nx,ny, got {spec:?}"));
    if parts.len() != 6 {
        return Err(bad());
    }
    let f = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let n = |s: &str| s.parse::<usize>().map_err(|_| bad());
    let grid = GridSpec {
        x0: f(parts[0])?,
        x1: f(parts[1])?,
        y0: f(parts[2])?,
        y1: f(parts[3])?,
        nx: n(parts[4])?,
        ny: n(parts[5])?,
    };
    grid.validate()?;
    Ok(grid)
}

#[derive(Deserialize)]
struct ReportStates {
    outcome: ReportOutcome,
}

#[derive(Deserialize)]
struct ReportOutcome {
    element_states: Vec<usize>,
}

fn resolve_config(source: &ConfigSource, bundle: &SceneBundle) -> Result<Configuration> {
    let config = if let Some(groups) = &source.group_states {
        Configuration::from_group_states(&bundle.layout, groups)?
    } else if let Some(path) = &source.report {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        let report: ReportStates = serde_json::from_str(&text).map_err(|e| Error::Schema {
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        })?;
        Configuration::per_element(report.outcome.element_states)
    } else {
        Configuration::uniform(
            &bundle.layout,
            source.uniform_state.unwrap_or(0),
            Granularity::PerElement,
        )
    };
    config.validate(&bundle.layout, &bundle.table)?;
    Ok(config)
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let b = parse_scene(&args.config)?;
    let granularity = Granularity::from(args.granularity);
    let outcome: OptimizationOutcome = match args.optimizer {
        OptimizerArg::Greedy => greedy_optimize(
            &b.scene,
            &b.layout,
            &b.table,
            granularity,
            args.sweeps,
            args.epsilon,
        )?,
        OptimizerArg::Exhaustive => {
            exhaustive_optimize(&b.scene, &b.layout, &b.table, granularity)?
        }
        OptimizerArg::Random => random_baseline(
            &b.scene,
            &b.layout,
            &b.table,
            granularity,
            args.trials,
            args.seed,
        )?,
        OptimizerArg::Statistical => statistical_optimize(
            &b.scene,
            &b.layout,
            &b.table,
            &FadingModel::from_db(args.k_factor_db),
            args.samples,
            args.seed,
            granularity,
            args.sweeps,
            args.epsilon,
        )?,
    };
    let optimizer = args
        .optimizer
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    let report = RunReport {
        command: "simulate".into(),
        parameters: RunParameters {
            optimizer,
            granularity: granularity.as_str().into(),
            seed: args.seed,
            sweeps: args.sweeps,
            epsilon: args.epsilon,
            trials: args.trials,
            samples: args.samples,
            k_factor_db: args.k_factor_db,
        },
        outcome: OutcomeReport::new(&outcome),
        relaxed_upper_bound: relaxed_upper_bound(&b.scene, &b.layout, &b.table)?,
        scene: b.file.clone(),
        wall_time_s: args.timing.then(|| started.elapsed().as_secs_f64()),
    };
    write_artifact(args.out.as_deref(), to_json(&report).as_bytes())
}

fn pattern(args: &PatternArgs) -> Result<()> {
    let b = parse_scene(&args.config)?;
    let config = resolve_config(&args.source, &b)?;
    let sides: &[Side] = match args.side {
        SideArg::Reflection => &[Side::Reflection],
        SideArg::Refraction => &[Side::Refraction],
        SideArg::Both => &[Side::Reflection, Side::Refraction],
    };
    let cut = match args.cut {
        CutArg::Horizontal => Cut::Horizontal,
        CutArg::Vertical => Cut::Vertical,
    };
    let p = radiation_pattern(
        &b.scene,
        &b.layout,
        &b.table,
        &config,
        sides,
        cut,
        args.step_deg,
        args.radius_m,
    )?;
    if p.skipped > 0 {
        eprintln!(
            "warning: {} probe angles skipped (side undefined)",
            p.skipped
        );
    }
    write_artifact(args.out.as_deref(), pattern_csv(&p).as_bytes())
}

fn coverage(args: &CoverageArgs) -> Result<()> {
    let b = parse_scene(&args.config)?;
    let grid = parse_grid(&args.grid)?;
    let config = resolve_config(&args.source, &b)?;
    let map = coverage_map(&b.scene, &b.layout, &b.table, &config, grid)?;
    write_artifact(args.out.as_deref(), coverage_csv(&map).as_bytes())?;
    if let Some(pgm) = &args.pgm {
        std::fs::write(pgm, coverage_pgm(&map)).map_err(Error::io(pgm))?;
    }
    Ok(())
}

/// Budget chain for one user. Measured channel gains are used when present
/// unless `source` asks for free-space predictions.
pub fn budget_chain(
    b: &SceneBundle,
    ios_gain_db: f64,
    source: Option<ChannelSource>,
    user: usize,
) -> Result<LinkBudgetChain> {
    let s = &b.scene;
    let u = *s
        .users
        .get(user)
        .ok_or_else(|| Error::Usage(format!("user {user} does not exist")))?;
    let (tx_ios, ios_rx) = match (source, s.measured) {
        (Some(ChannelSource::Measured), None) => {
            return Err(Error::validation(
                "measured",
                "scene has no measured channel gains",
            ))
        }
        (Some(ChannelSource::Measured) | None, Some(m)) => (m.tx_ios_db, m.ios_rx_db),
        (Some(ChannelSource::Friis) | None, _) => {
            let lambda = s.wavelength();
            (
                friis_power_db(s.bs_antennas[0].distance(s.panel.center), lambda)?,
                friis_power_db(s.panel.center.distance(u), lambda)?,
            )
        }
    };
    Ok(LinkBudgetChain {
        tx_power_dbm: s.tx_power_dbm,
        items: vec![
            ("tx_antenna_db".into(), s.gains.tx_antenna_db),
            ("tx_ios_channel_db".into(), tx_ios),
            ("ios_gain_db".into(), ios_gain_db),
            ("ios_rx_channel_db".into(), ios_rx),
            ("rx_antenna_db".into(), s.gains.rx_antenna_db),
            ("lna_db".into(), s.gains.lna_db),
        ],
    })
}

pub fn format_link_budget(chain: &LinkBudgetChain) -> String {
    let budget = link_budget(chain);
    let mut out = format!("tx_power_dbm {:.2}\n", budget.tx_power_dbm);
    for (name, value) in &budget.items {
        out.push_str(&format!("{name} {value:.2}\n"));
    }
    out.push_str(&format!("received_dbm {:.2}\n", budget.received_dbm));
    out
}

fn linkbudget(args: &LinkBudgetArgs) -> Result<()> {
    let b = parse_scene(&args.config)?;
    let chain = budget_chain(&b, args.ios_gain_db, args.channel, args.user)?;
    write_artifact(None, format_link_budget(&chain).as_bytes())
}

fn oracle(args: &OracleArgs) -> Result<()> {
    let b = parse_scene(&args.config)?;
    let granularity = Granularity::from(args.granularity);
    let outcome = exhaustive_optimize(&b.scene, &b.layout, &b.table, granularity)?;
    let report = RunReport {
        command: "oracle".into(),
        parameters: RunParameters {
            optimizer: "exhaustive".into(),
            granularity: granularity.as_str().into(),
            seed: 0,
            sweeps: 0,
            epsilon: 0.0,
            trials: 0,
            samples: 0,
            k_factor_db: 0.0,
        },
        outcome: OutcomeReport::new(&outcome),
        relaxed_upper_bound: relaxed_upper_bound(&b.scene, &b.layout, &b.table)?,
        scene: b.file.clone(),
        wall_time_s: None,
    };
    write_artifact(args.out.as_deref(), to_json(&report).as_bytes())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Pattern(a) => pattern(a),
        Command::Coverage(a) => coverage(a),
        Command::Linkbudget(a) => linkbudget(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn configure_threads() -> Result<()> {
    let Some(raw) = std::env::var_os(THREADS_ENV) else {
        return Ok(());
    };
    let threads = raw
        .to_str()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::validation(THREADS_ENV, "must be a positive integer"))?;
    // a second initialization in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

pub fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as ClapKind;
            if matches!(e.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            eprintln!("{}", error_json("usage", &e.to_string()));
            return ErrorKind::Validation.exit_code();
        }
    };
    match configure_threads().and_then(|_| execute(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            let kind = e.kind();
            eprintln!("{}", error_json(kind.as_str(), &e.to_string()));
            kind.exit_code()
        }
    }
}
