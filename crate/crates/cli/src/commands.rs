//! Argument surface and subcommand drivers. Exit codes: 0 success, 2 bad
//! configuration or usage, 3 I/O failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use east_sim::{MobilitySchedule, Position, RoundMetrics, Scheme, SimConfig, TemperatureProcess};
use serde::Deserialize;

use crate::config_file;
use crate::export::{
    create_dir, write_aggregate, write_comparison, write_manifest, write_run_outputs, RunManifest,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "east-sim",
    version,
    about = "Round-based simulator for temperature-aware adaptive transmission power control in wireless sensor networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write rounds.csv, summary.json, manifest.json.
    Run(RunArgs),
    /// Run several schemes on one seed and write their per-round differences.
    Compare(CompareArgs),
    /// Run the same configuration across several seeds.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Configuration file: flat `key = value` lines, or a manifest/config JSON.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Number of rounds.
    #[arg(long, value_name = "N")]
    pub rounds: Option<u32>,
    /// Per-round node displacement bound in meters (0 pins nodes in place).
    #[arg(long, value_name = "METERS")]
    pub node_step: Option<f64>,
    /// Per-round Gaussian temperature jitter in degrees Celsius.
    #[arg(long, value_name = "SIGMA")]
    pub temp_jitter: Option<f64>,
    /// Reference node placement.
    #[arg(long, value_enum, value_name = "WHERE")]
    pub ref_mobility: Option<RefMobilityArg>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Random seed.
    #[arg(long, value_name = "N", env = "EAST_SIM_SEED")]
    pub seed: Option<u64>,
    /// Power assignment scheme.
    #[arg(long, value_enum, value_name = "NAME")]
    pub scheme: Option<SchemeArg>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Random seed shared by every scheme.
    #[arg(long, value_name = "N", env = "EAST_SIM_SEED")]
    pub seed: Option<u64>,
    /// Scheme to include; pass at least twice (default: east and
    /// classical-per-node).
    #[arg(long = "scheme", value_enum, value_name = "NAME")]
    pub schemes: Vec<SchemeArg>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated seeds, one run each.
    #[arg(long, value_name = "N,N,...", value_delimiter = ',', required = true)]
    pub seeds: Vec<u64>,
    /// Power assignment scheme for every run.
    #[arg(long, value_enum, value_name = "NAME")]
    pub scheme: Option<SchemeArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    East,
    ClassicalPerNode,
    ClassicalRegionMax,
}

impl SchemeArg {
    pub fn into_scheme(self) -> Scheme {
        match self {
            SchemeArg::East => Scheme::East,
            SchemeArg::ClassicalPerNode => Scheme::ClassicalPerNode,
            SchemeArg::ClassicalRegionMax => Scheme::ClassicalRegionMax,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RefMobilityArg {
    /// Fixed position (the config's coordinates, corner (0, 0) by default).
    Static,
    /// Fixed at the center of the square.
    Center,
    /// One circuit: center, then around the four corners.
    Perimeter,
}

impl RefMobilityArg {
    pub fn into_schedule(self, current: MobilitySchedule) -> MobilitySchedule {
        match self {
            RefMobilityArg::Static => match current {
                MobilitySchedule::Static { pos } => MobilitySchedule::Static { pos },
                _ => MobilitySchedule::Static {
                    pos: Position::new(0.0, 0.0),
                },
            },
            RefMobilityArg::Center => MobilitySchedule::CenterHold,
            RefMobilityArg::Perimeter => MobilitySchedule::PerimeterCircuit,
        }
    }
}

// --- configuration resolution ------------------------------------------------

fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        parse_json_config(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        config_file::parse(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Accepts either a manifest.json (its config block) or a bare config JSON,
/// so a previous run's manifest reproduces it directly.
fn parse_json_config(text: &str) -> Result<SimConfig, String> {
    #[derive(Deserialize)]
    struct ManifestConfig {
        config: SimConfig,
    }
    if let Ok(m) = serde_json::from_str::<ManifestConfig>(text) {
        return Ok(m.config);
    }
    serde_json::from_str::<SimConfig>(text).map_err(|e| e.to_string())
}

/// Builds the effective configuration: defaults, then the config file, then
/// flags (with EAST_SIM_SEED behaving as a weaker --seed).
pub fn resolve_config(
    common: &CommonArgs,
    seed: Option<u64>,
    scheme: Option<SchemeArg>,
) -> Result<SimConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => load_config(path)?,
        None => SimConfig::default(),
    };
    if let Some(rounds) = common.rounds {
        config.rounds = rounds;
    }
    if let Some(step) = common.node_step {
        config.node_mobility = MobilitySchedule::RandomDisplacement { step };
    }
    if let Some(sigma) = common.temp_jitter {
        config.temp_process = TemperatureProcess::PerRoundJitter { sigma };
    }
    if let Some(arg) = common.ref_mobility {
        config.reference_mobility = arg.into_schedule(config.reference_mobility);
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(arg) = scheme {
        config.scheme = arg.into_scheme();
    }
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

fn run_engine(config: &SimConfig) -> Result<Vec<RoundMetrics>, CliError> {
    east_sim::run(config)
        .map(|(metrics, _)| metrics)
        .map_err(|e| CliError::Config(e.to_string()))
}

// --- subcommands --------------------------------------------------------------

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

pub fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let config = resolve_config(&args.common, args.seed, args.scheme)?;
    let manifest = RunManifest::new("run", &config);
    let metrics = run_engine(&config)?;
    write_run_outputs(&args.common.out, &config, &metrics, manifest)?;
    println!(
        "wrote {} ({} rounds, scheme {})",
        args.common.out.join("rounds.csv").display(),
        config.rounds,
        config.scheme
    );
    Ok(())
}

pub fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let base = resolve_config(&args.common, args.seed, None)?;
    let mut schemes: Vec<Scheme> = if args.schemes.is_empty() {
        vec![Scheme::East, Scheme::ClassicalPerNode]
    } else {
        args.schemes.iter().map(|s| s.into_scheme()).collect()
    };
    let mut seen: Vec<Scheme> = Vec::new();
    schemes.retain(|s| {
        if seen.contains(s) {
            eprintln!("warning: ignoring duplicate scheme {s}");
            false
        } else {
            seen.push(*s);
            true
        }
    });
    if schemes.len() < 2 {
        return Err(CliError::Config(
            "compare needs at least two distinct schemes (pass --scheme more than once)".into(),
        ));
    }
    let baseline = if schemes.contains(&Scheme::East) {
        Scheme::East
    } else {
        schemes[0]
    };

    create_dir(&args.common.out)?;
    let mut runs: Vec<(String, Vec<RoundMetrics>)> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let mut top = RunManifest::new("compare", &base);
    for scheme in &schemes {
        let config = SimConfig {
            scheme: *scheme,
            ..base.clone()
        };
        let sub_manifest = RunManifest::new("run", &config);
        let metrics = run_engine(&config)?;
        write_run_outputs(
            &args.common.out.join(scheme.name()),
            &config,
            &metrics,
            sub_manifest,
        )?;
        for name in ["rounds.csv", "summary.json", "manifest.json"] {
            outputs.push(format!("{}/{name}", scheme.name()));
        }
        runs.push((scheme.name().to_string(), metrics));
    }
    write_comparison(&args.common.out, baseline.name(), &runs)?;
    outputs.extend(
        ["comparison.csv", "comparison_summary.json", "manifest.json"]
            .map(String::from),
    );
    top.config.scheme = baseline;
    top.schemes = Some(schemes.iter().map(|s| s.name().to_string()).collect());
    write_manifest(&args.common.out.join("manifest.json"), top, outputs)?;
    println!(
        "wrote {} ({} schemes, baseline {})",
        args.common.out.join("comparison.csv").display(),
        schemes.len(),
        baseline
    );
    Ok(())
}

pub fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let base = resolve_config(&args.common, None, args.scheme)?;
    let mut seeds: Vec<u64> = Vec::new();
    for seed in &args.seeds {
        if seeds.contains(seed) {
            eprintln!("warning: ignoring duplicate seed {seed}");
        } else {
            seeds.push(*seed);
        }
    }

    create_dir(&args.common.out)?;
    let mut rows = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let mut top = RunManifest::new("sweep", &base);
    for seed in &seeds {
        let config = SimConfig {
            seed: *seed,
            ..base.clone()
        };
        let sub_manifest = RunManifest::new("run", &config);
        let metrics = run_engine(&config)?;
        let summary = write_run_outputs(
            &args.common.out.join(format!("seed-{seed}")),
            &config,
            &metrics,
            sub_manifest,
        )?;
        for name in ["rounds.csv", "summary.json", "manifest.json"] {
            outputs.push(format!("seed-{seed}/{name}"));
        }
        rows.push((*seed, summary));
    }
    write_aggregate(&args.common.out, &rows)?;
    outputs.extend(["aggregate.csv", "manifest.json"].map(String::from));
    top.seeds = Some(seeds.clone());
    write_manifest(&args.common.out.join("manifest.json"), top, outputs)?;
    println!(
        "wrote {} ({} seeds)",
        args.common.out.join("aggregate.csv").display(),
        seeds.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
