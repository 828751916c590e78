//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 internal
//! consistency failure (results discarded), 1 anything else, including a
//! failing selftest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ramstat_core::cover::CoverSpecJson;
use ramstat_core::ramify::{CountingMode, SmallPrimePolicy};
use ramstat_core::stats::FilterTag;
use serde_json::{json, Value};

use crate::config::{
    parse_coeff_list, ConfigError, Experiment, ExperimentConfig, OutputFormat, ResolvedConfig,
    WORKERS_ENV,
};
use crate::experiments::{ram_record, record_line, records_table, run_experiments};
use crate::output::Table;
use crate::selftest::{run_selftest, Mutation, SelftestOptions, DEFAULT_SCALE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONSISTENCY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ramstat",
    version,
    about = "Ramified-prime counts and their statistics over specializations T = n"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ram(n), ω(P_E(n)) and the defect at a single point.
    Ram(CommonArgs),
    /// Per-n records for 1..=N.
    Sweep(CommonArgs),
    /// Normalized moments of Ram(n).
    Moments(CommonArgs),
    /// Empirical CDF of normalized Ram(n) against the normal CDF.
    Cdf(CommonArgs),
    /// Fraction of n <= N with Ram(n) <= C.
    Density(CommonArgs),
    /// Fraction of n <= N outside (1 ± eps)·r·ln ln n.
    NormalOrder(CommonArgs),
    /// Distribution of Ram - ω(P_E) + Σ m_e(P_i).
    Lemma5Audit(CommonArgs),
    /// Averages of m_a(|P_E(n)|)^k.
    Lemma6(CommonArgs),
    /// Normalized moments of ω(|P_E(n)|).
    Halberstam(CommonArgs),
    /// Several experiments from one sweep (default: all but ram and sweep).
    Run(CommonArgs),
    /// Invariant suites for all modules.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Quadratic cover Q(T, sqrt f): ascending coefficients, e.g. "0,1".
    #[arg(long, allow_hyphen_values = true)]
    pub quadratic_f: Option<String>,
    /// Cover JSON file.
    #[arg(long)]
    pub cover: Option<PathBuf>,
    /// Sweep bound.
    #[arg(long = "N")]
    pub n_max: Option<u64>,
    /// Single point (ram).
    #[arg(long = "n")]
    pub n: Option<u64>,
    /// Highest moment order.
    #[arg(long)]
    pub k: Option<u32>,
    /// criterion, oracle or superset.
    #[arg(long)]
    pub mode: Option<CountingMode>,
    /// Primes up to p0: oracle, exclude or include_superset.
    #[arg(long)]
    pub policy: Option<SmallPrimePolicy>,
    /// all, or hilbert to drop points where the fiber degenerates.
    #[arg(long)]
    pub filter: Option<FilterTag>,
    /// Worker threads (default: RAMSTAT_WORKERS, then all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Seed for Pollard rho.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (single experiment) or directory (run).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<OutputFormat>,
    /// Integers per work unit.
    #[arg(long)]
    pub chunk_size: Option<u64>,
    /// Threshold C for density.
    #[arg(long = "c", allow_hyphen_values = true)]
    pub density_c: Option<f64>,
    /// Band width for normal-order.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Index a for lemma6.
    #[arg(long = "a")]
    pub lemma6_a: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest n (and sample count) used by the suites.
    #[arg(long, default_value_t = DEFAULT_SCALE)]
    pub scale: u64,
    /// Break one component on purpose: oracle-drop-3mod4 or cdf-skew.
    #[arg(long)]
    pub mutate: Option<Mutation>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] ramstat_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("selftest failed")]
    SelftestFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(ramstat_core::Error::InternalConsistency { .. }) => EXIT_CONSISTENCY,
            CliError::Core(_) | CliError::Io { .. } | CliError::SelftestFailed => EXIT_FAILURE,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Unreadable inputs are configuration errors (exit 2), not I/O failures.
fn read_config_file(field: &str, path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| ConfigError::new(field, format!("{}: {e}", path.display())).into())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

impl CommonArgs {
    fn to_config(&self) -> Result<ExperimentConfig, CliError> {
        let base = match &self.config {
            Some(path) => {
                ExperimentConfig::from_json(&read_config_file("config", path)?).map_err(|e| {
                    ConfigError::new(e.field, format!("{}: {}", path.display(), e.message))
                })?
            }
            None => ExperimentConfig::default(),
        };
        let quadratic_f = self
            .quadratic_f
            .as_deref()
            .map(parse_coeff_list)
            .transpose()
            .map_err(|e| ConfigError::new("quadratic_f", e))?;
        let cover = match &self.cover {
            Some(path) => Some(
                serde_json::from_str::<CoverSpecJson>(&read_config_file("cover", path)?)
                    .map_err(|e| ConfigError::new("cover", format!("{}: {e}", path.display())))?,
            ),
            None => None,
        };
        let flags = ExperimentConfig {
            cover,
            quadratic_f,
            n_max: self.n_max,
            n: self.n,
            k_max: self.k,
            mode: self.mode,
            small_prime_policy: self.policy,
            filter: self.filter,
            experiments: None,
            seed: self.seed,
            workers: self.workers,
            output: self.format,
            out_path: self.out.clone(),
            chunk_size: self.chunk_size,
            eps: self.eps,
            density_c: self.density_c,
            lemma6_a: self.lemma6_a,
        };
        Ok(base.overlay(flags))
    }
}

fn resolve(
    mut config: ExperimentConfig,
    experiments: Option<Vec<Experiment>>,
) -> Result<ResolvedConfig, CliError> {
    if let Some(exps) = experiments {
        config.experiments = Some(exps);
    }
    if config.experiments.as_ref().is_none_or(|e| e.is_empty()) {
        return Err(ConfigError::new("experiments", "nothing to run").into());
    }
    let env = std::env::var(WORKERS_ENV).ok();
    Ok(config.resolve(env.as_deref())?)
}

fn manifest(
    cfg: &ResolvedConfig,
    command: &str,
    tables: &[Table],
    files: &[PathBuf],
    started: Instant,
) -> Value {
    let orbits: Vec<Value> = cfg
        .spec
        .orbits()
        .iter()
        .map(|o| {
            json!({
                "poly": o.poly().to_string(),
                "e": o.ram_index(),
                "irreducibility": o.irreducibility(),
            })
        })
        .collect();
    let extras: serde_json::Map<String, Value> = tables
        .iter()
        .map(|t| (t.name.clone(), t.extras_json()))
        .collect();
    json!({
        "tool": "ramstat",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg.echo(),
        "p0": cfg.spec.p0().to_string(),
        "r": cfg.spec.r(),
        "orbits": orbits,
        "all_certified": cfg.spec.all_certified(),
        "seed": cfg.seed,
        "workers": cfg.workers,
        "outputs": files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
        "extras": extras,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    })
}

fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn emit_single(
    cfg: &ResolvedConfig,
    command: &str,
    table: &Table,
    started: Instant,
) -> Result<(), CliError> {
    let bytes = table.render(cfg.format);
    match &cfg.out_path {
        Some(path) => {
            write_file(path, &bytes)?;
            let m = manifest(
                cfg,
                command,
                std::slice::from_ref(table),
                std::slice::from_ref(path),
                started,
            );
            let manifest_path = manifest_path_for(path);
            write_file(&manifest_path, &pretty(&m))?;
        }
        None => {
            std::io::stdout()
                .write_all(&bytes)
                .map_err(io_err(Path::new("<stdout>")))?;
            if !table.extras.is_empty() && cfg.format == OutputFormat::Csv {
                let extras: Vec<String> = table
                    .extras
                    .iter()
                    .map(|(k, v)| format!("{k}={}", v.render()))
                    .collect();
                eprintln!("{}", extras.join(" "));
            }
        }
    }
    Ok(())
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("serialize manifest");
    bytes.push(b'\n');
    bytes
}

fn run_single(args: &CommonArgs, exp: Experiment) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = resolve(args.to_config()?, Some(vec![exp]))?;
    if exp == Experiment::Ram {
        let n = cfg.n.expect("validated");
        let rec = ram_record(&cfg, n)?;
        println!("{}", record_line(&rec));
        if cfg.out_path.is_some() {
            emit_single(&cfg, exp.as_str(), &records_table("ram", &[rec]), started)?;
        }
        return Ok(());
    }
    let tables = run_experiments(&cfg)?;
    emit_single(&cfg, exp.as_str(), &tables[0], started)
}

fn run_config(args: &CommonArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut config = args.to_config()?;
    // Per-n record dumps are opt-in; everything else runs by default.
    config.experiments.get_or_insert_with(|| {
        Experiment::ALL
            .into_iter()
            .filter(|e| !matches!(e, Experiment::Ram | Experiment::Sweep))
            .collect()
    });
    let cfg = resolve(config, None)?;
    let dir = cfg
        .out_path
        .clone()
        .unwrap_or_else(|| PathBuf::from("ramstat-out"));
    let tables = run_experiments(&cfg)?;
    let mut files = Vec::new();
    for table in &tables {
        let path = dir.join(format!("{}.{}", table.name, cfg.format.extension()));
        write_file(&path, &table.render(cfg.format))?;
        files.push(path);
    }
    let m = manifest(&cfg, "run", &tables, &files, started);
    write_file(&dir.join("manifest.json"), &pretty(&m))?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    println!("wrote {}", dir.join("manifest.json").display());
    Ok(())
}

fn selftest(args: &SelftestArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let report = run_selftest(SelftestOptions {
        seed: args.seed.unwrap_or(ramstat_core::arith::DEFAULT_SEED),
        scale: args.scale,
        mutation: args.mutate,
    })?;
    print!("{report}");
    eprintln!(
        "selftest finished in {:.2}s",
        started.elapsed().as_secs_f64()
    );
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::SelftestFailed)
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Ram(a) => run_single(a, Experiment::Ram),
        Command::Sweep(a) => run_single(a, Experiment::Sweep),
        Command::Moments(a) => run_single(a, Experiment::Moments),
        Command::Cdf(a) => run_single(a, Experiment::Cdf),
        Command::Density(a) => run_single(a, Experiment::Density),
        Command::NormalOrder(a) => run_single(a, Experiment::NormalOrder),
        Command::Lemma5Audit(a) => run_single(a, Experiment::Lemma5Audit),
        Command::Lemma6(a) => run_single(a, Experiment::Lemma6),
        Command::Halberstam(a) => run_single(a, Experiment::Halberstam),
        Command::Run(a) => run_config(a),
        Command::Selftest(a) => selftest(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(CliError::SelftestFailed) => EXIT_FAILURE,
        Err(e) => {
            eprintln!("ramstat: {e}");
            e.exit_code()
        }
    }
}
