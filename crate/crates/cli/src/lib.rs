//! Command implementations behind the `fairshare` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use fairshare_core::coloring::Strategy;
use fairshare_core::config::{self, ConfigError, ScenarioConfig};
use fairshare_core::orchestrator::{
    replication_specs, run_experiment, Execution, ExperimentResult, KpiRecord, OrchestratorError, Replication,
    RunOptions, RunSummary, Scheme,
};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const RESULTS_HEADER: [&str; 13] = [
    "scope",
    "scheme",
    "strategy",
    "demand_bps",
    "mu",
    "rapp",
    "xapp",
    "success_rate",
    "jfi",
    "mean_service_share",
    "active_ues",
    "seed",
    "regime",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] OrchestratorError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Run(_) | CliError::Io { .. } => 1,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// Reads, defaults and validates a config file.
pub fn validate_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path)?;
    ScenarioConfig::from_json(&text)
}

/// Config from a file or a preset; a file wins over nothing, both is a usage error.
pub fn load_config(path: Option<&Path>, preset: Option<&str>) -> Result<ScenarioConfig, CliError> {
    match (path, preset) {
        (Some(_), Some(_)) => Err(CliError::Usage("--config and --preset are mutually exclusive".into())),
        (Some(p), None) => Ok(validate_config(p)?),
        (None, Some(name)) => Ok(config::preset(name)?),
        (None, None) => Ok(ScenarioConfig::from_json("{}")?),
    }
}

/// Parses `1,2,5` and inclusive ranges such as `1-10`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Usage(format!("invalid seed list `{text}`"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| CliError::Usage(format!("invalid {what} `{p}`"))))
        .collect()
}

pub fn parse_schemes(text: &str) -> Result<Vec<Scheme>, CliError> {
    parse_list(text, "scheme")
}

pub fn parse_strategies(text: &str) -> Result<Vec<Strategy>, CliError> {
    parse_list(text, "strategy")
}

pub fn parse_demands(text: &str) -> Result<Vec<f64>, CliError> {
    parse_list(text, "demand")
}

/// Re-runs validation after command-line overrides.
pub fn revalidate(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let diags = cfg.validate();
    if diags.is_empty() {
        Ok(())
    } else {
        Err(ConfigError::Semantic(diags).into())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub trace: bool,
    pub execution: Execution,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub replications: usize,
    pub artifacts: Vec<ArtifactHash>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactHash {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
struct StrategyRow<'a> {
    scheme: Scheme,
    strategy: Strategy,
    regime: &'a str,
    demand_bps: f64,
    success_mean: f64,
    success_std: f64,
    seeds: usize,
}

#[derive(Debug, Clone, Serialize)]
struct SchemeRow<'a> {
    scheme: Scheme,
    strategy: Strategy,
    regime: &'a str,
    demand_bps: f64,
    success_mean: f64,
    jfi_mean: f64,
    mean_service_share: f64,
    success_std: f64,
    jfi_std: f64,
    seeds: usize,
}

#[derive(Debug, Clone, Serialize)]
struct Summary<'a> {
    replications: usize,
    total_windows: u64,
    conflict_violations: usize,
    per_strategy: Vec<StrategyRow<'a>>,
    per_scheme: Vec<SchemeRow<'a>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_row(r: &KpiRecord) -> [String; 13] {
    [
        r.scope.as_str().to_string(),
        r.scheme.as_str().to_string(),
        r.strategy.as_str().to_string(),
        r.demand_bps.to_string(),
        opt(r.mu),
        opt(r.rapp),
        opt(r.xapp),
        r.success_rate.to_string(),
        r.jfi.to_string(),
        r.mean_service_share.to_string(),
        r.active_ues.to_string(),
        opt(r.seed),
        r.regime.clone(),
    ]
}

/// Results CSV: every per-replication record followed by the run summaries.
pub fn results_csv(result: &ExperimentResult) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER).expect("in-memory write");
    let summaries = result.summaries.iter().map(|s| &s.record);
    for r in result.records().chain(summaries) {
        w.write_record(csv_row(r)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn strategy_row(s: &RunSummary) -> StrategyRow<'_> {
    StrategyRow {
        scheme: s.record.scheme,
        strategy: s.record.strategy,
        regime: &s.record.regime,
        demand_bps: s.record.demand_bps,
        success_mean: s.record.success_rate,
        success_std: s.success_std,
        seeds: s.seeds,
    }
}

fn scheme_row(s: &RunSummary) -> SchemeRow<'_> {
    SchemeRow {
        scheme: s.record.scheme,
        strategy: s.record.strategy,
        regime: &s.record.regime,
        demand_bps: s.record.demand_bps,
        success_mean: s.record.success_rate,
        jfi_mean: s.record.jfi,
        mean_service_share: s.record.mean_service_share,
        success_std: s.success_std,
        jfi_std: s.jfi_std,
        seeds: s.seeds,
    }
}

pub fn summary_json(result: &ExperimentResult) -> Vec<u8> {
    let summary = Summary {
        replications: result.replications.len(),
        total_windows: result
            .replications
            .iter()
            .flat_map(|r| r.rapp.iter().map(|o| o.windows))
            .sum(),
        conflict_violations: result.conflict_violations(),
        per_strategy: result.summaries.iter().map(strategy_row).collect(),
        per_scheme: result.summaries.iter().map(scheme_row).collect(),
    };
    let mut out = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    out.push(b'\n');
    out
}

/// Writes through a sibling temp file so readers never see a partial artifact.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("partial");
    let mut f = fs::File::create(&tmp).map_err(io_err(format!("creating {}", tmp.display())))?;
    f.write_all(bytes)
        .and_then(|_| f.sync_all())
        .map_err(io_err(format!("writing {}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(io_err(format!("renaming to {}", path.display())))
}

/// Runs the experiment and writes results.csv, summary.json,
/// resolved_config.json and manifest.json into `out_dir`.
pub fn cmd_run(cfg: &ScenarioConfig, out_dir: &Path, args: &RunArgs) -> Result<Manifest, CliError> {
    fs::create_dir_all(out_dir).map_err(io_err(format!("creating {}", out_dir.display())))?;
    let trace_dir = args.trace.then(|| out_dir.join("traces"));
    if let Some(dir) = &trace_dir {
        fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    }
    let result = run_experiment(
        cfg,
        &RunOptions {
            execution: args.execution,
            trace_dir,
        },
    )?;

    let config_json = cfg.to_json();
    let artifacts: Vec<(&str, Vec<u8>)> = vec![
        ("results.csv", results_csv(&result)),
        ("summary.json", summary_json(&result)),
        ("resolved_config.json", format!("{config_json}\n").into_bytes()),
    ];
    let manifest = Manifest {
        version: ARTIFACT_VERSION.to_string(),
        config_sha256: sha256_hex(config_json.as_bytes()),
        seeds: cfg.run.seeds.clone(),
        replications: replication_specs(cfg).len(),
        artifacts: artifacts
            .iter()
            .map(|(name, bytes)| ArtifactHash {
                file: name.to_string(),
                sha256: sha256_hex(bytes),
            })
            .collect(),
    };
    for (name, bytes) in &artifacts {
        write_atomic(&out_dir.join(name), bytes)?;
    }
    let mut m = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    m.push(b'\n');
    write_atomic(&out_dir.join("manifest.json"), &m)?;
    Ok(manifest)
}

/// Axes a sweep varies; an empty axis falls back to every value.
#[derive(Debug, Clone, Default)]
pub struct SweepAxes {
    pub schemes: Vec<Scheme>,
    pub strategies: Vec<Strategy>,
    pub demands: Vec<f64>,
}

pub fn sweep_config(base: &ScenarioConfig, axes: &SweepAxes) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.run.schemes = if axes.schemes.is_empty() { Scheme::ALL.to_vec() } else { axes.schemes.clone() };
    cfg.run.strategies = if axes.strategies.is_empty() { Strategy::ALL.to_vec() } else { axes.strategies.clone() };
    if !axes.demands.is_empty() {
        cfg.run.demand_bps = axes.demands.clone();
    }
    cfg
}

pub fn cmd_sweep(base: &ScenarioConfig, axes: &SweepAxes, out_dir: &Path, args: &RunArgs) -> Result<Manifest, CliError> {
    let cfg = sweep_config(base, axes);
    revalidate(&cfg)?;
    cmd_run(&cfg, out_dir, args)
}

/// Writes the hypergraph and PRB coloring planned at tick `(rapp, xapp)` of
/// the first replication.
pub fn cmd_dump_graph(cfg: &ScenarioConfig, rapp: u64, xapp: u64, out_file: &Path) -> Result<(), CliError> {
    let spec = replication_specs(cfg)
        .into_iter()
        .next()
        .ok_or_else(|| CliError::Usage("config defines no replication".into()))?;
    let dump = Replication::new(cfg, spec)?.snapshot(rapp, xapp)?;
    let mut bytes = serde_json::to_vec_pretty(&dump).expect("dump serializes");
    bytes.push(b'\n');
    if let Some(parent) = out_file.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(format!("creating {}", parent.display())))?;
    }
    write_atomic(out_file, &bytes)
}

pub fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
