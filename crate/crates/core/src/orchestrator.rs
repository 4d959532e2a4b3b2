//! Nested control loops: rApp interval (15 min) → xApp ticks (1 s) →
//! scheduler windows (10 ms), with KPI aggregation at every level.

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{color, ColoringResult, Strategy};
use crate::config::{RecordLevel, Regime, ScenarioConfig};
use crate::conflict::{build_hypergraph_with, expand, ConflictHypergraph, ExpandedGraph, GraphDump};
use crate::metrics::{jfi, mean};
use crate::policy::{build_policy_profile, static_policy_profile, NumerologyConfig, PolicyProfile, Sla};
use crate::radio::{attach_ues, step_mobility, LinkBudget, Position, RadioEnvironment, UeId, UserEquipment};
use crate::scheduler::{realize_rates, update_state, SchedulerState, TraceRow, WindowAssignment, WindowScheduler};
use crate::traffic::{ingest_csv, map_load_to_ue_count, split_aggregate, synthetic_series, Forecaster, TrafficError, TrafficSeries};

pub use crate::metrics::{jfi as jain_fairness, success_rate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Policy-guided spatial allocation, coloring frozen for the whole tick.
    #[serde(rename = "rapp_xapp_only")]
    RappXappOnly,
    /// Time-sharing with a static numerology and no forecast.
    #[serde(rename = "xapp_dapp_only")]
    XappDappOnly,
    #[serde(rename = "full")]
    Full,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::RappXappOnly, Scheme::XappDappOnly, Scheme::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::RappXappOnly => "rapp_xapp_only",
            Scheme::XappDappOnly => "xapp_dapp_only",
            Scheme::Full => "full",
        }
    }

    pub fn uses_forecast(self) -> bool {
        self != Scheme::XappDappOnly
    }

    pub fn time_shares(self) -> bool {
        self != Scheme::RappXappOnly
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimClock {
    pub rapp_index: u64,
    pub xapp_index: u64,
    pub window_index: u64,
}

impl SimClock {
    pub fn absolute_window(&self, xapp_per_rapp: u64, windows_per_xapp: u64) -> u64 {
        (self.rapp_index * xapp_per_rapp + self.xapp_index) * windows_per_xapp + self.window_index
    }

    pub fn absolute_xapp(&self, xapp_per_rapp: u64) -> u64 {
        self.rapp_index * xapp_per_rapp + self.xapp_index
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Window,
    Xapp,
    Rapp,
    Run,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Window => "window",
            Scope::Xapp => "xapp",
            Scope::Rapp => "rapp",
            Scope::Run => "run",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiRecord {
    pub scope: Scope,
    pub scheme: Scheme,
    pub strategy: Strategy,
    pub regime: String,
    pub demand_bps: f64,
    /// Absent for run summaries, where the numerology varies.
    pub mu: Option<u8>,
    pub rapp: Option<u64>,
    pub xapp: Option<u64>,
    pub success_rate: f64,
    pub jfi: f64,
    pub mean_service_share: f64,
    pub active_ues: usize,
    pub seed: Option<u64>,
    /// Absolute xApp ids `[start, end)` this record aggregates (rApp scope).
    pub xapp_ids: Option<(u64, u64)>,
    /// Set when an empty-population convention produced the value.
    pub vacuous: bool,
}

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error("no traffic series for RU {0}")]
    MissingSeries(u32),
    #[error("traffic series has {have} samples, {need} needed")]
    TrafficTooShort { have: usize, need: usize },
    #[error("tick rapp={rapp} xapp={xapp} out of range")]
    IndexOutOfRange { rapp: u64, xapp: u64 },
    #[error("trace output: {0}")]
    Io(#[from] io::Error),
}

/// Identity of one independent replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSpec {
    pub scheme: Scheme,
    pub strategy: Strategy,
    pub regime: Option<Regime>,
    pub demand_bps: f64,
    pub seed: u64,
}

impl ReplicationSpec {
    pub fn regime_name(&self) -> &str {
        self.regime.as_ref().map(|r| r.name.as_str()).unwrap_or("traffic")
    }
}

/// Cartesian product of the run block, in output order.
pub fn replication_specs(cfg: &ScenarioConfig) -> Vec<ReplicationSpec> {
    let regimes: Vec<Option<Regime>> = if cfg.run.regimes.is_empty() {
        vec![None]
    } else {
        cfg.run.regimes.iter().cloned().map(Some).collect()
    };
    let strategies = if cfg.run.strategies.is_empty() {
        vec![cfg.policy.strategy]
    } else {
        cfg.run.strategies.clone()
    };
    let mut out = Vec::new();
    for &scheme in &cfg.run.schemes {
        for &strategy in &strategies {
            for regime in &regimes {
                for &demand_bps in &cfg.run.demand_bps {
                    for &seed in &cfg.run.seeds {
                        out.push(ReplicationSpec {
                            scheme,
                            strategy,
                            regime: regime.clone(),
                            demand_bps,
                            seed,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Sink for per-window trace rows.
pub trait TraceSink {
    fn row(&mut self, row: &TraceRow) -> io::Result<()>;
}

impl<W: io::Write> TraceSink for csv::Writer<W> {
    fn row(&mut self, row: &TraceRow) -> io::Result<()> {
        self.write_record([
            row.window.to_string(),
            row.ue.to_string(),
            row.prb.map(|p| p.to_string()).unwrap_or_default(),
            format!("{:.3}", row.achieved_bps),
            u8::from(row.satisfied).to_string(),
        ])
        .map_err(io::Error::other)
    }
}

/// Fixed knobs of one xApp tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XappParams {
    pub windows: usize,
    pub satisfied_window_fraction: f64,
    pub mobility_dt_s: f64,
}

impl XappParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            windows: cfg.run.windows_per_xapp,
            satisfied_window_fraction: cfg.scheduler.satisfied_window_fraction,
            mobility_dt_s: cfg.radio.mobility_dt_s,
        }
    }
}

/// Independent random streams of one replication.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub mobility: ChaCha8Rng,
    pub coloring: ChaCha8Rng,
    pub population: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(id);
            r
        };
        Self {
            mobility: stream(1),
            coloring: stream(2),
            population: stream(3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XappOutcome {
    pub success_rate: f64,
    pub jfi: f64,
    pub mean_service_share: f64,
    pub active_ues: usize,
    pub mu: u8,
    pub windows: usize,
    /// Adjacent co-channel pairs observed over all windows; must stay zero.
    pub conflict_violations: usize,
    pub colored_ues: usize,
    pub satisfied_ues: usize,
    pub vacuous: bool,
}

/// Snapshot of one tick's control plane, before any window is scheduled.
#[derive(Debug, Clone)]
pub struct TickPlan {
    pub numerology: NumerologyConfig,
    pub link_budget: LinkBudget,
    pub hypergraph: ConflictHypergraph,
    pub graph: ExpandedGraph,
    pub coloring: ColoringResult,
}

/// Measurement refresh, attachment, hypergraph construction and coloring.
pub fn plan_tick(env: &mut RadioEnvironment, profile: &PolicyProfile, coloring_rng: &mut ChaCha8Rng) -> TickPlan {
    let numerology = profile.numerology_config(env.channel.bandwidth_hz);
    attach_ues(&mut env.ues, &env.rus, &env.channel);
    for ue in env.ues.iter_mut() {
        ue.priority = profile.priority_of(&ue.class);
    }
    let link_budget = LinkBudget::new(env, numerology.prb_bandwidth_hz);
    let hypergraph = build_hypergraph_with(env, &link_budget, profile.tolerance);
    let graph = expand(&hypergraph);
    let coloring = color(profile.strategy, &graph, numerology.prb_count.max(1), coloring_rng);
    TickPlan {
        numerology,
        link_budget,
        hypergraph,
        graph,
        coloring,
    }
}

/// One xApp tick: plan, run the scheduler windows, move UEs, report KPIs.
#[allow(clippy::too_many_arguments)]
pub fn run_xapp_interval(
    env: &mut RadioEnvironment,
    profile: &PolicyProfile,
    state: &mut SchedulerState,
    scheme: Scheme,
    params: &XappParams,
    rngs: &mut RngStreams,
    first_window: u64,
    mut trace: Option<&mut dyn TraceSink>,
) -> io::Result<XappOutcome> {
    let plan = plan_tick(env, profile, &mut rngs.coloring);
    let n = env.ues.len();
    let ids: Vec<UeId> = env.ues.iter().map(|u| u.id).collect();
    debug_assert_eq!(ids, plan.graph.nodes());

    let mut records = state.gather(&ids);
    let priorities: Vec<f64> = env.ues.iter().map(|u| u.priority).collect();
    let demands: Vec<f64> = env.ues.iter().map(|u| u.demand_bps).collect();
    let rates: Vec<f64> = (0..n).map(|i| plan.link_budget.reference_rate_bps(i)).collect();

    let mut sat_windows = vec![0usize; n];
    let mut satisfied = vec![false; n];
    let mut achieved = Vec::with_capacity(n);
    let mut violations = 0;

    let mut ws = WindowScheduler::new(&plan.coloring, &plan.graph);
    let dynamic = scheme.time_shares() && ws.has_uncolored();
    let frozen = (!dynamic).then(|| {
        let a = WindowAssignment::from_coloring(&plan.coloring, first_window);
        realize_rates(&a, &plan.link_budget, &mut achieved);
        a
    });
    if let Some(a) = &frozen {
        violations += a.conflicts(&plan.graph).len() * params.windows;
    }

    for w in 0..params.windows {
        let window_index = first_window + w as u64;
        let a: &WindowAssignment = match &frozen {
            Some(a) => a,
            None => {
                let a = ws.schedule(&records, &priorities, &rates, profile.fairness.epsilon, window_index);
                realize_rates(a, &plan.link_budget, &mut achieved);
                violations += a.conflicts(&plan.graph).len();
                a
            }
        };
        update_state(&mut records, a, &achieved, &demands, profile, &mut satisfied);
        for (count, ok) in sat_windows.iter_mut().zip(&satisfied) {
            *count += usize::from(*ok);
        }
        if let Some(sink) = trace.as_deref_mut() {
            for i in 0..n {
                sink.row(&TraceRow {
                    window: window_index,
                    ue: ids[i],
                    prb: a.ue_prb[i],
                    achieved_bps: achieved[i],
                    satisfied: satisfied[i],
                })?;
            }
        }
    }
    state.scatter(&ids, &records, params.windows as u64);

    step_mobility(&mut env.ues, &env.area, params.mobility_dt_s, &mut rngs.mobility);

    let needed = params.satisfied_window_fraction * params.windows as f64;
    let satisfied_ues = sat_windows.iter().filter(|&&c| c as f64 >= needed - 1e-9).count();
    let shares: Vec<f64> = records.iter().map(|r| r.service_share().unwrap_or(0.0)).collect();
    let vacuous = n == 0;
    Ok(XappOutcome {
        success_rate: if vacuous { 1.0 } else { satisfied_ues as f64 / n as f64 },
        jfi: jfi(&shares).unwrap_or(1.0),
        mean_service_share: mean(&shares).unwrap_or(1.0),
        active_ues: n,
        mu: plan.numerology.mu,
        windows: params.windows,
        conflict_violations: violations,
        colored_ues: plan.coloring.assigned_count(),
        satisfied_ues,
        vacuous,
    })
}

/// Outcome of one rApp interval.
#[derive(Debug, Clone, PartialEq)]
pub struct RappOutcome {
    pub record: KpiRecord,
    pub xapp_records: Vec<KpiRecord>,
    pub xapp_ticks: usize,
    pub windows: u64,
    pub conflict_violations: usize,
    pub profile: PolicyProfile,
}

/// Everything one replication produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub spec: ReplicationSpec,
    pub rapp: Vec<RappOutcome>,
}

impl ReplicationResult {
    pub fn conflict_violations(&self) -> usize {
        self.rapp.iter().map(|r| r.conflict_violations).sum()
    }
}

/// Per-RU traffic aligned with the configured RU order.
pub fn load_traffic(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<TrafficSeries>, OrchestratorError> {
    let ru_ids: Vec<u32> = cfg.radio.rus.iter().map(|r| r.id).collect();
    let series = match &cfg.traffic.dataset {
        Some(path) => {
            let mut all = ingest_csv(path)?;
            if all.len() == 1 && ru_ids.len() > 1 {
                let shares: Vec<(u32, f64)> = ru_ids
                    .iter()
                    .enumerate()
                    .map(|(i, &id)| (id, cfg.traffic.aggregate_shares.get(i).copied().unwrap_or(0.0)))
                    .collect();
                all = split_aggregate(&all[0], &shares);
            }
            all
        }
        None => synthetic_series(&cfg.traffic.synthetic, &ru_ids, seed),
    };
    ru_ids
        .iter()
        .map(|id| {
            series
                .iter()
                .find(|s| s.ru_id == *id)
                .cloned()
                .ok_or(OrchestratorError::MissingSeries(*id))
        })
        .collect()
}

/// One seeded, sequential simulation over the configured rApp intervals.
pub struct Replication<'c> {
    cfg: &'c ScenarioConfig,
    spec: ReplicationSpec,
    sla: Sla,
    params: XappParams,
    env: RadioEnvironment,
    state: SchedulerState,
    traffic: Vec<TrafficSeries>,
    rngs: RngStreams,
    classes: Vec<String>,
    next_ue_id: UeId,
    profile: Option<PolicyProfile>,
    trace: Option<Box<dyn TraceSink + Send>>,
}

impl<'c> Replication<'c> {
    pub fn new(cfg: &'c ScenarioConfig, spec: ReplicationSpec) -> Result<Self, OrchestratorError> {
        let traffic = if spec.regime.is_some() {
            Vec::new()
        } else {
            let t = load_traffic(cfg, spec.seed)?;
            let need = cfg.traffic.history_samples + cfg.run.start_interval + cfg.run.rapp_intervals;
            let have = t.iter().map(TrafficSeries::len).min().unwrap_or(0);
            if have < need {
                return Err(OrchestratorError::TrafficTooShort { have, need });
            }
            t
        };
        let env = RadioEnvironment::new(cfg.radio.area, cfg.radio.channel, cfg.radio_units());
        Ok(Self {
            cfg,
            sla: cfg.sla(),
            params: XappParams::from_config(cfg),
            env,
            state: SchedulerState::new(),
            traffic,
            rngs: RngStreams::new(spec.seed),
            classes: cfg.policy.priorities.keys().cloned().collect(),
            next_ue_id: 0,
            profile: None,
            trace: None,
            spec,
        })
    }

    pub fn with_trace(mut self, sink: Box<dyn TraceSink + Send>) -> Self {
        self.trace = Some(sink);
        self
    }

    pub fn env(&self) -> &RadioEnvironment {
        &self.env
    }

    pub fn state(&self) -> &SchedulerState {
        &self.state
    }

    pub fn spec(&self) -> &ReplicationSpec {
        &self.spec
    }

    fn sample_index(&self, rapp: u64) -> usize {
        self.cfg.traffic.history_samples + self.cfg.run.start_interval + rapp as usize
    }

    /// Policy step and population update at an rApp boundary.
    pub fn begin_rapp(&mut self, rapp: u64) -> Result<&PolicyProfile, OrchestratorError> {
        let mapping = &self.cfg.traffic.mapping;
        let (targets, predicted): (Vec<u32>, Vec<u32>) = match &self.spec.regime {
            Some(reg) => (reg.ue_per_ru.clone(), reg.ue_per_ru.clone()),
            None => {
                let k = self.sample_index(rapp);
                let targets = self.traffic.iter().map(|s| map_load_to_ue_count(s.values[k], mapping)).collect();
                let mut predicted = Vec::with_capacity(self.traffic.len());
                if self.spec.scheme.uses_forecast() {
                    for s in &self.traffic {
                        let mut f = Forecaster::new(self.cfg.traffic.forecaster);
                        f.fit(&s.values[..k])?;
                        let peak = f.predict_peak(self.cfg.traffic.horizon_steps)?;
                        predicted.push(map_load_to_ue_count(peak, mapping));
                    }
                }
                (targets, predicted)
            }
        };
        let profile = if self.spec.scheme.uses_forecast() {
            let peak = predicted.iter().copied().max().unwrap_or(0);
            build_policy_profile(peak, &self.sla, self.spec.strategy, self.env.channel.bandwidth_hz)
        } else {
            static_policy_profile(self.cfg.policy.static_mu, &self.sla, self.spec.strategy)
        };
        self.update_population(rapp, &targets);
        Ok(self.profile.insert(profile))
    }

    fn update_population(&mut self, rapp: u64, targets: &[u32]) {
        let max_age = self.cfg.traffic.max_session_intervals;
        let mut departing: Vec<UeId> = self
            .env
            .ues
            .iter()
            .filter(|u| rapp >= u.born_rapp + max_age)
            .map(|u| u.id)
            .collect();
        let mut arrivals = Vec::new();
        for (ru_idx, ru) in self.env.rus.iter().enumerate() {
            let staying: Vec<UeId> = self
                .env
                .ues
                .iter()
                .filter(|u| u.home_ru == ru.id && !departing.contains(&u.id))
                .map(|u| u.id)
                .collect();
            let target = targets[ru_idx] as usize;
            if staying.len() > target {
                // lowest ids leave first
                departing.extend_from_slice(&staying[..staying.len() - target]);
            } else {
                arrivals.extend(std::iter::repeat_n(ru_idx, target - staying.len()));
            }
        }
        self.env.ues.retain(|u| !departing.contains(&u.id));
        for id in departing {
            self.state.retire(id);
        }

        arrivals.shuffle(&mut self.rngs.population);
        let sigma = self.env.channel.shadowing_sigma_db;
        let shadow = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
        for ru_idx in arrivals {
            let id = self.next_ue_id;
            self.next_ue_id += 1;
            let ru = &self.env.rus[ru_idx];
            let radius = self.cfg.radio.rus[ru_idx].spawn_radius_m;
            let position = spawn_position(ru.position, radius, &self.env.area, &mut self.rngs.population);
            let shadowing_db = if sigma > 0.0 {
                (0..self.env.rus.len()).map(|_| shadow.sample(&mut self.rngs.population)).collect()
            } else {
                Vec::new()
            };
            let class = self.classes[id as usize % self.classes.len()].clone();
            self.env.ues.push(UserEquipment {
                id,
                position,
                serving_ru: ru.id,
                home_ru: ru.id,
                demand_bps: self.spec.demand_bps,
                priority: 1.0,
                velocity_mps: self.cfg.radio.ue_velocity_mps,
                class,
                born_rapp: rapp,
                shadowing_db,
            });
            self.state.activate(id);
        }
    }

    fn profile(&self) -> &PolicyProfile {
        self.profile.as_ref().expect("begin_rapp sets the profile")
    }

    pub fn run_xapp(&mut self, rapp: u64, xapp: u64) -> Result<XappOutcome, OrchestratorError> {
        let clock = SimClock {
            rapp_index: rapp,
            xapp_index: xapp,
            window_index: 0,
        };
        let first_window = clock.absolute_window(self.cfg.run.xapp_per_rapp as u64, self.params.windows as u64);
        let profile = self.profile.clone().expect("begin_rapp sets the profile");
        let trace = self.trace.as_deref_mut().map(|t| t as &mut dyn TraceSink);
        Ok(run_xapp_interval(
            &mut self.env,
            &profile,
            &mut self.state,
            self.spec.scheme,
            &self.params,
            &mut self.rngs,
            first_window,
            trace,
        )?)
    }

    fn base_record(&self, scope: Scope) -> KpiRecord {
        KpiRecord {
            scope,
            scheme: self.spec.scheme,
            strategy: self.spec.strategy,
            regime: self.spec.regime_name().to_string(),
            demand_bps: self.spec.demand_bps,
            mu: None,
            rapp: None,
            xapp: None,
            success_rate: 1.0,
            jfi: 1.0,
            mean_service_share: 1.0,
            active_ues: 0,
            seed: Some(self.spec.seed),
            xapp_ids: None,
            vacuous: false,
        }
    }

    /// Policy step, then every xApp tick of the interval.
    pub fn run_rapp_interval(&mut self, rapp: u64, keep_xapp: bool) -> Result<RappOutcome, OrchestratorError> {
        self.begin_rapp(rapp)?;
        let profile = self.profile().clone();
        let ticks = self.cfg.run.xapp_per_rapp as u64;
        let first_id = rapp * ticks;
        let mut success = Vec::with_capacity(ticks as usize);
        let mut shares = Vec::with_capacity(ticks as usize);
        let mut xapp_records = Vec::new();
        let mut windows = 0u64;
        let mut violations = 0usize;
        for xapp in 0..ticks {
            let o = self.run_xapp(rapp, xapp)?;
            windows += o.windows as u64;
            violations += o.conflict_violations;
            success.push(o.success_rate);
            shares.push(o.mean_service_share);
            if keep_xapp {
                xapp_records.push(KpiRecord {
                    mu: Some(o.mu),
                    rapp: Some(rapp),
                    xapp: Some(xapp),
                    success_rate: o.success_rate,
                    jfi: o.jfi,
                    mean_service_share: o.mean_service_share,
                    active_ues: o.active_ues,
                    vacuous: o.vacuous,
                    ..self.base_record(Scope::Xapp)
                });
            }
        }
        let final_shares: Vec<f64> = self
            .env
            .ues
            .iter()
            .map(|u| self.state.record(u.id).and_then(|r| r.service_share()).unwrap_or(0.0))
            .collect();
        let record = KpiRecord {
            mu: Some(profile.numerology),
            rapp: Some(rapp),
            success_rate: mean(&success).unwrap_or(1.0),
            jfi: jfi(&final_shares).unwrap_or(1.0),
            mean_service_share: mean(&shares).unwrap_or(1.0),
            active_ues: self.env.ues.len(),
            xapp_ids: Some((first_id, first_id + ticks)),
            vacuous: self.env.ues.is_empty(),
            ..self.base_record(Scope::Rapp)
        };
        Ok(RappOutcome {
            record,
            xapp_records,
            xapp_ticks: ticks as usize,
            windows,
            conflict_violations: violations,
            profile,
        })
    }

    pub fn run(mut self) -> Result<ReplicationResult, OrchestratorError> {
        let keep = self.cfg.run.record_level == RecordLevel::Xapp;
        let rapp = (0..self.cfg.run.rapp_intervals as u64)
            .map(|r| self.run_rapp_interval(r, keep))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ReplicationResult { spec: self.spec, rapp })
    }

    /// Runs deterministically up to tick `(rapp, xapp)` and returns the
    /// hypergraph and coloring planned there.
    pub fn snapshot(mut self, rapp: u64, xapp: u64) -> Result<GraphDump, OrchestratorError> {
        if rapp >= self.cfg.run.rapp_intervals as u64 || xapp >= self.cfg.run.xapp_per_rapp as u64 {
            return Err(OrchestratorError::IndexOutOfRange { rapp, xapp });
        }
        for r in 0..rapp {
            self.run_rapp_interval(r, false)?;
        }
        self.begin_rapp(rapp)?;
        for x in 0..xapp {
            self.run_xapp(rapp, x)?;
        }
        let profile = self.profile().clone();
        let plan = plan_tick(&mut self.env, &profile, &mut self.rngs.coloring);
        Ok(GraphDump::new(
            &self.env,
            &plan.hypergraph,
            Some(&plan.coloring),
            &plan.numerology,
            rapp,
            xapp,
        ))
    }
}

fn spawn_position<R: Rng + ?Sized>(center: Position, radius: f64, area: &crate::radio::Area, rng: &mut R) -> Position {
    for _ in 0..64 {
        let r = radius * rng.gen::<f64>().sqrt();
        let theta = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        let p = Position::new(center.x + r * theta.cos(), center.y + r * theta.sin());
        if area.contains(&p) {
            return p;
        }
    }
    Position::new(center.x.clamp(0.0, area.width), center.y.clamp(0.0, area.height))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Replications spread over the rayon pool; sequential without the `parallel` feature.
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub execution: Execution,
    /// Directory for per-replication window traces.
    pub trace_dir: Option<PathBuf>,
}

/// Per-combination summary over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub record: KpiRecord,
    pub seeds: usize,
    pub success_std: f64,
    pub jfi_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub replications: Vec<ReplicationResult>,
    pub summaries: Vec<RunSummary>,
}

impl ExperimentResult {
    /// Xapp and Rapp records of every replication, in output order.
    pub fn records(&self) -> impl Iterator<Item = &KpiRecord> {
        self.replications.iter().flat_map(|r| {
            r.rapp
                .iter()
                .flat_map(|o| o.xapp_records.iter().chain(std::iter::once(&o.record)))
        })
    }

    pub fn conflict_violations(&self) -> usize {
        self.replications.iter().map(ReplicationResult::conflict_violations).sum()
    }

    pub fn summary(&self, scheme: Scheme, strategy: Strategy, regime: &str, demand_bps: f64) -> Option<&RunSummary> {
        self.summaries.iter().find(|s| {
            s.record.scheme == scheme
                && s.record.strategy == strategy
                && s.record.regime == regime
                && s.record.demand_bps == demand_bps
        })
    }
}

fn trace_path(dir: &Path, spec: &ReplicationSpec) -> PathBuf {
    dir.join(format!(
        "trace_{}_{}_{}_{}_{}.csv",
        spec.scheme.as_str(),
        spec.strategy.as_str(),
        spec.regime_name(),
        spec.demand_bps,
        spec.seed
    ))
}

pub fn run_replication(
    cfg: &ScenarioConfig,
    spec: ReplicationSpec,
    trace_dir: Option<&Path>,
) -> Result<ReplicationResult, OrchestratorError> {
    let mut rep = Replication::new(cfg, spec)?;
    if let Some(dir) = trace_dir {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(trace_path(dir, rep.spec()))?));
        w.write_record(["window", "ue", "prb", "achieved_bps", "satisfied"])
            .map_err(io::Error::other)?;
        rep = rep.with_trace(Box::new(w));
    }
    rep.run()
}

/// Runs every replication of the config and summarizes per combination.
/// Output order is fixed by the run block, independent of execution mode.
pub fn run_experiment(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<ExperimentResult, OrchestratorError> {
    let specs = replication_specs(cfg);
    let trace_dir = opts.trace_dir.as_deref();
    let run_one = |spec: &ReplicationSpec| run_replication(cfg, spec.clone(), trace_dir);

    let replications: Vec<ReplicationResult> = match opts.execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            specs.par_iter().map(run_one).collect::<Result<_, _>>()?
        }
        _ => specs.iter().map(run_one).collect::<Result<_, _>>()?,
    };
    let summaries = summarize(&replications);
    Ok(ExperimentResult {
        replications,
        summaries,
    })
}

fn std_dev(xs: &[f64]) -> f64 {
    let Some(m) = mean(xs) else { return 0.0 };
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn summarize(reps: &[ReplicationResult]) -> Vec<RunSummary> {
    let mut out: Vec<RunSummary> = Vec::new();
    let mut i = 0;
    while i < reps.len() {
        let key = &reps[i].spec;
        let same = |s: &ReplicationSpec| {
            s.scheme == key.scheme && s.strategy == key.strategy && s.regime == key.regime && s.demand_bps == key.demand_bps
        };
        let group: Vec<&ReplicationResult> = reps[i..].iter().take_while(|r| same(&r.spec)).collect();
        i += group.len();

        let per_rep = |f: &dyn Fn(&KpiRecord) -> f64| -> Vec<f64> {
            group
                .iter()
                .map(|r| mean(&r.rapp.iter().map(|o| f(&o.record)).collect::<Vec<_>>()).unwrap_or(1.0))
                .collect()
        };
        let success = per_rep(&|k| k.success_rate);
        let fairness = per_rep(&|k| k.jfi);
        let share = per_rep(&|k| k.mean_service_share);
        let ues = per_rep(&|k| k.active_ues as f64);
        out.push(RunSummary {
            record: KpiRecord {
                scope: Scope::Run,
                scheme: key.scheme,
                strategy: key.strategy,
                regime: key.regime_name().to_string(),
                demand_bps: key.demand_bps,
                mu: None,
                rapp: None,
                xapp: None,
                success_rate: mean(&success).unwrap_or(1.0),
                jfi: mean(&fairness).unwrap_or(1.0),
                mean_service_share: mean(&share).unwrap_or(1.0),
                active_ues: mean(&ues).unwrap_or(0.0).round() as usize,
                seed: None,
                xapp_ids: None,
                vacuous: false,
            },
            seeds: group.len(),
            success_std: std_dev(&success),
            jfi_std: std_dev(&fairness),
        });
    }
    out
}
