//! Scenario configuration: JSON schema, defaults, presets and cross-field validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::Strategy;
use crate::orchestrator::Scheme;
use crate::policy::{FairnessParams, Sla, MAX_MU};
use crate::radio::{Area, ChannelParams, Position, RadioUnit, RuId, RuKind};
use crate::traffic::{ForecasterKind, SyntheticTraffic, UeCountMapping, SEASON_LENGTH};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub radio: RadioConfig,
    pub traffic: TrafficConfig,
    pub policy: PolicyConfig,
    pub scheduler: SchedulerConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub area: Area,
    pub channel: ChannelParams,
    pub rus: Vec<RuConfig>,
    pub ue_velocity_mps: f64,
    /// Mobility step, applied once per xApp tick.
    pub mobility_dt_s: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            area: Area::default(),
            channel: ChannelParams::default(),
            rus: vec![
                RuConfig::new(0, RuKind::Macro, 250.0, 250.0, 110.0),
                RuConfig::new(1, RuKind::Micro, 375.0, 375.0, 70.0),
            ],
            ue_velocity_mps: 1.0,
            mobility_dt_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuConfig {
    pub id: RuId,
    pub kind: RuKind,
    pub x: f64,
    pub y: f64,
    /// Defaults by kind when absent.
    #[serde(default)]
    pub tx_power_dbm: Option<f64>,
    #[serde(default)]
    pub pathloss_exponent: Option<f64>,
    /// UEs homed on this RU arrive uniformly within this radius of it.
    #[serde(default = "default_spawn_radius")]
    pub spawn_radius_m: f64,
}

fn default_spawn_radius() -> f64 {
    100.0
}

impl RuConfig {
    pub fn new(id: RuId, kind: RuKind, x: f64, y: f64, spawn_radius_m: f64) -> Self {
        Self {
            id,
            kind,
            x,
            y,
            tx_power_dbm: Some(kind.default_tx_power_dbm()),
            pathloss_exponent: Some(kind.default_pathloss_exponent()),
            spawn_radius_m,
        }
    }

    pub fn to_radio_unit(&self) -> RadioUnit {
        let mut ru = RadioUnit::new(self.id, self.kind, Position::new(self.x, self.y));
        if let Some(p) = self.tx_power_dbm {
            ru.tx_power_dbm = p;
        }
        if let Some(n) = self.pathloss_exponent {
            ru.pathloss_exponent = n;
        }
        ru
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// `timestamp,ru_id,load` CSV; the synthetic generator is used when absent.
    pub dataset: Option<PathBuf>,
    pub synthetic: SyntheticTraffic,
    /// Per-RU shares applied when the dataset holds a single aggregate series.
    pub aggregate_shares: Vec<f64>,
    pub mapping: UeCountMapping,
    pub forecaster: ForecasterKind,
    /// Forecast horizon in 15-minute steps.
    pub horizon_steps: usize,
    /// Samples reserved as forecaster history before the first simulated interval.
    pub history_samples: usize,
    /// UEs older than this many rApp intervals depart at the next boundary.
    pub max_session_intervals: u64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            synthetic: SyntheticTraffic::default(),
            aggregate_shares: vec![0.6, 0.4],
            mapping: UeCountMapping::default(),
            forecaster: ForecasterKind::default(),
            horizon_steps: 1,
            history_samples: SEASON_LENGTH,
            max_session_intervals: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub priorities: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub strategy: Strategy,
    pub headroom: f64,
    /// Numerology used when no policy guidance is available.
    pub static_mu: u8,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        let sla = Sla::default();
        Self {
            priorities: sla.priorities,
            tolerance: sla.tolerance,
            strategy: Strategy::WelshPowell,
            headroom: sla.headroom,
            static_mu: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub alpha_ema: f64,
    pub epsilon: f64,
    /// A UE counts as satisfied for an xApp tick when satisfied in at least
    /// this fraction of the tick's windows.
    pub satisfied_window_fraction: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        let f = FairnessParams::default();
        Self {
            alpha_ema: f.alpha_ema,
            epsilon: f.epsilon,
            satisfied_window_fraction: 0.5,
        }
    }
}

/// Fixed per-RU populations replacing the traffic-driven ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regime {
    pub name: String,
    pub ue_per_ru: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordLevel {
    /// Every xApp tick is emitted.
    Xapp,
    /// Only rApp and run summaries are emitted.
    Rapp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schemes: Vec<Scheme>,
    /// Strategies swept; empty means `policy.strategy` alone.
    pub strategies: Vec<Strategy>,
    pub demand_bps: Vec<f64>,
    pub seeds: Vec<u64>,
    pub rapp_intervals: usize,
    /// First simulated interval, counted in 15-minute samples after the history.
    pub start_interval: usize,
    pub xapp_per_rapp: usize,
    pub windows_per_xapp: usize,
    pub regimes: Vec<Regime>,
    pub record_level: RecordLevel,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schemes: vec![Scheme::Full],
            strategies: Vec::new(),
            demand_bps: vec![2e6],
            seeds: vec![1],
            rapp_intervals: SEASON_LENGTH,
            start_interval: 0,
            xapp_per_rapp: 900,
            windows_per_xapp: 100,
            regimes: Vec::new(),
            record_level: RecordLevel::Xapp,
        }
    }
}

/// One problem found in a config, addressed by dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{} semantic error(s): {}", .0.len(), .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Semantic(Vec<Diagnostic>),
    #[error("unknown preset `{0}` (expected fig4 or fig5)")]
    UnknownPreset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ScenarioConfig {
    /// Parses JSON, fills defaults and validates; never returns a partial config.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.resolve();
        let diags = cfg.validate();
        if diags.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Semantic(diags))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Makes every kind-dependent default explicit.
    pub fn resolve(&mut self) {
        for ru in &mut self.radio.rus {
            ru.tx_power_dbm.get_or_insert(ru.kind.default_tx_power_dbm());
            ru.pathloss_exponent.get_or_insert(ru.kind.default_pathloss_exponent());
        }
        if self.run.strategies.is_empty() {
            self.run.strategies = vec![self.policy.strategy];
        }
    }

    pub fn sla(&self) -> Sla {
        Sla {
            priorities: self.policy.priorities.clone(),
            tolerance: self.policy.tolerance,
            fairness: FairnessParams {
                alpha_ema: self.scheduler.alpha_ema,
                epsilon: self.scheduler.epsilon,
            },
            headroom: self.policy.headroom,
        }
    }

    pub fn radio_units(&self) -> Vec<RadioUnit> {
        self.radio.rus.iter().map(RuConfig::to_radio_unit).collect()
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut d = Diagnostics::default();
        let r = &self.radio;
        d.check(r.area.width > 0.0, "radio.area.width", "must be positive");
        d.check(r.area.height > 0.0, "radio.area.height", "must be positive");
        let ch = &r.channel;
        d.check(ch.bandwidth_hz > 0.0, "radio.channel.bandwidth_hz", "must be positive");
        d.check(ch.carrier_ghz > 0.0, "radio.channel.carrier_ghz", "must be positive");
        d.check(ch.reference_distance_m > 0.0, "radio.channel.reference_distance_m", "must be positive");
        d.check(ch.shadowing_sigma_db >= 0.0, "radio.channel.shadowing_sigma_db", "must be non-negative");
        d.check(r.ue_velocity_mps >= 0.0, "radio.ue_velocity_mps", "must be non-negative");
        d.check(r.mobility_dt_s > 0.0, "radio.mobility_dt_s", "must be positive");
        d.check(!r.rus.is_empty(), "radio.rus", "at least one RU is required");
        let mut ids = BTreeSet::new();
        for (i, ru) in r.rus.iter().enumerate() {
            let path = format!("radio.rus[{i}]");
            d.check(ids.insert(ru.id), &format!("{path}.id"), "duplicate RU id");
            d.check(
                r.area.contains(&Position::new(ru.x, ru.y)),
                &format!("{path}.x"),
                "RU lies outside the area",
            );
            if let Some(n) = ru.pathloss_exponent {
                d.check(n > 2.0, &format!("{path}.pathloss_exponent"), "must exceed 2.0");
            }
            d.check(ru.spawn_radius_m > 0.0, &format!("{path}.spawn_radius_m"), "must be positive");
        }

        let t = &self.traffic;
        let m = &t.mapping;
        d.check(m.n_min >= 1, "traffic.mapping.n_min", "must be at least 1");
        if m.n_min > m.n_max {
            d.push(
                "traffic.mapping.n_min",
                format!("n_min ({}) exceeds traffic.mapping.n_max ({})", m.n_min, m.n_max),
            );
            d.push(
                "traffic.mapping.n_max",
                format!("n_max ({}) is below traffic.mapping.n_min ({})", m.n_max, m.n_min),
            );
        }
        d.check(m.x_max > m.x_min, "traffic.mapping.x_max", "must exceed traffic.mapping.x_min");
        d.check(t.horizon_steps >= 1, "traffic.horizon_steps", "must be at least 1");
        d.check(
            t.history_samples >= t.forecaster.min_samples(),
            "traffic.history_samples",
            &format!("forecaster {} needs at least {} samples", t.forecaster.name(), t.forecaster.min_samples()),
        );
        match t.forecaster {
            ForecasterKind::ExpSmoothing { alpha } => {
                d.check(alpha > 0.0 && alpha <= 1.0, "traffic.forecaster.alpha", "must lie in (0, 1]")
            }
            ForecasterKind::LinearAr { order } => d.check(order >= 1, "traffic.forecaster.order", "must be at least 1"),
            ForecasterKind::SeasonalNaive { season } => {
                d.check(season >= 1, "traffic.forecaster.season", "must be at least 1")
            }
            ForecasterKind::Persistence => {}
        }
        d.check(t.synthetic.days >= 1, "traffic.synthetic.days", "must be at least 1");
        d.check(!t.synthetic.mean_load.is_empty(), "traffic.synthetic.mean_load", "must not be empty");
        d.check(!t.synthetic.amplitude.is_empty(), "traffic.synthetic.amplitude", "must not be empty");
        d.check(t.synthetic.noise_std >= 0.0, "traffic.synthetic.noise_std", "must be non-negative");
        d.check(t.max_session_intervals >= 1, "traffic.max_session_intervals", "must be at least 1");
        if t.dataset.is_none() {
            let available = t.synthetic.days * SEASON_LENGTH;
            let needed = t.history_samples + self.run.start_interval + self.run.rapp_intervals;
            d.check(
                !self.run.regimes.is_empty() || needed <= available,
                "traffic.synthetic.days",
                &format!("{needed} samples needed, {available} generated"),
            );
        }

        let p = &self.policy;
        d.check(p.static_mu <= MAX_MU, "policy.static_mu", "numerology must lie in 0..=4");
        d.check((0.0..1.0).contains(&p.tolerance), "policy.tolerance", "must lie in [0, 1)");
        d.check(p.headroom >= 1.0, "policy.headroom", "must be at least 1");
        d.check(!p.priorities.is_empty(), "policy.priorities", "at least one class is required");
        for (class, w) in &p.priorities {
            d.check(*w >= 1.0, &format!("policy.priorities.{class}"), "weight must be at least 1");
        }

        let s = &self.scheduler;
        d.check(s.alpha_ema > 0.0 && s.alpha_ema <= 1.0, "scheduler.alpha_ema", "must lie in (0, 1]");
        d.check(s.epsilon > 0.0, "scheduler.epsilon", "must be positive");
        d.check(
            s.satisfied_window_fraction > 0.0 && s.satisfied_window_fraction <= 1.0,
            "scheduler.satisfied_window_fraction",
            "must lie in (0, 1]",
        );

        let run = &self.run;
        d.check(!run.schemes.is_empty(), "run.schemes", "at least one scheme is required");
        d.check(!run.demand_bps.is_empty(), "run.demand_bps", "at least one demand level is required");
        for (i, v) in run.demand_bps.iter().enumerate() {
            d.check(*v > 0.0, &format!("run.demand_bps[{i}]"), "must be positive");
        }
        d.check(!run.seeds.is_empty(), "run.seeds", "at least one seed is required");
        d.check(run.rapp_intervals >= 1, "run.rapp_intervals", "must be at least 1");
        d.check(run.xapp_per_rapp >= 1, "run.xapp_per_rapp", "must be at least 1");
        d.check(run.windows_per_xapp >= 1, "run.windows_per_xapp", "must be at least 1");
        for (i, reg) in run.regimes.iter().enumerate() {
            d.check(
                reg.ue_per_ru.len() == r.rus.len(),
                &format!("run.regimes[{i}].ue_per_ru"),
                "needs one count per RU",
            );
        }
        d.0
    }
}

#[derive(Default)]
struct Diagnostics(Vec<Diagnostic>);

impl Diagnostics {
    fn push(&mut self, field: &str, message: String) {
        self.0.push(Diagnostic {
            field: field.to_string(),
            message,
        });
    }

    fn check(&mut self, ok: bool, field: &str, message: &str) {
        if !ok {
            self.push(field, message.to_string());
        }
    }
}

/// Named scenario presets.
pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = match name {
        "fig4" => fig4_preset(),
        "fig5" => fig5_preset(),
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    };
    cfg.resolve();
    Ok(cfg)
}

/// Strategy comparison: two fixed load regimes (≈12 and ≈26 UEs), spatial
/// allocation only, 2 Mbps demand, 30 seeds.
pub fn fig4_preset() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.policy.headroom = 1.0;
    cfg.run = RunConfig {
        schemes: vec![Scheme::RappXappOnly],
        strategies: Strategy::ALL.to_vec(),
        demand_bps: vec![2e6],
        seeds: (1..=30).collect(),
        rapp_intervals: 1,
        regimes: vec![
            Regime {
                name: "low".into(),
                ue_per_ru: vec![6, 6],
            },
            Regime {
                name: "high".into(),
                ue_per_ru: vec![14, 12],
            },
        ],
        record_level: RecordLevel::Rapp,
        ..RunConfig::default()
    };
    cfg
}

/// Scheme comparison over a full day of synthetic traffic at 1, 2 and 3 Mbps, 10 seeds.
pub fn fig5_preset() -> ScenarioConfig {
    ScenarioConfig {
        run: RunConfig {
            schemes: vec![Scheme::RappXappOnly, Scheme::XappDappOnly, Scheme::Full],
            strategies: vec![Strategy::WelshPowell],
            demand_bps: vec![1e6, 2e6, 3e6],
            seeds: (1..=10).collect(),
            rapp_intervals: SEASON_LENGTH,
            record_level: RecordLevel::Rapp,
            ..RunConfig::default()
        },
        ..ScenarioConfig::default()
    }
}
