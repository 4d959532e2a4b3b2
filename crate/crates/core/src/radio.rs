//! Two-tier radio deployment: RU/UE geometry, random-walk mobility,
//! log-distance pathloss, per-PRB SINR under co-channel reuse and Shannon rate.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub type RuId = u32;
pub type UeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Rectangular simulation area anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Default for Area {
    fn default() -> Self {
        Self {
            width: 500.0,
            height: 500.0,
        }
    }
}

impl Area {
    pub fn contains(&self, p: &Position) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    /// Mirrors a point back inside the area across whichever walls it crossed.
    pub fn reflect(&self, p: Position) -> Position {
        Position::new(reflect_axis(p.x, self.width), reflect_axis(p.y, self.height))
    }
}

fn reflect_axis(mut v: f64, max: f64) -> f64 {
    if max <= 0.0 {
        return 0.0;
    }
    // Steps longer than the area fold more than once.
    loop {
        if v < 0.0 {
            v = -v;
        } else if v > max {
            v = 2.0 * max - v;
        } else {
            return v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuKind {
    Macro,
    Micro,
}

impl RuKind {
    pub fn default_tx_power_dbm(self) -> f64 {
        match self {
            RuKind::Macro => 20.0,
            RuKind::Micro => 10.0,
        }
    }

    pub fn default_pathloss_exponent(self) -> f64 {
        match self {
            RuKind::Macro => 3.5,
            RuKind::Micro => 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioUnit {
    pub id: RuId,
    pub kind: RuKind,
    pub position: Position,
    /// Per-PRB transmit power.
    pub tx_power_dbm: f64,
    pub pathloss_exponent: f64,
}

impl RadioUnit {
    pub fn new(id: RuId, kind: RuKind, position: Position) -> Self {
        Self {
            id,
            kind,
            position,
            tx_power_dbm: kind.default_tx_power_dbm(),
            pathloss_exponent: kind.default_pathloss_exponent(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub id: UeId,
    pub position: Position,
    pub serving_ru: RuId,
    /// RU whose traffic series spawned this UE; used for population accounting.
    pub home_ru: RuId,
    pub demand_bps: f64,
    pub priority: f64,
    pub velocity_mps: f64,
    /// Priority class name, resolved to `priority` through the policy profile.
    pub class: String,
    /// rApp interval in which the UE arrived.
    pub born_rapp: u64,
    /// Static log-normal shadowing per RU index (empty when disabled).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shadowing_db: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    pub pl_intercept_db: f64,
    pub noise_psd_dbm_hz: f64,
    pub reference_distance_m: f64,
    /// Standard deviation of the optional per-link shadowing term.
    pub shadowing_sigma_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_ghz: 3.5,
            bandwidth_hz: 10e6,
            pl_intercept_db: 43.3,
            noise_psd_dbm_hz: -174.0,
            reference_distance_m: 1.0,
            shadowing_sigma_db: 0.0,
        }
    }
}

/// Snapshot of the deployment. Cheap to clone; owns no shared state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioEnvironment {
    pub area: Area,
    pub channel: ChannelParams,
    pub rus: Vec<RadioUnit>,
    /// Kept sorted by UE id.
    pub ues: Vec<UserEquipment>,
}

impl RadioEnvironment {
    pub fn new(area: Area, channel: ChannelParams, rus: Vec<RadioUnit>) -> Self {
        Self {
            area,
            channel,
            rus,
            ues: Vec::new(),
        }
    }

    pub fn ru(&self, id: RuId) -> Option<&RadioUnit> {
        self.rus.iter().find(|r| r.id == id)
    }

    pub fn ru_index(&self, id: RuId) -> Option<usize> {
        self.rus.iter().position(|r| r.id == id)
    }

    pub fn ue(&self, id: UeId) -> Option<&UserEquipment> {
        self.ues
            .binary_search_by_key(&id, |u| u.id)
            .ok()
            .map(|i| &self.ues[i])
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Log-distance pathloss; distances below the reference distance are clamped up to it.
pub fn pathloss_db(ru: &RadioUnit, pos: &Position, ch: &ChannelParams) -> f64 {
    let d0 = ch.reference_distance_m;
    let d = ru.position.distance(pos).max(d0);
    ch.pl_intercept_db + 10.0 * ru.pathloss_exponent * (d / d0).log10()
}

pub fn rx_power_dbm(ru: &RadioUnit, pos: &Position, ch: &ChannelParams) -> f64 {
    ru.tx_power_dbm - pathloss_db(ru, pos, ch)
}

fn ue_rx_power_dbm(ue: &UserEquipment, ru_idx: usize, ru: &RadioUnit, ch: &ChannelParams) -> f64 {
    rx_power_dbm(ru, &ue.position, ch) - ue.shadowing_db.get(ru_idx).copied().unwrap_or(0.0)
}

/// Thermal noise power over `bandwidth_hz`, in watts.
pub fn noise_watts(noise_psd_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(noise_psd_dbm_hz + 10.0 * bandwidth_hz.log10())
}

pub fn sinr_from_powers(signal_w: f64, interference_w: f64, noise_w: f64) -> f64 {
    signal_w / (noise_w + interference_w)
}

/// SINR of `ue` on one PRB of width `prb_bandwidth_hz`, with every RU in
/// `interferers` transmitting co-channel.
pub fn sinr_linear(
    ue: &UserEquipment,
    interferers: &[&RadioUnit],
    prb_bandwidth_hz: f64,
    env: &RadioEnvironment,
) -> f64 {
    let ch = &env.channel;
    let power_w = |ru: &RadioUnit| {
        let idx = env.ru_index(ru.id).unwrap_or(usize::MAX);
        dbm_to_watts(ue_rx_power_dbm(ue, idx, ru, ch))
    };
    let signal = env.ru(ue.serving_ru).map(power_w).unwrap_or(0.0);
    let interference: f64 = interferers
        .iter()
        .filter(|r| r.id != ue.serving_ru)
        .map(|r| power_w(r))
        .sum();
    sinr_from_powers(
        signal,
        interference,
        noise_watts(ch.noise_psd_dbm_hz, prb_bandwidth_hz),
    )
}

/// Shannon rate over one PRB.
pub fn achievable_rate_bps(sinr_linear: f64, prb_bandwidth_hz: f64) -> f64 {
    prb_bandwidth_hz * (1.0 + sinr_linear.max(0.0)).log2()
}

/// Moves every UE `velocity · dt` in a uniformly drawn direction, reflecting at
/// the area walls. One draw per UE in ascending id order.
pub fn step_mobility<R: Rng + ?Sized>(
    ues: &mut [UserEquipment],
    area: &Area,
    dt_s: f64,
    rng: &mut R,
) {
    debug_assert!(ues.windows(2).all(|w| w[0].id < w[1].id));
    for ue in ues.iter_mut() {
        let theta = rng.gen::<f64>() * 2.0 * PI;
        let step = ue.velocity_mps * dt_s;
        if step == 0.0 {
            continue;
        }
        let moved = Position::new(
            ue.position.x + step * theta.cos(),
            ue.position.y + step * theta.sin(),
        );
        ue.position = area.reflect(moved);
    }
}

/// Attaches every UE to the RU with the strongest received power; ties go to
/// the lower RU id.
pub fn attach_ues(ues: &mut [UserEquipment], rus: &[RadioUnit], ch: &ChannelParams) {
    assert!(!rus.is_empty(), "attach_ues needs at least one RU");
    for ue in ues.iter_mut() {
        let mut best: Option<(f64, RuId)> = None;
        for (idx, ru) in rus.iter().enumerate() {
            let p = ue_rx_power_dbm(ue, idx, ru, ch);
            best = match best {
                Some((bp, bid)) if bp > p || (bp == p && bid < ru.id) => Some((bp, bid)),
                _ => Some((p, ru.id)),
            };
        }
        ue.serving_ru = best.map(|(_, id)| id).expect("non-empty RU list");
    }
}

/// Received powers (watts) of every UE from every RU, frozen for one xApp tick.
///
/// Rows follow `env.ues` order, columns follow `env.rus` order.
#[derive(Debug, Clone)]
pub struct LinkBudget {
    n_rus: usize,
    rx_w: Vec<f64>,
    serving: Vec<usize>,
    noise_w: f64,
    prb_bandwidth_hz: f64,
}

impl LinkBudget {
    pub fn new(env: &RadioEnvironment, prb_bandwidth_hz: f64) -> Self {
        let n_rus = env.rus.len();
        let mut rx_w = Vec::with_capacity(env.ues.len() * n_rus);
        let mut serving = Vec::with_capacity(env.ues.len());
        for ue in &env.ues {
            for (idx, ru) in env.rus.iter().enumerate() {
                rx_w.push(dbm_to_watts(ue_rx_power_dbm(ue, idx, ru, &env.channel)));
            }
            serving.push(env.ru_index(ue.serving_ru).expect("serving RU exists"));
        }
        Self {
            n_rus,
            rx_w,
            serving,
            noise_w: noise_watts(env.channel.noise_psd_dbm_hz, prb_bandwidth_hz),
            prb_bandwidth_hz,
        }
    }

    pub fn n_ues(&self) -> usize {
        self.serving.len()
    }

    pub fn n_rus(&self) -> usize {
        self.n_rus
    }

    pub fn noise_w(&self) -> f64 {
        self.noise_w
    }

    pub fn prb_bandwidth_hz(&self) -> f64 {
        self.prb_bandwidth_hz
    }

    /// Index (into `env.rus`) of the RU serving UE `ue`.
    pub fn serving(&self, ue: usize) -> usize {
        self.serving[ue]
    }

    pub fn rx_w(&self, ue: usize, ru: usize) -> f64 {
        self.rx_w[ue * self.n_rus + ru]
    }

    pub fn signal_w(&self, ue: usize) -> f64 {
        self.rx_w(ue, self.serving[ue])
    }

    /// SINR with the given RU indices transmitting co-channel; the serving RU is skipped.
    pub fn sinr(&self, ue: usize, interferers: impl IntoIterator<Item = usize>) -> f64 {
        let own = self.serving[ue];
        let i: f64 = interferers
            .into_iter()
            .filter(|&r| r != own)
            .map(|r| self.rx_w(ue, r))
            .sum();
        sinr_from_powers(self.signal_w(ue), i, self.noise_w)
    }

    /// Interference-free rate on the reference PRB.
    pub fn reference_rate_bps(&self, ue: usize) -> f64 {
        achievable_rate_bps(self.sinr(ue, std::iter::empty()), self.prb_bandwidth_hz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ru_at(id: RuId, kind: RuKind, x: f64, y: f64) -> RadioUnit {
        RadioUnit::new(id, kind, Position::new(x, y))
    }

    fn ue_at(id: UeId, x: f64, y: f64) -> UserEquipment {
        UserEquipment {
            id,
            position: Position::new(x, y),
            serving_ru: 0,
            home_ru: 0,
            demand_bps: 2e6,
            priority: 1.0,
            velocity_mps: 1.0,
            class: "default".into(),
            born_rapp: 0,
            shadowing_db: Vec::new(),
        }
    }

    #[test]
    fn pathloss_examples() {
        let ch = ChannelParams::default();
        let mut ru = ru_at(0, RuKind::Macro, 0.0, 0.0);
        assert!((pathloss_db(&ru, &Position::new(1.0, 0.0), &ch) - 43.3).abs() < 1e-12);
        // clamped below the reference distance
        assert!((pathloss_db(&ru, &Position::new(0.2, 0.0), &ch) - 43.3).abs() < 1e-12);
        assert!((pathloss_db(&ru, &Position::new(10.0, 0.0), &ch) - 78.3).abs() < 1e-9);
        ru.pathloss_exponent = 3.0;
        assert!((pathloss_db(&ru, &Position::new(0.0, 100.0), &ch) - 103.3).abs() < 1e-9);
    }

    #[test]
    fn sinr_power_examples() {
        assert!((sinr_from_powers(1e-11, 0.0, 1e-13) - 100.0).abs() < 1e-9);
        let s = sinr_from_powers(1e-11, 1e-11, 1e-16);
        assert!((s - 1.0).abs() / 1.0 < 1e-4);
        let n = noise_watts(-174.0, 180_000.0);
        assert!((watts_to_dbm(n) - (-121.447)).abs() < 1e-3);
        assert!((n - 7.16e-16).abs() / 7.16e-16 < 2e-3);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(achievable_rate_bps(0.0, 180e3), 0.0);
        assert!((achievable_rate_bps(3.0, 180e3) - 360_000.0).abs() < 1e-6);
        let r = achievable_rate_bps(5.858, 720e3);
        assert!((r - 2e6).abs() / 2e6 < 0.005);
    }

    #[test]
    fn reflection_at_walls() {
        let area = Area::default();
        let p = area.reflect(Position::new(-0.5, 250.0));
        assert_eq!(p, Position::new(0.5, 250.0));
        let p = area.reflect(Position::new(501.0, -2.0));
        assert_eq!(p, Position::new(499.0, 2.0));
        // multiple folds
        let p = area.reflect(Position::new(1250.0, 0.0));
        assert!(area.contains(&p));
    }

    #[test]
    fn zero_velocity_keeps_position() {
        let mut ues = vec![ue_at(0, 10.0, 10.0), ue_at(1, 20.0, 30.0)];
        ues.iter_mut().for_each(|u| u.velocity_mps = 0.0);
        let before = ues.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        step_mobility(&mut ues, &Area::default(), 1.0, &mut rng);
        assert_eq!(ues, before);
    }

    #[test]
    fn unit_step_has_unit_displacement() {
        let area = Area::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let mut ues = vec![ue_at(0, 250.0, 250.0)];
            step_mobility(&mut ues, &area, 1.0, &mut rng);
            let d = ues[0].position.distance(&Position::new(250.0, 250.0));
            assert!((d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn attachment_examples() {
        let ch = ChannelParams::default();
        let rus = vec![ru_at(0, RuKind::Macro, 250.0, 250.0)];
        let mut ues = vec![ue_at(0, 0.0, 0.0), ue_at(1, 499.0, 10.0)];
        attach_ues(&mut ues, &rus, &ch);
        assert!(ues.iter().all(|u| u.serving_ru == 0));

        // equidistant, equal exponents: 10 dB power gap decides
        let mut macro_ru = ru_at(0, RuKind::Macro, 0.0, 0.0);
        let mut micro_ru = ru_at(1, RuKind::Micro, 100.0, 0.0);
        macro_ru.pathloss_exponent = 3.0;
        micro_ru.pathloss_exponent = 3.0;
        let mut ues = vec![ue_at(0, 50.0, 0.0)];
        attach_ues(&mut ues, &[macro_ru, micro_ru], &ch);
        assert_eq!(ues[0].serving_ru, 0);

        // at the micro site with the macro 200 m away
        let rus = vec![
            ru_at(0, RuKind::Macro, 0.0, 0.0),
            ru_at(1, RuKind::Micro, 200.0, 0.0),
        ];
        let mut ues = vec![ue_at(0, 200.0, 0.0)];
        attach_ues(&mut ues, &rus, &ch);
        assert_eq!(ues[0].serving_ru, 1);
    }

    #[test]
    fn link_budget_matches_direct_sinr() {
        let rus = vec![
            ru_at(0, RuKind::Macro, 250.0, 250.0),
            ru_at(1, RuKind::Micro, 375.0, 375.0),
        ];
        let mut env = RadioEnvironment::new(Area::default(), ChannelParams::default(), rus);
        env.ues = vec![ue_at(0, 300.0, 300.0), ue_at(1, 100.0, 400.0)];
        attach_ues(&mut env.ues, &env.rus, &env.channel);
        let lb = LinkBudget::new(&env, 720e3);
        for (i, ue) in env.ues.iter().enumerate() {
            let other: Vec<&RadioUnit> = env.rus.iter().filter(|r| r.id != ue.serving_ru).collect();
            let direct = sinr_linear(ue, &other, 720e3, &env);
            let other_idx = 1 - lb.serving(i);
            let cached = lb.sinr(i, [other_idx]);
            assert!((direct - cached).abs() / direct < 1e-12);
        }
    }
}
