//! Numerology selection and assembly of the five-part policy profile handed
//! from the policy loop to the near-real-time allocator.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coloring::Strategy;

pub const MAX_MU: u8 = 4;
const SUBCARRIERS_PER_PRB: f64 = 12.0;
const BASE_SCS_HZ: f64 = 15_000.0;
/// Fraction of the carrier left after guard bands.
const USABLE_FRACTION: f64 = 0.9;

pub fn prb_bandwidth_hz(mu: u8) -> f64 {
    SUBCARRIERS_PER_PRB * BASE_SCS_HZ * f64::from(1u32 << mu)
}

pub fn slot_duration_s(mu: u8) -> f64 {
    0.001 / f64::from(1u32 << mu)
}

/// PRBs that fit in the usable 90% of `bandwidth_hz` at numerology `mu`.
pub fn prb_count(mu: u8, bandwidth_hz: f64) -> usize {
    (USABLE_FRACTION * bandwidth_hz / prb_bandwidth_hz(mu) + 1e-9).floor() as usize
}

/// Largest numerology whose PRB pool still gives every predicted UE (with
/// headroom) its own PRB; falls back to 0.
pub fn select_numerology(predicted_peak_ues: u32, bandwidth_hz: f64, headroom: f64) -> u8 {
    let need = (headroom * f64::from(predicted_peak_ues) - 1e-9).ceil().max(0.0) as usize;
    (0..=MAX_MU)
        .rev()
        .find(|&mu| prb_count(mu, bandwidth_hz) >= need)
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumerologyConfig {
    pub mu: u8,
    pub prb_bandwidth_hz: f64,
    pub prb_count: usize,
    pub slot_duration_s: f64,
}

impl NumerologyConfig {
    pub fn new(mu: u8, bandwidth_hz: f64) -> Self {
        assert!(mu <= MAX_MU, "numerology {mu} out of range");
        Self {
            mu,
            prb_bandwidth_hz: prb_bandwidth_hz(mu),
            prb_count: prb_count(mu, bandwidth_hz),
            slot_duration_s: slot_duration_s(mu),
        }
    }
}

/// PF fairness parameters (π₄).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FairnessParams {
    pub alpha_ema: f64,
    pub epsilon: f64,
}

impl Default for FairnessParams {
    fn default() -> Self {
        Self {
            alpha_ema: 0.1,
            epsilon: 1e3,
        }
    }
}

/// Operator SLA inputs to the profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sla {
    pub priorities: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub fairness: FairnessParams,
    pub headroom: f64,
}

impl Default for Sla {
    fn default() -> Self {
        Self {
            priorities: BTreeMap::from([("default".to_string(), 1.0)]),
            tolerance: 0.0,
            fairness: FairnessParams::default(),
            headroom: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyProfile {
    /// π₁: priority weight per UE class.
    pub priorities: BTreeMap<String, f64>,
    /// π₂: tolerated rate degradation; a UE is satisfied at `(1 - tolerance) · demand`.
    pub tolerance: f64,
    /// π₃
    pub strategy: Strategy,
    /// π₄
    pub fairness: FairnessParams,
    /// π₅
    pub numerology: u8,
}

impl PolicyProfile {
    /// Weight of a class; unknown classes get 1.
    pub fn priority_of(&self, class: &str) -> f64 {
        self.priorities.get(class).copied().unwrap_or(1.0)
    }

    pub fn numerology_config(&self, bandwidth_hz: f64) -> NumerologyConfig {
        NumerologyConfig::new(self.numerology, bandwidth_hz)
    }
}

pub fn build_policy_profile(
    forecast_peak_ues: u32,
    sla: &Sla,
    strategy: Strategy,
    bandwidth_hz: f64,
) -> PolicyProfile {
    PolicyProfile {
        priorities: sla.priorities.clone(),
        tolerance: sla.tolerance,
        strategy,
        fairness: sla.fairness,
        numerology: select_numerology(forecast_peak_ues, bandwidth_hz, sla.headroom),
    }
}

/// Profile used without policy guidance: numerology pinned to `mu`.
pub fn static_policy_profile(mu: u8, sla: &Sla, strategy: Strategy) -> PolicyProfile {
    PolicyProfile {
        priorities: sla.priorities.clone(),
        tolerance: sla.tolerance,
        strategy,
        fairness: sla.fairness,
        numerology: mu,
    }
}
