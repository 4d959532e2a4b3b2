//! Deterministic multi-timescale simulator for hierarchical RAN control:
//! forecast-driven policy, conflict-aware PRB coloring and proportional-fair
//! time sharing.

pub mod coloring;
pub mod config;
pub mod conflict;
pub mod metrics;
pub mod orchestrator;
pub mod policy;
pub mod radio;
pub mod scheduler;
pub mod traffic;
