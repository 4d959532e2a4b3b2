//! Conflict-aware proportional-fair time-sharing of PRBs over 10 ms windows.
//!
//! The coloring fixes which UEs may reuse a PRB; within each window the
//! scheduler lets uncolored UEs compete for PRBs against the colored holders,
//! ranked by PF score, so conflicting UEs alternate over time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::ColoringResult;
use crate::conflict::ExpandedGraph;
use crate::policy::PolicyProfile;
use crate::radio::{achievable_rate_bps, LinkBudget, UeId};

#[derive(Debug, Error, PartialEq)]
pub enum SchedulerError {
    #[error("UE {0} has no elapsed scheduling windows")]
    NoWindowsElapsed(UeId),
}

/// Per-UE scheduler history.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UeRecord {
    /// EMA throughput T_u.
    pub ema_bps: f64,
    pub served_windows: u64,
    pub satisfied_windows: u64,
    /// Windows elapsed since the UE became active.
    pub active_windows: u64,
}

impl UeRecord {
    pub fn service_share(&self) -> Option<f64> {
        (self.active_windows > 0).then(|| self.satisfied_windows as f64 / self.active_windows as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SchedulerState {
    records: BTreeMap<UeId, UeRecord>,
    total_windows: u64,
}

impl SchedulerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total_windows(&self) -> u64 {
        self.total_windows
    }

    /// Starts tracking a UE with a cold history; no-op if already tracked.
    pub fn activate(&mut self, id: UeId) {
        self.records.entry(id).or_default();
    }

    pub fn retire(&mut self, id: UeId) -> Option<UeRecord> {
        self.records.remove(&id)
    }

    pub fn record(&self, id: UeId) -> Option<&UeRecord> {
        self.records.get(&id)
    }

    pub fn records(&self) -> impl Iterator<Item = (UeId, &UeRecord)> {
        self.records.iter().map(|(k, v)| (*k, v))
    }

    /// Copies the records of `ids` into a dense vector (cold records for unknown ids).
    pub fn gather(&self, ids: &[UeId]) -> Vec<UeRecord> {
        ids.iter()
            .map(|id| self.records.get(id).copied().unwrap_or_default())
            .collect()
    }

    /// Writes dense records back and advances the global window counter.
    pub fn scatter(&mut self, ids: &[UeId], recs: &[UeRecord], windows_elapsed: u64) {
        for (id, r) in ids.iter().zip(recs) {
            self.records.insert(*id, *r);
        }
        self.total_windows += windows_elapsed;
    }

    pub fn service_share(&self, id: UeId) -> Result<f64, SchedulerError> {
        self.records
            .get(&id)
            .and_then(UeRecord::service_share)
            .ok_or(SchedulerError::NoWindowsElapsed(id))
    }
}

/// Priority-weighted PF metric `w · r / (T + ε)`.
pub fn pf_score(priority: f64, ema_bps: f64, rate_bps: f64, epsilon: f64) -> f64 {
    priority * rate_bps / (ema_bps + epsilon)
}

/// PRB grants for one window. Indices refer to the expanded graph's nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowAssignment {
    pub window_index: u64,
    pub prb_holders: Vec<Vec<usize>>,
    pub ue_prb: Vec<Option<usize>>,
}

impl WindowAssignment {
    pub fn empty(n_ues: usize, palette: usize) -> Self {
        Self {
            window_index: 0,
            prb_holders: vec![Vec::new(); palette],
            ue_prb: vec![None; n_ues],
        }
    }

    /// The spatial plan used as-is.
    pub fn from_coloring(coloring: &ColoringResult, window_index: u64) -> Self {
        let mut a = Self::empty(coloring.assignment.len(), coloring.palette_size);
        a.window_index = window_index;
        for (i, p) in coloring.assignment.iter().enumerate() {
            if let Some(p) = *p {
                a.prb_holders[p].push(i);
                a.ue_prb[i] = Some(p);
            }
        }
        a
    }

    pub fn served_count(&self) -> usize {
        self.ue_prb.iter().filter(|p| p.is_some()).count()
    }

    /// Adjacent pairs holding the same PRB, as node-index triples `(u, v, prb)`.
    pub fn conflicts(&self, g: &ExpandedGraph) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (p, holders) in self.prb_holders.iter().enumerate() {
            for (k, &u) in holders.iter().enumerate() {
                for &v in &holders[k + 1..] {
                    if g.adjacent(u, v) {
                        out.push((u.min(v), u.max(v), p));
                    }
                }
            }
        }
        out
    }
}

/// Reusable per-tick scheduler: the coloring and graph are fixed for an xApp
/// interval, so per-PRB candidate lists and buffers are built once.
#[derive(Debug, Clone)]
pub struct WindowScheduler<'a> {
    graph: &'a ExpandedGraph,
    colored_by_prb: Vec<Vec<usize>>,
    uncolored: Vec<usize>,
    scores: Vec<f64>,
    taken: Vec<bool>,
    candidates: Vec<usize>,
    assignment: WindowAssignment,
}

impl<'a> WindowScheduler<'a> {
    pub fn new(coloring: &ColoringResult, graph: &'a ExpandedGraph) -> Self {
        let n = graph.len();
        let palette = coloring.palette_size;
        let mut colored_by_prb = vec![Vec::new(); palette];
        let mut uncolored = Vec::new();
        for (i, p) in coloring.assignment.iter().enumerate() {
            match p {
                Some(p) => colored_by_prb[*p].push(i),
                None => uncolored.push(i),
            }
        }
        Self {
            graph,
            colored_by_prb,
            uncolored,
            scores: vec![0.0; n],
            taken: vec![false; n],
            candidates: Vec::with_capacity(n),
            assignment: WindowAssignment::empty(n, palette),
        }
    }

    pub fn has_uncolored(&self) -> bool {
        !self.uncolored.is_empty()
    }

    /// Runs one window. For each PRB in ascending order, its colored holders
    /// and every still-unserved uncolored UE are ranked by PF score (ties by
    /// id) and admitted while they conflict with no one already on the PRB.
    pub fn schedule(
        &mut self,
        records: &[UeRecord],
        priorities: &[f64],
        rates: &[f64],
        epsilon: f64,
        window_index: u64,
    ) -> &WindowAssignment {
        let g = self.graph;
        for (i, s) in self.scores.iter_mut().enumerate() {
            *s = pf_score(priorities[i], records[i].ema_bps, rates[i], epsilon);
        }
        let scores = &self.scores;
        let rank = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
        self.uncolored.sort_by(rank);

        self.taken.iter_mut().for_each(|t| *t = false);
        let a = &mut self.assignment;
        a.window_index = window_index;
        a.ue_prb.iter_mut().for_each(|p| *p = None);
        for (p, holders) in a.prb_holders.iter_mut().enumerate() {
            holders.clear();
            self.candidates.clear();
            self.candidates.extend_from_slice(&self.colored_by_prb[p]);
            self.candidates
                .extend(self.uncolored.iter().copied().filter(|&u| !self.taken[u]));
            self.candidates.sort_by(rank);
            for &c in &self.candidates {
                if self.taken[c] || holders.iter().any(|&h| g.adjacent(c, h)) {
                    continue;
                }
                holders.push(c);
                self.taken[c] = true;
                a.ue_prb[c] = Some(p);
            }
        }
        &self.assignment
    }
}

/// One-shot convenience over [`WindowScheduler`].
pub fn schedule_window(
    coloring: &ColoringResult,
    g: &ExpandedGraph,
    records: &[UeRecord],
    profile: &PolicyProfile,
    priorities: &[f64],
    rates: &[f64],
    window_index: u64,
) -> WindowAssignment {
    let mut ws = WindowScheduler::new(coloring, g);
    ws.schedule(records, priorities, rates, profile.fairness.epsilon, window_index)
        .clone()
}

/// Achieved rate per UE: Shannon rate under aggregate interference from every
/// other RU with a co-channel holder; zero when unserved.
pub fn realize_rates(a: &WindowAssignment, lb: &LinkBudget, out: &mut Vec<f64>) {
    out.clear();
    out.resize(a.ue_prb.len(), 0.0);
    let mut rus: Vec<usize> = Vec::with_capacity(lb.n_rus());
    for holders in &a.prb_holders {
        if holders.is_empty() {
            continue;
        }
        rus.clear();
        rus.extend(holders.iter().map(|&h| lb.serving(h)));
        rus.sort_unstable();
        rus.dedup();
        for &u in holders {
            let sinr = lb.sinr(u, rus.iter().copied());
            out[u] = achievable_rate_bps(sinr, lb.prb_bandwidth_hz());
        }
    }
}

/// Applies one window's outcome: EMA update for every active UE, served and
/// satisfied counters. Writes per-UE satisfaction into `satisfied`.
pub fn update_state(
    records: &mut [UeRecord],
    a: &WindowAssignment,
    achieved: &[f64],
    demands: &[f64],
    profile: &PolicyProfile,
    satisfied: &mut [bool],
) {
    let alpha = profile.fairness.alpha_ema;
    let keep = 1.0 - profile.tolerance;
    for (i, r) in records.iter_mut().enumerate() {
        r.ema_bps = (1.0 - alpha) * r.ema_bps + alpha * achieved[i];
        r.active_windows += 1;
        if a.ue_prb[i].is_some() {
            r.served_windows += 1;
        }
        let ok = a.ue_prb[i].is_some() && achieved[i] >= keep * demands[i];
        if ok {
            r.satisfied_windows += 1;
        }
        satisfied[i] = ok;
    }
}

/// One row of the optional per-window trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub window: u64,
    pub ue: UeId,
    pub prb: Option<usize>,
    pub achieved_bps: f64,
    pub satisfied: bool,
}
