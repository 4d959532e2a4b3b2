//! Interference hypergraph over active UEs: one exclusivity hyperedge per RU
//! plus pairwise inter-RU conflict edges, and its clique expansion.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coloring::{ColoringResult, Strategy};
use crate::policy::{NumerologyConfig, PolicyProfile};
use crate::radio::{LinkBudget, Position, RadioEnvironment, RuId, UeId};

/// Tolerance is clamped below this so the threshold stays positive.
const MAX_TOLERANCE: f64 = 1.0 - 1e-12;

/// Linear SINR needed to carry `(1 - tolerance) · demand` on one PRB.
pub fn required_sinr(demand_bps: f64, tolerance: f64, prb_bandwidth_hz: f64) -> f64 {
    let tol = tolerance.clamp(0.0, MAX_TOLERANCE);
    ((1.0 - tol) * demand_bps / prb_bandwidth_hz).exp2() - 1.0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictHypergraph {
    /// Sorted UE ids.
    pub nodes: Vec<UeId>,
    /// One sorted set per RU with at least two attached UEs, in RU order.
    pub hyperedges: Vec<Vec<UeId>>,
    /// Inter-RU conflicts as `(low, high)` id pairs, sorted.
    pub pair_edges: Vec<(UeId, UeId)>,
}

impl ConflictHypergraph {
    pub fn empty() -> Self {
        Self {
            nodes: Vec::new(),
            hyperedges: Vec::new(),
            pair_edges: Vec::new(),
        }
    }

    pub fn has_pair_edge(&self, u: UeId, v: UeId) -> bool {
        let key = if u < v { (u, v) } else { (v, u) };
        self.pair_edges.binary_search(&key).is_ok()
    }
}

/// Builds the hypergraph from the environment snapshot. UEs must already be attached.
pub fn build_hypergraph(
    env: &RadioEnvironment,
    profile: &PolicyProfile,
    num: &NumerologyConfig,
) -> ConflictHypergraph {
    let lb = LinkBudget::new(env, num.prb_bandwidth_hz);
    build_hypergraph_with(env, &lb, profile.tolerance)
}

/// Same as [`build_hypergraph`] with a precomputed link budget whose PRB
/// bandwidth fixes the numerology.
pub fn build_hypergraph_with(
    env: &RadioEnvironment,
    lb: &LinkBudget,
    tolerance: f64,
) -> ConflictHypergraph {
    let n = env.ues.len();
    let nodes: Vec<UeId> = env.ues.iter().map(|u| u.id).collect();

    let mut per_ru: BTreeMap<usize, Vec<UeId>> = BTreeMap::new();
    for (i, ue) in env.ues.iter().enumerate() {
        per_ru.entry(lb.serving(i)).or_default().push(ue.id);
    }
    let hyperedges: Vec<Vec<UeId>> = per_ru.into_values().filter(|m| m.len() >= 2).collect();

    let gamma: Vec<f64> = env
        .ues
        .iter()
        .map(|u| required_sinr(u.demand_bps, tolerance, lb.prb_bandwidth_hz()))
        .collect();
    let mut pair_edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let (ru_u, ru_v) = (lb.serving(u), lb.serving(v));
            if ru_u == ru_v {
                continue;
            }
            let sinr_u = lb.sinr(u, [ru_v]);
            let sinr_v = lb.sinr(v, [ru_u]);
            if sinr_u < gamma[u] || sinr_v < gamma[v] {
                let (a, b) = (nodes[u], nodes[v]);
                pair_edges.push((a.min(b), a.max(b)));
            }
        }
    }
    pair_edges.sort_unstable();
    ConflictHypergraph {
        nodes,
        hyperedges,
        pair_edges,
    }
}

/// Simple graph whose proper colorings are exactly the valid PRB plans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedGraph {
    nodes: Vec<UeId>,
    adjacency: Vec<Vec<usize>>,
    matrix: Vec<bool>,
}

impl ExpandedGraph {
    /// Builds from node ids and id-pair edges. Self-loops are dropped,
    /// duplicates merged.
    pub fn from_edges(nodes: &[UeId], edges: &[(UeId, UeId)]) -> Self {
        let mut ids = nodes.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let n = ids.len();
        let mut matrix = vec![false; n * n];
        let idx = |id: UeId| ids.binary_search(&id).expect("edge endpoint is a node");
        for &(a, b) in edges {
            let (i, j) = (idx(a), idx(b));
            if i != j {
                matrix[i * n + j] = true;
                matrix[j * n + i] = true;
            }
        }
        let adjacency = (0..n)
            .map(|i| (0..n).filter(|&j| matrix[i * n + j]).collect())
            .collect();
        Self {
            nodes: ids,
            adjacency,
            matrix,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node ids, ascending; node index `i` is `nodes()[i]`.
    pub fn nodes(&self) -> &[UeId] {
        &self.nodes
    }

    pub fn index_of(&self, id: UeId) -> Option<usize> {
        self.nodes.binary_search(&id).ok()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.matrix[i * self.nodes.len() + j]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as id pairs `(low, high)`, sorted.
    pub fn edges(&self) -> Vec<(UeId, UeId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, nb) in self.adjacency.iter().enumerate() {
            for &j in nb.iter().filter(|&&j| j > i) {
                out.push((self.nodes[i], self.nodes[j]));
            }
        }
        out
    }
}

/// Clique expansion: every hyperedge becomes a clique, pair edges are kept.
pub fn expand(h: &ConflictHypergraph) -> ExpandedGraph {
    let mut edges = h.pair_edges.clone();
    for he in &h.hyperedges {
        for (k, &a) in he.iter().enumerate() {
            for &b in &he[k + 1..] {
                edges.push((a, b));
            }
        }
    }
    ExpandedGraph::from_edges(&h.nodes, &edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDump {
    pub id: UeId,
    pub x: f64,
    pub y: f64,
    pub serving_ru: RuId,
    pub prb: Option<usize>,
}

/// JSON snapshot of one hypergraph and (optionally) its PRB assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDump {
    pub rapp: u64,
    pub xapp: u64,
    pub mu: u8,
    pub palette_size: usize,
    pub strategy: Option<Strategy>,
    pub rus: Vec<(RuId, Position)>,
    pub nodes: Vec<NodeDump>,
    pub hyperedges: Vec<Vec<UeId>>,
    pub pair_edges: Vec<(UeId, UeId)>,
}

impl GraphDump {
    pub fn new(
        env: &RadioEnvironment,
        h: &ConflictHypergraph,
        coloring: Option<&ColoringResult>,
        num: &NumerologyConfig,
        rapp: u64,
        xapp: u64,
    ) -> Self {
        let nodes = env
            .ues
            .iter()
            .map(|ue| NodeDump {
                id: ue.id,
                x: ue.position.x,
                y: ue.position.y,
                serving_ru: ue.serving_ru,
                prb: coloring.and_then(|c| c.prb_of(ue.id)),
            })
            .collect();
        Self {
            rapp,
            xapp,
            mu: num.mu,
            palette_size: num.prb_count,
            strategy: coloring.map(|c| c.strategy),
            rus: env.rus.iter().map(|r| (r.id, r.position)).collect(),
            nodes,
            hyperedges: h.hyperedges.clone(),
            pair_edges: h.pair_edges.clone(),
        }
    }
}
