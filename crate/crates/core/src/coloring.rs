//! Bounded-palette coloring of the expanded conflict graph. Each color is a
//! PRB index; nodes that cannot be colored within the palette stay unassigned.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conflict::ExpandedGraph;
use crate::radio::UeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "seq-color")]
    SeqColor,
    #[serde(rename = "g-color")]
    Greedy,
    #[serde(rename = "dsatur")]
    DSatur,
    #[serde(rename = "wp-color")]
    WelshPowell,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Random,
        Strategy::SeqColor,
        Strategy::Greedy,
        Strategy::DSatur,
        Strategy::WelshPowell,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::SeqColor => "seq-color",
            Strategy::Greedy => "g-color",
            Strategy::DSatur => "dsatur",
            Strategy::WelshPowell => "wp-color",
        }
    }

    pub fn is_seeded(self) -> bool {
        matches!(self, Strategy::Random)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoringResult {
    /// Indexed like the graph's nodes.
    pub assignment: Vec<Option<usize>>,
    pub node_ids: Vec<UeId>,
    pub palette_size: usize,
    pub strategy: Strategy,
    pub colors_used: usize,
}

impl ColoringResult {
    fn finalize(g: &ExpandedGraph, assignment: Vec<Option<usize>>, palette: usize, strategy: Strategy) -> Self {
        let mut used = vec![false; palette];
        for p in assignment.iter().flatten() {
            used[*p] = true;
        }
        let r = Self {
            assignment,
            node_ids: g.nodes().to_vec(),
            palette_size: palette,
            strategy,
            colors_used: used.iter().filter(|&&u| u).count(),
        };
        let violations = validate_coloring(g, &r);
        assert!(violations.is_empty(), "{strategy} produced {violations:?}");
        r
    }

    pub fn prb_of(&self, id: UeId) -> Option<usize> {
        self.node_ids
            .binary_search(&id)
            .ok()
            .and_then(|i| self.assignment[i])
    }

    pub fn assigned_count(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_some()).count()
    }

    pub fn unassigned_count(&self) -> usize {
        self.assignment.len() - self.assigned_count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SharedPrb { u: UeId, v: UeId, prb: usize },
    OutOfPalette { ue: UeId, prb: usize },
}

/// Every adjacent pair sharing a PRB and every index outside the palette.
pub fn validate_coloring(g: &ExpandedGraph, r: &ColoringResult) -> Vec<Violation> {
    let mut out = Vec::new();
    let ids = g.nodes();
    for (i, a) in r.assignment.iter().enumerate() {
        let Some(p) = *a else { continue };
        if p >= r.palette_size {
            out.push(Violation::OutOfPalette { ue: ids[i], prb: p });
        }
        for &j in g.neighbors(i).iter().filter(|&&j| j > i) {
            if r.assignment[j] == Some(p) {
                out.push(Violation::SharedPrb {
                    u: ids[i],
                    v: ids[j],
                    prb: p,
                });
            }
        }
    }
    out
}

fn conflicts(g: &ExpandedGraph, assignment: &[Option<usize>], i: usize, prb: usize) -> bool {
    g.neighbors(i).iter().any(|&j| assignment[j] == Some(prb))
}

fn smallest_free(g: &ExpandedGraph, assignment: &[Option<usize>], i: usize, palette: usize, scratch: &mut Vec<bool>) -> Option<usize> {
    scratch.clear();
    scratch.resize(palette, false);
    for &j in g.neighbors(i) {
        if let Some(p) = assignment[j] {
            scratch[p] = true;
        }
    }
    scratch.iter().position(|&taken| !taken)
}

/// Uniform PRB per node in id order; kept only if no earlier-kept neighbor holds it.
pub fn color_random<R: Rng + ?Sized>(g: &ExpandedGraph, palette: usize, rng: &mut R) -> ColoringResult {
    assert!(palette >= 1);
    let mut assignment = vec![None; g.len()];
    for i in 0..g.len() {
        let p = rng.gen_range(0..palette);
        if !conflicts(g, &assignment, i, p) {
            assignment[i] = Some(p);
        }
    }
    ColoringResult::finalize(g, assignment, palette, Strategy::Random)
}

/// The i-th node (by id) proposes PRB `i mod palette`.
pub fn color_sequential(g: &ExpandedGraph, palette: usize) -> ColoringResult {
    assert!(palette >= 1);
    let mut assignment = vec![None; g.len()];
    for i in 0..g.len() {
        let p = i % palette;
        if !conflicts(g, &assignment, i, p) {
            assignment[i] = Some(p);
        }
    }
    ColoringResult::finalize(g, assignment, palette, Strategy::SeqColor)
}

/// First-fit in ascending id order.
pub fn color_greedy(g: &ExpandedGraph, palette: usize) -> ColoringResult {
    assert!(palette >= 1);
    let mut assignment = vec![None; g.len()];
    let mut scratch = Vec::with_capacity(palette);
    for i in 0..g.len() {
        assignment[i] = smallest_free(g, &assignment, i, palette, &mut scratch);
    }
    ColoringResult::finalize(g, assignment, palette, Strategy::Greedy)
}

/// Saturation-first coloring. Ties: higher degree among still-open nodes,
/// then lower id. Nodes with no free PRB are closed unassigned.
pub fn color_dsatur(g: &ExpandedGraph, palette: usize) -> ColoringResult {
    assert!(palette >= 1);
    let n = g.len();
    let mut assignment = vec![None; n];
    let mut open = vec![true; n];
    // saturation sets as bitmaps over the palette
    let mut seen = vec![false; n * palette];
    let mut saturation = vec![0usize; n];
    let mut open_degree: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let mut scratch = Vec::with_capacity(palette);

    for _ in 0..n {
        let Some(v) = (0..n)
            .filter(|&i| open[i])
            .max_by(|&a, &b| {
                saturation[a]
                    .cmp(&saturation[b])
                    .then(open_degree[a].cmp(&open_degree[b]))
                    .then(b.cmp(&a))
            })
        else {
            break;
        };
        open[v] = false;
        for &j in g.neighbors(v) {
            open_degree[j] -= 1;
        }
        let Some(p) = smallest_free(g, &assignment, v, palette, &mut scratch) else {
            continue;
        };
        assignment[v] = Some(p);
        for &j in g.neighbors(v) {
            if !seen[j * palette + p] {
                seen[j * palette + p] = true;
                saturation[j] += 1;
            }
        }
    }
    ColoringResult::finalize(g, assignment, palette, Strategy::DSatur)
}

/// Welsh-Powell: one pass per color over nodes sorted by descending degree
/// (ties by id), giving the color to every node independent of its holders.
pub fn color_welsh_powell(g: &ExpandedGraph, palette: usize) -> ColoringResult {
    assert!(palette >= 1);
    let n = g.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));
    let mut assignment = vec![None; n];
    let mut remaining = n;
    for c in 0..palette {
        if remaining == 0 {
            break;
        }
        for &v in &order {
            if assignment[v].is_none() && !conflicts(g, &assignment, v, c) {
                assignment[v] = Some(c);
                remaining -= 1;
            }
        }
    }
    ColoringResult::finalize(g, assignment, palette, Strategy::WelshPowell)
}

/// Dispatches on the strategy; `rng` is only drawn from by [`Strategy::Random`].
pub fn color<R: Rng + ?Sized>(strategy: Strategy, g: &ExpandedGraph, palette: usize, rng: &mut R) -> ColoringResult {
    match strategy {
        Strategy::Random => color_random(g, palette, rng),
        Strategy::SeqColor => color_sequential(g, palette),
        Strategy::Greedy => color_greedy(g, palette),
        Strategy::DSatur => color_dsatur(g, palette),
        Strategy::WelshPowell => color_welsh_powell(g, palette),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph(n: u32, edges: &[(u32, u32)]) -> ExpandedGraph {
        let nodes: Vec<u32> = (0..n).collect();
        ExpandedGraph::from_edges(&nodes, edges)
    }

    fn k(n: u32) -> ExpandedGraph {
        let mut e = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                e.push((a, b));
            }
        }
        graph(n, &e)
    }

    #[test]
    fn random_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = color_random(&graph(6, &[]), 3, &mut rng);
        assert_eq!(r.assigned_count(), 6);
        let r = color_random(&graph(2, &[(0, 1)]), 1, &mut rng);
        assert_eq!(r.assignment, vec![Some(0), None]);

        let tri = k(3);
        let total: usize = (0..1000u64)
            .map(|s| color_random(&tri, 3, &mut ChaCha8Rng::seed_from_u64(s)).assigned_count())
            .sum();
        let mean = total as f64 / 1000.0;
        // expected 1 + 2/3 + 4/9 ≈ 2.11 under uniform draws
        assert!((2.0..3.0).contains(&mean), "mean {mean}");
    }

    #[test]
    fn sequential_examples() {
        assert_eq!(color_sequential(&graph(3, &[]), 2).assignment, vec![Some(0), Some(1), Some(0)]);
        assert_eq!(color_sequential(&graph(2, &[(0, 1)]), 1).assignment, vec![Some(0), None]);
        let r = color_sequential(&k(4), 4);
        assert_eq!(r.assignment, vec![Some(0), Some(1), Some(2), Some(3)]);
    }

    #[test]
    fn greedy_examples() {
        let r = color_greedy(&k(3), 2);
        assert_eq!(r.assignment, vec![Some(0), Some(1), None]);
        let path = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(color_greedy(&path, 2).assignment, vec![Some(0), Some(1), Some(0), Some(1)]);
        assert!(color_greedy(&graph(5, &[]), 3).assignment.iter().all(|a| *a == Some(0)));
    }

    #[test]
    fn dsatur_examples() {
        let r = color_dsatur(&k(4), 4);
        assert_eq!(r.colors_used, 4);
        assert_eq!(r.unassigned_count(), 0);

        // star: center 3, leaves 0..3
        let star = graph(4, &[(0, 3), (1, 3), (2, 3)]);
        let r = color_dsatur(&star, 2);
        assert_eq!(r.assignment, vec![Some(1), Some(1), Some(1), Some(0)]);
        assert_eq!(r.colors_used, 2);

        assert!(color_dsatur(&graph(4, &[]), 2).assignment.iter().all(|a| *a == Some(0)));
        let r = color_dsatur(&k(3), 2);
        assert_eq!(r.assigned_count(), 2);
    }

    #[test]
    fn welsh_powell_examples() {
        let path = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let r = color_welsh_powell(&path, 3);
        assert_eq!(r.assignment, vec![Some(1), Some(0), Some(1), Some(0)]);
        assert_eq!(r.colors_used, 2);
        assert_eq!(color_welsh_powell(&k(3), 2).assigned_count(), 2);
        assert!(color_welsh_powell(&graph(5, &[]), 1).assignment.iter().all(|a| *a == Some(0)));
    }

    #[test]
    fn validation_reports_corruption() {
        let path = graph(3, &[(0, 1), (1, 2)]);
        let mut r = color_greedy(&path, 2);
        assert!(validate_coloring(&path, &r).is_empty());
        r.assignment[1] = Some(0);
        assert_eq!(
            validate_coloring(&path, &r),
            vec![
                Violation::SharedPrb { u: 0, v: 1, prb: 0 },
                Violation::SharedPrb { u: 1, v: 2, prb: 0 }
            ]
        );
        let mut r = color_greedy(&path, 2);
        r.assignment[0] = Some(2);
        assert_eq!(validate_coloring(&path, &r), vec![Violation::OutOfPalette { ue: 0, prb: 2 }]);
    }

    #[test]
    fn seed_free_strategies_are_stable() {
        let g = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]);
        for s in [Strategy::SeqColor, Strategy::Greedy, Strategy::DSatur, Strategy::WelshPowell] {
            let mut r1 = ChaCha8Rng::seed_from_u64(1);
            let mut r2 = ChaCha8Rng::seed_from_u64(2);
            assert_eq!(color(s, &g, 3, &mut r1), color(s, &g, 3, &mut r2));
        }
        let a = color(Strategy::Random, &g, 3, &mut ChaCha8Rng::seed_from_u64(5));
        let b = color(Strategy::Random, &g, 3, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn strategy_names_roundtrip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.as_str()));
        }
    }
}
