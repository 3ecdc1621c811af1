use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralSystem, COUPLING_ZERO};

/// Relative to the largest gap among the scanned edges.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub j: usize,
    pub k: usize,
    /// `|λ_j - λ_k|`.
    pub gap: f64,
    /// `|b_jk|`.
    pub coupling: f64,
    /// Some other coupled pair sharing exactly one level has the same gap.
    pub degenerate: bool,
}

impl Edge {
    fn shares_one_level(&self, other: &Edge) -> bool {
        let shared = [self.j, self.k]
            .iter()
            .filter(|l| **l == other.j || **l == other.k)
            .count();
        shared == 1
    }
}

/// Two coupled pairs with equal gaps, whatever their overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCoincidence {
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub gap: f64,
}

/// Coupled pairs `j < k ≤ order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionGraph {
    pub order: usize,
    /// Relative tolerance as given.
    pub tol: f64,
    /// Absolute gap tolerance actually applied.
    pub gap_tol: f64,
    pub edges: Vec<Edge>,
}

impl TransitionGraph {
    pub fn edge(&self, j: usize, k: usize) -> Option<&Edge> {
        let (j, k) = (j.min(k), j.max(k));
        self.edges.iter().find(|e| e.j == j && e.k == k)
    }

    pub fn nondegenerate_edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(|e| !e.degenerate)
    }

    /// Every pair of edges whose gaps agree within `gap_tol`.
    pub fn coincidences(&self) -> Vec<GapCoincidence> {
        let mut sorted: Vec<&Edge> = self.edges.iter().collect();
        sorted.sort_by(|a, b| a.gap.total_cmp(&b.gap).then((a.j, a.k).cmp(&(b.j, b.k))));
        let mut out = Vec::new();
        for (i, a) in sorted.iter().enumerate() {
            for b in &sorted[i + 1..] {
                if b.gap - a.gap > self.gap_tol {
                    break;
                }
                let (first, second) = if (a.j, a.k) < (b.j, b.k) {
                    ((a.j, a.k), (b.j, b.k))
                } else {
                    ((b.j, b.k), (a.j, a.k))
                };
                out.push(GapCoincidence {
                    first,
                    second,
                    gap: a.gap,
                });
            }
        }
        out.sort_by(|x, y| (x.first, x.second).cmp(&(y.first, y.second)));
        out
    }

    /// Levels reachable from `start` along edges accepted by `keep`.
    fn component(&self, start: usize, keep: impl Fn(&Edge) -> bool) -> Vec<usize> {
        let mut adjacency = vec![Vec::new(); self.order + 1];
        for e in self.edges.iter().filter(|e| keep(e)) {
            adjacency[e.j].push(e.k);
            adjacency[e.k].push(e.j);
        }
        let mut seen = vec![false; self.order + 1];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        (1..=self.order).filter(|&v| seen[v]).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.component(1, |_| true).len() == self.order
    }
}

pub fn transition_graph(sys: &SpectralSystem, order: usize, tol: f64) -> Result<TransitionGraph> {
    if order < 2 {
        return Err(Error::InvalidParameter(format!(
            "transition graph needs at least 2 levels, got {order}"
        )));
    }
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be finite and non-negative, got {tol}"
        )));
    }
    sys.check_level(order)?;
    let mut edges = Vec::new();
    for j in 1..=order {
        for k in (j + 1)..=order {
            let coupling = sys.coupling(j, k).norm();
            if coupling > COUPLING_ZERO {
                edges.push(Edge {
                    j,
                    k,
                    gap: sys.transition_frequency(j, k),
                    coupling,
                    degenerate: false,
                });
            }
        }
    }
    let max_gap = edges.iter().map(|e| e.gap).fold(0.0, f64::max);
    let gap_tol = tol * max_gap;

    let mut by_gap: Vec<usize> = (0..edges.len()).collect();
    by_gap.sort_by(|&a, &b| edges[a].gap.total_cmp(&edges[b].gap));
    let mut flags = vec![false; edges.len()];
    for (pos, &a) in by_gap.iter().enumerate() {
        for &b in &by_gap[pos + 1..] {
            if edges[b].gap - edges[a].gap > gap_tol {
                break;
            }
            if edges[a].shares_one_level(&edges[b]) {
                flags[a] = true;
                flags[b] = true;
            }
        }
    }
    for (e, f) in edges.iter_mut().zip(flags) {
        e.degenerate = f;
    }
    Ok(TransitionGraph {
        order,
        tol,
        gap_tol,
        edges,
    })
}

/// Non-degenerate part of the transition graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSearch {
    pub order: usize,
    /// All non-degenerate edges.
    pub edges: Vec<(usize, usize)>,
    /// Spanning forest of `edges`, preferring pairs of nearby levels.
    pub tree: Vec<(usize, usize)>,
    /// Levels reachable from level 1 through `edges`.
    pub component: Vec<usize>,
    /// `component` is all of `1..=order`.
    pub spanning: bool,
}

pub fn find_nondegenerate_chain(
    sys: &SpectralSystem,
    order: usize,
    tol: f64,
) -> Result<ChainSearch> {
    let graph = transition_graph(sys, order, tol)?;
    let component = graph.component(1, |e| !e.degenerate);
    let mut candidates: Vec<(usize, usize)> = graph.nondegenerate_edges().map(|e| (e.j, e.k)).collect();
    let edges = candidates.clone();
    candidates.sort_by_key(|&(j, k)| (k - j, j));

    let mut parent: Vec<usize> = (0..=order).collect();
    fn root(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut tree = Vec::new();
    for (j, k) in candidates {
        let (a, b) = (root(&mut parent, j), root(&mut parent, k));
        if a != b {
            parent[a] = b;
            tree.push((j, k));
        }
    }
    tree.sort();
    Ok(ChainSearch {
        order,
        spanning: component.len() == order,
        edges,
        tree,
        component,
    })
}
