//! Per-zone dominance graphs and the path inequalities derived from them.
//!
//! For zone `i` the graph has one vertex per locker and an edge `(j, k)`
//! whenever `j` dominates `k`. Edges always run from a strictly larger to a
//! strictly smaller attraction, so the graph is acyclic, and because the
//! threshold relation is transitive every path is a chain in which each
//! ordered pair is itself an edge. At most one locker of such a chain can be
//! offered to the zone.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominanceGraph {
    zone: usize,
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacent: Vec<bool>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

/// A dominance chain for one zone; its lockers satisfy `sum y_ij <= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathInequality {
    pub zone: usize,
    pub vertices: Vec<usize>,
}

impl PathInequality {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Number of pairwise dominance relations the chain encodes.
    pub fn implied_pair_count(&self) -> usize {
        implied_pair_count(self.vertices.len())
    }
}

/// `t (t - 1) / 2`.
pub fn implied_pair_count(t: usize) -> usize {
    t * t.saturating_sub(1) / 2
}

impl DominanceGraph {
    pub fn build(inst: &Instance, zone: usize) -> Self {
        let n = inst.n();
        let mut edges = Vec::new();
        for j in 0..n {
            for k in 0..n {
                if inst.dominates(zone, j, k) {
                    edges.push((j, k));
                }
            }
        }
        Self::with_edges(zone, n, edges)
    }

    /// Graph over `n` vertices with arbitrary edges; used for testing the
    /// graph routines on DAGs that do not come from an instance.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= n || v >= n) {
            return Err(Error::Contract(format!("edge ({u}, {v}) out of range for {n} vertices")));
        }
        let mut edges = edges.to_vec();
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::with_edges(0, n, edges))
    }

    fn with_edges(zone: usize, n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adjacent = vec![false; n * n];
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacent[u * n + v] = true;
            succ[u].push(v);
            pred[v].push(u);
        }
        for p in &mut pred {
            p.sort_unstable();
        }
        Self {
            zone,
            n,
            edges,
            adjacent,
            succ,
            pred,
        }
    }

    pub fn zone(&self) -> usize {
        self.zone
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacent[u * self.n + v]
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.pred[v]
    }

    /// Kahn's algorithm; among ready vertices the lowest id goes first.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut indegree: Vec<usize> = self.pred.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> =
            (0..self.n).filter(|&v| indegree[v] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for &w in &self.succ[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.push(Reverse(w));
                }
            }
        }
        if order.len() != self.n {
            return Err(Error::Internal(format!(
                "dominance graph of zone {} has a cycle",
                self.zone
            )));
        }
        Ok(order)
    }

    /// Longest path by vertex count, via dynamic programming over the
    /// topological order. Ties go to the lowest-id predecessor and, for the
    /// end vertex, the lowest id.
    pub fn longest_path(&self) -> Result<PathInequality> {
        let active = vec![true; self.n];
        self.longest_path_within(&self.topological_order()?, &active)
    }

    /// The longest path followed by up to `extra` further paths, each the
    /// longest among vertices not used so far. Paths with a single vertex
    /// are not returned as extras.
    pub fn longest_paths(&self, extra: usize) -> Result<Vec<PathInequality>> {
        let order = self.topological_order()?;
        let mut active = vec![true; self.n];
        let mut out = Vec::new();
        for round in 0..=extra {
            let path = self.longest_path_within(&order, &active)?;
            if round > 0 && path.len() < 2 {
                break;
            }
            for &v in &path.vertices {
                active[v] = false;
            }
            out.push(path);
        }
        Ok(out)
    }

    fn longest_path_within(&self, order: &[usize], active: &[bool]) -> Result<PathInequality> {
        let mut length = vec![0usize; self.n];
        let mut back: Vec<Option<usize>> = vec![None; self.n];
        for &v in order.iter().filter(|&&v| active[v]) {
            let mut best: Option<usize> = None;
            for &u in self.pred[v].iter().filter(|&&u| active[u]) {
                // predecessors are sorted, so strict '>' keeps the lowest id on ties
                if best.is_none_or(|b| length[u] > length[b]) {
                    best = Some(u);
                }
            }
            length[v] = 1 + best.map_or(0, |b| length[b]);
            back[v] = best;
        }
        let mut end: Option<usize> = None;
        for v in (0..self.n).filter(|&v| active[v]) {
            if end.is_none_or(|e| length[v] > length[e]) {
                end = Some(v);
            }
        }
        let mut vertices = Vec::new();
        let mut cur = end;
        while let Some(v) = cur {
            vertices.push(v);
            cur = back[v];
        }
        vertices.reverse();
        Ok(PathInequality {
            zone: self.zone,
            vertices,
        })
    }

    /// `true` when every consecutive pair is an edge.
    pub fn is_path(&self, vertices: &[usize]) -> bool {
        vertices.windows(2).all(|w| self.has_edge(w[0], w[1]))
    }

    /// `true` when every ordered pair along the sequence is an edge.
    pub fn is_chain(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(a, &u)| vertices[a + 1..].iter().all(|&v| self.has_edge(u, v)))
    }

    /// `true` when no edge extends the path at its first or last vertex.
    pub fn is_maximal_path(&self, vertices: &[usize]) -> bool {
        match (vertices.first(), vertices.last()) {
            (Some(&first), Some(&last)) => self.pred[first].is_empty() && self.succ[last].is_empty(),
            _ => self.n == 0,
        }
    }

    /// Graphviz rendering with 1-based locker labels.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph zone_{} {{", self.zone + 1);
        let _ = writeln!(s, "  rankdir=LR;");
        for v in 0..self.n {
            let _ = writeln!(s, "  j{};", v + 1);
        }
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "  j{} -> j{};", u + 1, v + 1);
        }
        s.push_str("}\n");
        s
    }
}
