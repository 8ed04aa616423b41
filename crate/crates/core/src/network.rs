//! The weighted trade network grown by the exchange dynamics.
//!
//! A link appears the first time a pair trades and then only accumulates
//! weight (the total amount invested by the pair). Connected components are
//! tracked incrementally with a union-find forest so the giant-component
//! fraction is available after every link.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::TradeEvent;

/// Disjoint-set forest with union by size and path halving.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    largest: usize,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            largest: usize::from(n > 0),
            components: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Returns true if `a` and `b` were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        self.largest = self.largest.max(self.size[ra] as usize);
        self.components -= 1;
        true
    }

    pub fn largest(&self) -> usize {
        self.largest
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn component_sizes(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut out = Vec::with_capacity(self.components);
        for x in 0..n {
            if self.find(x) == x {
                out.push(self.size[x] as usize);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkOutcome {
    NewLink,
    ExistingLink,
}

/// Trade counts, measured from the start of growth, at which the network
/// first became connected (`t_single_component`) and complete (`t_clique`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthTimes {
    pub t_single_component: Option<u64>,
    pub t_clique: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TradeGraph {
    n: usize,
    neighbors: Vec<Vec<u32>>,
    // parallel to `neighbors`
    weights: Vec<Vec<f64>>,
    n_links: usize,
    components: UnionFind,
    trades: u64,
    times: GrowthTimes,
    // largest component size after the k-th new link, k = 0..=n_links
    giant_trace: Vec<u32>,
}

impl TradeGraph {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("a trade network needs at least 2 nodes, got {n}")));
        }
        Ok(Self {
            n,
            neighbors: vec![Vec::new(); n],
            weights: vec![Vec::new(); n],
            n_links: 0,
            components: UnionFind::new(n),
            trades: 0,
            times: GrowthTimes::default(),
            giant_trace: vec![1],
        })
    }

    /// Removes every link, keeping the node count.
    pub fn clear(&mut self) {
        *self = Self::new(self.n).expect("node count already validated");
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_links(&self) -> usize {
        self.n_links
    }

    pub fn max_links(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    /// Trades recorded since the graph was created or cleared.
    pub fn trades(&self) -> u64 {
        self.trades
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let pos = self.neighbors[i].binary_search(&(j as u32)).ok()?;
        Some(self.weights[i][pos])
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i]
    }

    pub fn record_trade(&mut self, event: &TradeEvent) -> Result<LinkOutcome> {
        self.record(event.i, event.j, event.invested)
    }

    pub fn record(&mut self, i: usize, j: usize, amount: f64) -> Result<LinkOutcome> {
        if i >= self.n || j >= self.n {
            return Err(Error::invalid(format!("link ({i}, {j}) out of range for {} nodes", self.n)));
        }
        if i == j {
            return Err(Error::invalid(format!("self-link on node {i}")));
        }
        if !(amount >= 0.0 && amount.is_finite()) {
            return Err(Error::invalid(format!("trade volume must be finite and nonnegative, got {amount}")));
        }
        self.trades += 1;
        let outcome = match self.neighbors[i].binary_search(&(j as u32)) {
            Ok(pos_i) => {
                self.weights[i][pos_i] += amount;
                let pos_j = self.neighbors[j]
                    .binary_search(&(i as u32))
                    .expect("adjacency is symmetric");
                self.weights[j][pos_j] += amount;
                LinkOutcome::ExistingLink
            }
            Err(pos_i) => {
                self.neighbors[i].insert(pos_i, j as u32);
                self.weights[i].insert(pos_i, amount);
                let pos_j = self.neighbors[j]
                    .binary_search(&(i as u32))
                    .expect_err("adjacency is symmetric");
                self.neighbors[j].insert(pos_j, i as u32);
                self.weights[j].insert(pos_j, amount);
                self.n_links += 1;
                self.components.union(i, j);
                self.giant_trace.push(self.components.largest() as u32);
                LinkOutcome::NewLink
            }
        };
        if self.times.t_single_component.is_none() && self.components.largest() == self.n {
            self.times.t_single_component = Some(self.trades);
        }
        if self.times.t_clique.is_none() && self.n_links == self.max_links() {
            self.times.t_clique = Some(self.trades);
        }
        Ok(outcome)
    }

    pub fn link_density(&self) -> f64 {
        self.n_links as f64 / self.max_links() as f64
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.n_links as f64 / self.n as f64
    }

    pub fn largest_component(&self) -> usize {
        self.components.largest()
    }

    pub fn giant_component_fraction(&self) -> f64 {
        self.components.largest() as f64 / self.n as f64
    }

    /// Largest component size after each new link (entry `k` is the size
    /// once the graph had `k` links).
    pub fn giant_trace(&self) -> &[u32] {
        &self.giant_trace
    }

    pub fn is_connected(&self) -> bool {
        self.components.largest() == self.n
    }

    pub fn is_clique(&self) -> bool {
        self.n_links == self.max_links()
    }

    pub fn growth_times(&self) -> GrowthTimes {
        self.times
    }

    pub fn component_sizes(&self) -> Vec<usize> {
        self.components.clone().component_sizes()
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn strength_sequence(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.iter().sum()).collect()
    }

    pub fn link_weights(&self) -> Vec<f64> {
        self.links().map(|(_, _, w)| w).collect()
    }

    /// Each link once, as `(i, j, w)` with `i < j`, ordered by `i` then `j`.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.neighbors.iter().enumerate().flat_map(move |(i, nb)| {
            nb.iter()
                .zip(&self.weights[i])
                .filter(move |(&j, _)| (j as usize) > i)
                .map(move |(&j, &w)| (i, j as usize, w))
        })
    }

    /// Writes one `i j w` line per link with 17 significant digits.
    pub fn write_edges<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, j, w) in self.links() {
            writeln!(out, "{i} {j} {w:.16e}")?;
        }
        Ok(())
    }

    /// Rebuilds a graph from an edge list, each line contributing one trade.
    pub fn read_edges<R: BufRead>(n: usize, input: R) -> Result<Self> {
        let mut g = Self::new(n)?;
        for (k, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Config { line: k + 1, message: format!("malformed edge line {line:?}") };
            let mut parts = line.split_whitespace();
            let i: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let j: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let w: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if parts.next().is_some() || g.weight(i.min(n - 1), j.min(n - 1)).is_some() {
                return Err(bad());
            }
            g.record(i, j, w)?;
        }
        Ok(g)
    }
}

/// Component sizes by breadth-first traversal of an explicit edge list.
/// Independent of the union-find path; used to check it.
pub fn components_by_traversal(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(i: usize, j: usize, d: f64) -> TradeEvent {
        TradeEvent { i, j, invested: d, epsilon: 0.5 }
    }

    #[test]
    fn fresh_graph() {
        let g = TradeGraph::new(5).unwrap();
        assert_eq!(g.n_links(), 0);
        assert!(g.degree_sequence().iter().all(|&k| k == 0));
        assert_eq!(g.giant_component_fraction(), 0.2);
        assert_eq!(g.link_density(), 0.0);
        assert_eq!(g.mean_degree(), 0.0);
        let g = TradeGraph::new(2).unwrap();
        assert!(!g.is_clique() && !g.is_connected());
        assert!(TradeGraph::new(1).is_err());
    }

    #[test]
    fn repeat_trades_accumulate_weight_only() {
        let mut g = TradeGraph::new(4).unwrap();
        assert_eq!(g.record_trade(&ev(0, 1, 0.5)).unwrap(), LinkOutcome::NewLink);
        assert_eq!((g.degree(0), g.degree(1), g.weight(0, 1)), (1, 1, Some(0.5)));
        assert_eq!(g.record_trade(&ev(1, 0, 0.25)).unwrap(), LinkOutcome::ExistingLink);
        assert_eq!(g.record_trade(&ev(0, 1, 0.25)).unwrap(), LinkOutcome::ExistingLink);
        assert_eq!((g.degree(0), g.degree(1), g.n_links()), (1, 1, 1));
        assert_eq!(g.weight(1, 0), Some(1.0));
        assert!(g.record_trade(&ev(2, 2, 1.0)).is_err());
    }

    #[test]
    fn two_nodes_complete_after_one_trade() {
        let mut g = TradeGraph::new(2).unwrap();
        g.record(1, 0, 0.3).unwrap();
        assert!(g.is_clique() && g.is_connected());
        assert_eq!(
            g.growth_times(),
            GrowthTimes { t_single_component: Some(1), t_clique: Some(1) }
        );
    }

    #[test]
    fn density_and_mean_degree() {
        let mut g = TradeGraph::new(4).unwrap();
        g.record(0, 1, 1.0).unwrap();
        g.record(2, 3, 1.0).unwrap();
        assert_eq!(g.mean_degree(), 1.0);
        g.record(1, 2, 1.0).unwrap();
        assert_eq!(g.link_density(), 0.5);
        for (i, j) in [(0, 2), (0, 3), (1, 3)] {
            g.record(i, j, 1.0).unwrap();
        }
        assert_eq!(g.link_density(), 1.0);
        let mut c = TradeGraph::new(5).unwrap();
        for i in 0..5 {
            for j in i + 1..5 {
                c.record(i, j, 1.0).unwrap();
            }
        }
        assert_eq!(c.mean_degree(), 4.0);
        assert_eq!(c.giant_component_fraction(), 1.0);
    }

    #[test]
    fn giant_fraction_matches_traversal_example() {
        let mut g = TradeGraph::new(6).unwrap();
        let edges = [(0, 1), (1, 2), (3, 4)];
        for &(i, j) in &edges {
            g.record(i, j, 1.0).unwrap();
        }
        let oracle = *components_by_traversal(6, &edges).iter().max().unwrap();
        assert_eq!(oracle, 3);
        assert_eq!(g.giant_component_fraction(), 0.5);
        assert_eq!(g.giant_trace(), &[1, 2, 3, 3]);
    }

    #[test]
    fn strengths() {
        let mut g = TradeGraph::new(4).unwrap();
        g.record(0, 1, 0.5).unwrap();
        assert_eq!(g.strength_sequence(), vec![0.5, 0.5, 0.0, 0.0]);
        g.record(0, 2, 1.0).unwrap();
        g.record(0, 3, 2.5).unwrap();
        g.record(2, 0, -1.0).unwrap_err();
        g.record(2, 0, f64::NAN).unwrap_err();
        let mut h = TradeGraph::new(3).unwrap();
        h.record(0, 1, 1.0).unwrap();
        h.record(0, 2, 2.5).unwrap();
        assert_eq!(h.strength_sequence()[0], 3.5);
    }

    #[test]
    fn edge_list_round_trip() {
        let mut g = TradeGraph::new(5).unwrap();
        g.record(3, 1, 0.1).unwrap();
        g.record(0, 4, 1.0 / 3.0).unwrap();
        g.record(1, 3, 1e-9).unwrap();
        let mut buf = Vec::new();
        g.write_edges(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "0 4 3.3333333333333331e-1");
        let h = TradeGraph::read_edges(5, buf.as_slice()).unwrap();
        assert_eq!(h.links().collect::<Vec<_>>(), g.links().collect::<Vec<_>>());
        assert!(TradeGraph::read_edges(5, "0 1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn union_find_agrees_with_traversal(
            n in 2usize..=64,
            raw in prop::collection::vec((0usize..64, 0usize..64, 0.01f64..2.0), 0..300),
        ) {
            let mut g = TradeGraph::new(n).unwrap();
            let mut edges = Vec::new();
            let mut prev_giant = g.giant_component_fraction();
            let mut prev_density = 0.0;
            for (a, b, w) in raw {
                let (a, b) = (a % n, b % n);
                if a == b { continue; }
                let before = g.weight(a, b);
                let outcome = g.record(a, b, w).unwrap();
                prop_assert_eq!(outcome == LinkOutcome::NewLink, before.is_none());
                if before.is_none() { edges.push((a, b)); }
                prop_assert!(g.weight(a, b).unwrap() > before.unwrap_or(0.0));
                prop_assert!(g.giant_component_fraction() >= prev_giant);
                prop_assert!(g.link_density() >= prev_density);
                prev_giant = g.giant_component_fraction();
                prev_density = g.link_density();
            }
            let mut expect = components_by_traversal(n, &edges);
            let mut got = g.component_sizes();
            expect.sort_unstable();
            got.sort_unstable();
            prop_assert_eq!(got.iter().sum::<usize>(), n);
            prop_assert_eq!(g.largest_component(), *expect.last().unwrap());
            prop_assert_eq!(got, expect);

            let degrees = g.degree_sequence();
            prop_assert_eq!(degrees.iter().sum::<usize>(), 2 * g.n_links());
            let s_total: f64 = g.strength_sequence().iter().sum();
            let w_total: f64 = g.link_weights().iter().sum();
            prop_assert!((s_total - 2.0 * w_total).abs() <= 1e-9 * (1.0 + s_total));
        }
    }
}
