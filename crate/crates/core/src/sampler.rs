//! Per-query subgraph construction: seeds, breadth-first expansion over the
//! merged history, and node, edge and item feature vectors.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{DynamicNetwork, PurchaseIndex, Query};

/// Width of the target / seed / other role indicator.
pub const ROLE_WIDTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Target,
    Seed,
    Other,
}

impl Role {
    fn slot(self) -> usize {
        match self {
            Role::Target => 0,
            Role::Seed => 1,
            Role::Other => 2,
        }
    }
}

/// Maps a price index to one of `thresholds.len() + 1` bins: the bin is the
/// number of thresholds at or below the price.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceBins {
    thresholds: Vec<u32>,
}

impl PriceBins {
    pub fn new(thresholds: Vec<u32>) -> Result<Self> {
        if thresholds.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("price bin thresholds must be non-decreasing".into()));
        }
        Ok(PriceBins { thresholds })
    }

    /// `bins` equal-width bins covering the integer range `[min, max]`.
    pub fn equal_width(min: u32, max: u32, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Config("price bin count must be at least 1".into()));
        }
        let (min, max) = (u64::from(min), u64::from(max.max(min)));
        let span = max - min + 1;
        let thresholds = (1..bins as u64).map(|k| (min + (k * span).div_ceil(bins as u64)) as u32).collect();
        Self::new(thresholds)
    }

    pub fn n_bins(&self) -> usize {
        self.thresholds.len() + 1
    }

    pub fn bin(&self, price_index: u32) -> usize {
        self.thresholds.partition_point(|&t| t <= price_index)
    }

    pub fn thresholds(&self) -> &[u32] {
        &self.thresholds
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    /// Number of price bins `B`.
    pub bins: usize,
    /// Explicit bin thresholds; when absent, equal-width bins over the catalog range.
    pub thresholds: Option<Vec<u32>>,
    /// Purchase-history window in seconds ending at the query step; absent means all history.
    pub lookback: Option<i64>,
    /// Breadth-first search depth around the seed set.
    pub depth: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { bins: 10, thresholds: None, lookback: None, depth: 2 }
    }
}

impl FeatureConfig {
    pub fn price_bins(&self, item_price: &[u32]) -> Result<PriceBins> {
        match &self.thresholds {
            Some(t) => {
                if t.len() + 1 != self.bins {
                    return Err(Error::Config(format!(
                        "{} thresholds given for {} bins; need bins - 1",
                        t.len(),
                        self.bins
                    )));
                }
                PriceBins::new(t.clone())
            }
            None => {
                let min = item_price.iter().copied().min().unwrap_or(0);
                let max = item_price.iter().copied().max().unwrap_or(0);
                PriceBins::equal_width(min, max, self.bins)
            }
        }
    }
}

/// Undirected adjacency with sorted, de-duplicated neighbor lists.
#[derive(Debug, Clone)]
pub struct UnionGraph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl UnionGraph {
    /// Merges steps `0..upto` of `network`, ignoring direction.
    pub fn prefix(network: &DynamicNetwork, upto: usize) -> Self {
        let n = network.n_users();
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for t in 0..upto {
            for e in network.step(t).edges() {
                pairs.push((e.src, e.dst));
                pairs.push((e.dst, e.src));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0; n + 1];
        for &(a, _) in &pairs {
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        UnionGraph { offsets, neighbors: pairs.into_iter().map(|(_, b)| b).collect() }
    }

    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.neighbors[self.offsets[u as usize]..self.offsets[u as usize + 1]]
    }

    pub fn degree(&self, u: u32) -> usize {
        self.offsets[u as usize + 1] - self.offsets[u as usize]
    }
}

/// One directed share edge inside a subgraph, with local endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalEdge {
    pub step: usize,
    pub src: usize,
    pub dst: usize,
}

/// Everything the model needs for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySubgraph {
    pub query: Query,
    /// Local index to global user index. The target is local 0.
    pub nodes: Vec<u32>,
    /// Hop distance from the seed set in the merged history graph.
    pub level: Vec<usize>,
    /// Target first, then senders of the queried item in ascending id order.
    pub seeds: Vec<usize>,
    /// Steps `0..n_steps` precede the query step.
    pub n_steps: usize,
    /// Sorted by `(step, src, dst)`.
    pub edges: Vec<LocalEdge>,
    /// Row-major `edges.len() x edge_dim`.
    pub edge_features: Vec<f32>,
    /// Undirected pairs `(a, b)` with `a < b` from the merged history.
    pub union_edges: Vec<(usize, usize)>,
    /// Row-major `nodes.len() x node_dim`: purchase histogram then role.
    pub node_features: Vec<f32>,
    pub item_features: Vec<f32>,
    pub node_dim: usize,
    pub edge_dim: usize,
}

impl QuerySubgraph {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_feature(&self, local: usize) -> &[f32] {
        &self.node_features[local * self.node_dim..(local + 1) * self.node_dim]
    }

    pub fn edge_feature(&self, e: usize) -> &[f32] {
        &self.edge_features[e * self.edge_dim..(e + 1) * self.edge_dim]
    }

    /// Senders into `u` at step `t`.
    pub fn in_neighbors(&self, u: usize, t: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.step == t && e.dst == u).map(|e| e.src).collect()
    }

    /// Receivers from `u` at step `t`.
    pub fn out_neighbors(&self, u: usize, t: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.step == t && e.src == u).map(|e| e.dst).collect()
    }

    /// Plain-text dump of nodes, seeds and per-step edges with features.
    pub fn dump(&self, network: &DynamicNetwork) -> String {
        let q = &self.query;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "query {} {} {} {} {}",
            network.users()[q.user as usize],
            network.items()[q.item as usize],
            q.step,
            u8::from(q.label),
            u8::from(q.cold)
        );
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        for (i, &g) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {} {}", network.users()[g as usize], self.level[i], join(self.node_feature(i)));
        }
        let _ = writeln!(out, "seeds {}", self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "));
        let _ = writeln!(out, "item {}", join(&self.item_features));
        for t in 0..self.n_steps {
            let idx: Vec<usize> = (0..self.edges.len()).filter(|&e| self.edges[e].step == t).collect();
            let _ = writeln!(out, "step {t} {}", idx.len());
            for e in idx {
                let _ = writeln!(out, "{} {} {}", self.edges[e].src, self.edges[e].dst, join(self.edge_feature(e)));
            }
        }
        out
    }
}

fn join(v: &[f32]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Samples query subgraphs from an immutable network.
pub struct Sampler<'a> {
    network: &'a DynamicNetwork,
    purchases: &'a PurchaseIndex,
    item_price: &'a [u32],
    bins: PriceBins,
    lookback: Option<i64>,
    depth: usize,
    unions: Vec<UnionGraph>,
}

impl<'a> Sampler<'a> {
    pub fn new(
        network: &'a DynamicNetwork,
        purchases: &'a PurchaseIndex,
        item_price: &'a [u32],
        cfg: &FeatureConfig,
    ) -> Result<Self> {
        if item_price.len() != network.items().len() {
            return Err(Error::Invalid(format!(
                "catalog has {} items but the network indexes {}",
                item_price.len(),
                network.items().len()
            )));
        }
        let bins = cfg.price_bins(item_price)?;
        let unions = (0..network.n_steps()).map(|s| UnionGraph::prefix(network, s)).collect();
        Ok(Sampler { network, purchases, item_price, bins, lookback: cfg.lookback, depth: cfg.depth, unions })
    }

    pub fn bins(&self) -> &PriceBins {
        &self.bins
    }

    pub fn node_dim(&self) -> usize {
        self.bins.n_bins() + ROLE_WIDTH
    }

    pub fn edge_dim(&self) -> usize {
        self.bins.n_bins()
    }

    /// Merged undirected graph of the steps before `step`.
    pub fn history(&self, step: usize) -> &UnionGraph {
        &self.unions[step]
    }

    pub fn item_bin(&self, item: u32) -> usize {
        self.bins.bin(self.item_price[item as usize])
    }

    /// Purchase histogram over the lookback window ending at the query
    /// step, followed by the one-hot role.
    pub fn node_features(&self, user: u32, query: &Query, role: Role) -> Vec<f32> {
        let mut f = vec![0.0; self.node_dim()];
        let (end, _) = self.network.grid().interval(query.step);
        let begin = self.lookback.map_or(i64::MIN, |l| end.saturating_sub(l));
        for &(_, item) in self.purchases.in_window(user, begin, end) {
            f[self.item_bin(item)] += 1.0;
        }
        f[self.bins.n_bins() + role.slot()] = 1.0;
        f
    }

    /// Sum of price-bin one-hots over the items shared `u -> v` in `step`,
    /// or `None` when there is no such edge.
    pub fn edge_features(&self, u: u32, v: u32, step: usize) -> Option<Vec<f32>> {
        let edge = self.network.step(step).edge(u, v)?;
        let mut f = vec![0.0; self.edge_dim()];
        for &(item, _) in &edge.events {
            f[self.item_bin(item)] += 1.0;
        }
        Some(f)
    }

    pub fn sample(&self, query: &Query) -> Result<QuerySubgraph> {
        self.sample_with_depth(query, self.depth)
    }

    pub fn sample_with_depth(&self, query: &Query, depth: usize) -> Result<QuerySubgraph> {
        if query.step == 0 || query.step >= self.network.n_steps() {
            return Err(Error::Invalid(format!("query step {} out of range", query.step)));
        }
        let seeds_global = seed_set(query, self.network);
        if seeds_global.len() < 2 {
            return Err(Error::Invalid(format!(
                "user {} did not receive item {} in step {}",
                self.network.users()[query.user as usize],
                self.network.items()[query.item as usize],
                query.step - 1
            )));
        }
        let history = &self.unions[query.step];
        let (nodes, level) = bfs_levels(history, &seeds_global, depth);
        let local: HashMap<u32, usize> = nodes.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let seeds: Vec<usize> = (0..seeds_global.len()).collect();

        let mut union_edges = Vec::new();
        for (a, &g) in nodes.iter().enumerate() {
            for nb in history.neighbors(g) {
                if let Some(&b) = local.get(nb) {
                    if a < b {
                        union_edges.push((a, b));
                    }
                }
            }
        }

        let edge_dim = self.edge_dim();
        let mut edges = Vec::new();
        let mut edge_features = Vec::new();
        for t in 0..query.step {
            let step = self.network.step(t);
            for (a, &g) in nodes.iter().enumerate() {
                let mut out: Vec<(usize, &crate::events::StepEdge)> =
                    step.out_edges(g).iter().filter_map(|e| local.get(&e.dst).map(|&b| (b, e))).collect();
                out.sort_by_key(|&(b, _)| b);
                for (b, e) in out {
                    edges.push(LocalEdge { step: t, src: a, dst: b });
                    let mut f = vec![0.0; edge_dim];
                    for &(item, _) in &e.events {
                        f[self.item_bin(item)] += 1.0;
                    }
                    edge_features.extend(f);
                }
            }
        }

        let mut node_features = Vec::with_capacity(nodes.len() * self.node_dim());
        for (i, &g) in nodes.iter().enumerate() {
            let role = if i == 0 {
                Role::Target
            } else if i < seeds.len() {
                Role::Seed
            } else {
                Role::Other
            };
            node_features.extend(self.node_features(g, query, role));
        }
        let mut item_features = vec![0.0; self.bins.n_bins()];
        item_features[self.item_bin(query.item)] = 1.0;

        Ok(QuerySubgraph {
            query: *query,
            nodes,
            level,
            seeds,
            n_steps: query.step,
            edges,
            edge_features,
            union_edges,
            node_features,
            item_features,
            node_dim: self.node_dim(),
            edge_dim,
        })
    }
}

/// The query's user followed by every sender of the queried item to them in
/// the previous step, ascending.
pub fn seed_set(query: &Query, network: &DynamicNetwork) -> Vec<u32> {
    let mut out = vec![query.user];
    if query.step == 0 || query.step > network.n_steps() {
        return out;
    }
    let mut senders: Vec<u32> = network
        .step(query.step - 1)
        .in_edges(query.user)
        .filter(|e| e.events.iter().any(|&(p, _)| p == query.item))
        .map(|e| e.src)
        .collect();
    senders.sort_unstable();
    out.extend(senders);
    out
}

/// Multi-source breadth-first search. Seeds keep their given order; each
/// later level is sorted by user index. Returns nodes and their levels.
pub fn bfs_levels(graph: &UnionGraph, seeds: &[u32], depth: usize) -> (Vec<u32>, Vec<usize>) {
    let mut seen: HashSet<u32> = HashSet::new();
    let mut nodes = Vec::new();
    let mut level = Vec::new();
    for &s in seeds {
        if seen.insert(s) {
            nodes.push(s);
            level.push(0);
        }
    }
    let mut frontier = nodes.clone();
    for d in 1..=depth {
        let mut next: Vec<u32> = Vec::new();
        for &u in &frontier {
            for &v in graph.neighbors(u) {
                if seen.insert(v) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        nodes.extend(&next);
        level.extend(std::iter::repeat_n(d, next.len()));
        frontier = next;
    }
    (nodes, level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_width_bins() {
        let b = PriceBins::equal_width(0, 9, 10).unwrap();
        assert_eq!((0..10).map(|p| b.bin(p)).collect::<Vec<_>>(), (0..10).collect::<Vec<_>>());
        let b = PriceBins::equal_width(1, 20, 4).unwrap();
        assert_eq!(b.thresholds(), &[6, 11, 16]);
        assert_eq!(b.bin(1), 0);
        assert_eq!(b.bin(20), 3);
        assert_eq!(PriceBins::equal_width(5, 5, 3).unwrap().bin(5), 0);
        assert!(PriceBins::equal_width(0, 5, 0).is_err());
    }

    #[test]
    fn explicit_thresholds_need_matching_count() {
        let cfg = FeatureConfig { bins: 3, thresholds: Some(vec![5]), ..Default::default() };
        assert!(cfg.price_bins(&[1, 2]).is_err());
        let cfg = FeatureConfig { bins: 3, thresholds: Some(vec![5, 10]), ..Default::default() };
        assert_eq!(cfg.price_bins(&[]).unwrap().bin(10), 2);
    }
}
