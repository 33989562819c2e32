//! Per-step directed share graphs and their text snapshot.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::grid::TimeGrid;
use super::records::EventLog;
use crate::error::{read_text, write_text, Error, Result};

pub const SNAPSHOT_MAGIC: &str = "SHARECAST-NETWORK";
pub const SNAPSHOT_VERSION: u32 = 1;

/// A directed `src -> dst` edge in one step with every `(item, timestamp)`
/// share it carried, sorted by timestamp then item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepEdge {
    pub src: u32,
    pub dst: u32,
    pub events: Vec<(u32, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepGraph {
    /// Sorted by `(src, dst)`.
    edges: Vec<StepEdge>,
    out_offsets: Vec<usize>,
    /// Edge positions sorted by `(dst, src)`.
    in_order: Vec<usize>,
    in_offsets: Vec<usize>,
}

impl StepGraph {
    fn new(n_users: usize, mut edges: Vec<StepEdge>) -> Self {
        edges.sort_by_key(|e| (e.src, e.dst));
        let mut out_offsets = vec![0; n_users + 1];
        for e in &edges {
            out_offsets[e.src as usize + 1] += 1;
        }
        for i in 0..n_users {
            out_offsets[i + 1] += out_offsets[i];
        }
        let mut in_order: Vec<usize> = (0..edges.len()).collect();
        in_order.sort_by_key(|&i| (edges[i].dst, edges[i].src));
        let mut in_offsets = vec![0; n_users + 1];
        for e in &edges {
            in_offsets[e.dst as usize + 1] += 1;
        }
        for i in 0..n_users {
            in_offsets[i + 1] += in_offsets[i];
        }
        StepGraph { edges, out_offsets, in_order, in_offsets }
    }

    pub fn edges(&self) -> &[StepEdge] {
        &self.edges
    }

    pub fn out_edges(&self, u: u32) -> &[StepEdge] {
        &self.edges[self.out_offsets[u as usize]..self.out_offsets[u as usize + 1]]
    }

    pub fn in_edges(&self, v: u32) -> impl Iterator<Item = &StepEdge> {
        self.in_order[self.in_offsets[v as usize]..self.in_offsets[v as usize + 1]]
            .iter()
            .map(|&i| &self.edges[i])
    }

    pub fn edge(&self, src: u32, dst: u32) -> Option<&StepEdge> {
        let out = self.out_edges(src);
        out.binary_search_by_key(&dst, |e| e.dst).ok().map(|i| &out[i])
    }

    pub fn event_count(&self) -> usize {
        self.edges.iter().map(|e| e.events.len()).sum()
    }
}

/// The sequence of per-step share graphs over a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicNetwork {
    grid: TimeGrid,
    users: Vec<String>,
    items: Vec<String>,
    steps: Vec<StepGraph>,
    dropped: usize,
}

impl DynamicNetwork {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn step(&self, t: usize) -> &StepGraph {
        &self.steps[t]
    }

    /// Records that fell outside the grid span and were left out.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn event_count(&self) -> usize {
        self.steps.iter().map(StepGraph::event_count).sum()
    }

    pub fn user_index(&self, name: &str) -> Option<u32> {
        self.users.binary_search_by(|u| u.as_str().cmp(name)).ok().map(|i| i as u32)
    }

    pub fn item_index(&self, name: &str) -> Option<u32> {
        self.items.binary_search_by(|u| u.as_str().cmp(name)).ok().map(|i| i as u32)
    }

    /// Text snapshot: header, grid, index maps, then one line per edge.
    pub fn to_snapshot(&self) -> String {
        let mut out = String::new();
        let g = &self.grid;
        let _ = writeln!(out, "{SNAPSHOT_MAGIC} v{SNAPSHOT_VERSION}");
        let _ = writeln!(out, "grid {} {} {}", g.start(), g.step_length(), g.n());
        let _ = writeln!(out, "dropped {}", self.dropped);
        let _ = writeln!(out, "users {}", self.users.len());
        for u in &self.users {
            let _ = writeln!(out, "{u}");
        }
        let _ = writeln!(out, "items {}", self.items.len());
        for i in &self.items {
            let _ = writeln!(out, "{i}");
        }
        for (t, step) in self.steps.iter().enumerate() {
            let _ = writeln!(out, "step {t} {}", step.edges.len());
            for e in &step.edges {
                let _ = write!(out, "{} {} {}", e.src, e.dst, e.events.len());
                for (item, ts) in &e.events {
                    let _ = write!(out, " {item}:{ts}");
                }
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_snapshot(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::parse(origin, 0, format!("snapshot truncated before {what}")))
        };
        let (n, header) = next("header")?;
        let version = header
            .strip_prefix(SNAPSHOT_MAGIC)
            .and_then(|v| v.trim().strip_prefix('v'))
            .ok_or_else(|| Error::parse(origin, n, "not a network snapshot"))?;
        let version: u32 = version.parse().map_err(|_| Error::parse(origin, n, "bad snapshot version"))?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Version { what: "network snapshot", found: version, expected: SNAPSHOT_VERSION });
        }

        let (n, line) = next("grid")?;
        let nums = keyed_numbers(origin, n, line, "grid", 3)?;
        if nums[2] > 1 << 20 {
            return Err(Error::parse(origin, n, "implausible step count"));
        }
        let grid = TimeGrid::new(nums[0], nums[1], nums[2] as usize).map_err(|e| Error::parse(origin, n, e.to_string()))?;
        let (n, line) = next("dropped")?;
        let dropped = keyed_numbers(origin, n, line, "dropped", 1)?[0] as usize;

        let mut read_names = |key: &str| -> Result<Vec<String>> {
            let (n, line) = next(key)?;
            let count = keyed_numbers(origin, n, line, key, 1)?[0] as usize;
            let mut names: Vec<String> = Vec::new();
            for _ in 0..count {
                let (n, name) = next(key)?;
                if name.is_empty() || name.split_whitespace().count() != 1 || name.trim() != name {
                    return Err(Error::parse(origin, n, format!("bad {key} id `{name}`")));
                }
                if names.last().is_some_and(|p| p.as_str() >= name) {
                    return Err(Error::parse(origin, n, format!("{key} ids must be strictly ascending")));
                }
                names.push(name.to_string());
            }
            Ok(names)
        };
        let users = read_names("users")?;
        let items = read_names("items")?;

        let mut steps = Vec::with_capacity(grid.n());
        for t in 0..grid.n() {
            let (n, line) = next("step")?;
            let nums = keyed_numbers(origin, n, line, "step", 2)?;
            if nums[0] != t as i64 {
                return Err(Error::parse(origin, n, format!("expected step {t}, found {}", nums[0])));
            }
            let mut edges: Vec<StepEdge> = Vec::new();
            for _ in 0..nums[1] {
                let (n, line) = next("edge")?;
                let edge = parse_edge(origin, n, line, users.len(), items.len(), &grid, t)?;
                if let Some(prev) = edges.last() {
                    if (prev.src, prev.dst) >= (edge.src, edge.dst) {
                        return Err(Error::parse(origin, n, "edges must be sorted and unique"));
                    }
                }
                edges.push(edge);
            }
            steps.push(StepGraph::new(users.len(), edges));
        }
        let (n, line) = next("end marker")?;
        if line != "end" {
            return Err(Error::parse(origin, n, "expected `end`"));
        }
        if let Some((n, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::parse(origin, n, "trailing content after `end`"));
        }
        Ok(DynamicNetwork { grid, users, items, steps, dropped })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_snapshot())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_snapshot(&read_text(path)?, &path.display().to_string())
    }
}

fn keyed_numbers(origin: &str, n: usize, line: &str, key: &str, count: usize) -> Result<Vec<i64>> {
    let mut f = line.split_whitespace();
    if f.next() != Some(key) {
        return Err(Error::parse(origin, n, format!("expected `{key}`")));
    }
    let nums = f
        .map(|s| s.parse::<i64>().map_err(|_| Error::parse(origin, n, format!("bad number `{s}`"))))
        .collect::<Result<Vec<_>>>()?;
    if nums.len() != count || nums.iter().any(|&x| x < 0 && key != "grid") {
        return Err(Error::parse(origin, n, format!("`{key}` takes {count} non-negative numbers")));
    }
    Ok(nums)
}

fn parse_edge(
    origin: &str,
    n: usize,
    line: &str,
    n_users: usize,
    n_items: usize,
    grid: &TimeGrid,
    t: usize,
) -> Result<StepEdge> {
    let bad = |msg: &str| Error::parse(origin, n, msg.to_string());
    let mut f = line.split_whitespace();
    let mut index = |limit: usize| -> Result<u32> {
        let v: usize = f.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad edge field"))?;
        if v >= limit {
            return Err(bad("index out of range"));
        }
        Ok(v as u32)
    };
    let src = index(n_users)?;
    let dst = index(n_users)?;
    let k = index(usize::MAX)? as usize;
    if src == dst {
        return Err(bad("self-loop edge"));
    }
    let mut events = Vec::new();
    for tok in f {
        let (item, ts) = tok.split_once(':').ok_or_else(|| bad("event must be item:timestamp"))?;
        let item: u32 = item.parse().map_err(|_| bad("bad event item"))?;
        let ts: i64 = ts.parse().map_err(|_| bad("bad event timestamp"))?;
        if item as usize >= n_items {
            return Err(bad("item index out of range"));
        }
        if grid.step_of(ts) != Some(t) {
            return Err(bad("event timestamp outside its step"));
        }
        events.push((item, ts));
    }
    if events.is_empty() || events.len() != k {
        return Err(bad("event count does not match"));
    }
    if events.windows(2).any(|w| (w[0].1, w[0].0) > (w[1].1, w[1].0)) {
        return Err(bad("events must be sorted by timestamp"));
    }
    Ok(StepEdge { src, dst, events })
}

/// `(item, ts)` events per directed `(src, dst)` pair.
type StepBucket = BTreeMap<(u32, u32), Vec<(u32, i64)>>;

/// Buckets every in-grid share of `log` into its step. Shares outside the
/// grid are counted in [`DynamicNetwork::dropped`].
pub fn build_dynamic_network(log: &EventLog, grid: TimeGrid) -> DynamicNetwork {
    let mut buckets: Vec<StepBucket> = vec![BTreeMap::new(); grid.n()];
    let mut dropped = 0;
    for s in &log.shares {
        match grid.step_of(s.ts) {
            Some(t) => buckets[t].entry((s.sender, s.receiver)).or_default().push((s.item, s.ts)),
            None => dropped += 1,
        }
    }
    let steps = buckets
        .into_iter()
        .map(|b| {
            let edges = b
                .into_iter()
                .map(|((src, dst), mut events)| {
                    events.sort_by_key(|&(item, ts)| (ts, item));
                    StepEdge { src, dst, events }
                })
                .collect();
            StepGraph::new(log.n_users(), edges)
        })
        .collect();
    DynamicNetwork { grid, users: log.users.clone(), items: log.items.clone(), steps, dropped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::records::{parse_diffusions, CatalogEntry};

    fn log(text: &str) -> EventLog {
        let d = parse_diffusions(text, "t").unwrap();
        let cat: Vec<CatalogEntry> = ["p", "q"]
            .iter()
            .map(|i| CatalogEntry { item: i.to_string(), price_index: 0, category: "c".into() })
            .collect();
        EventLog::from_records(&cat, &d, &[], &[]).unwrap()
    }

    #[test]
    fn empty_log_gives_empty_steps() {
        let net = build_dynamic_network(&log(""), TimeGrid::new(0, 10, 3).unwrap());
        assert_eq!(net.n_steps(), 3);
        assert!((0..3).all(|t| net.step(t).edges().is_empty()));
    }

    #[test]
    fn hand_built_network() {
        let l = log("a b p 5\na b q 6\nb c p 15\n");
        let net = build_dynamic_network(&l, TimeGrid::new(0, 10, 2).unwrap());
        let (a, b, c) = (0, 1, 2);
        let e = net.step(0).edge(a, b).unwrap();
        assert_eq!(e.events, vec![(0, 5), (1, 6)]);
        assert_eq!(net.step(0).edges().len(), 1);
        assert_eq!(net.step(1).edge(b, c).unwrap().events, vec![(0, 15)]);
        assert_eq!(net.step(1).in_edges(c).count(), 1);
        assert_eq!(net.dropped(), 0);
    }

    #[test]
    fn boundary_record_is_dropped() {
        let net = build_dynamic_network(&log("a b p 20\na b p 19\n"), TimeGrid::new(0, 10, 2).unwrap());
        assert_eq!(net.dropped(), 1);
        assert_eq!(net.event_count(), 1);
    }

    #[test]
    fn snapshot_round_trip() {
        let net = build_dynamic_network(&log("a b p 5\na b q 6\nb c p 15\nc a q 15\n"), TimeGrid::new(0, 10, 2).unwrap());
        let text = net.to_snapshot();
        let back = DynamicNetwork::from_snapshot(&text, "s").unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_snapshot(), text);
    }

    #[test]
    fn stale_version_names_both() {
        let net = build_dynamic_network(&log("a b p 5\n"), TimeGrid::new(0, 10, 2).unwrap());
        let text = net.to_snapshot().replacen("v1", "v0", 1);
        let err = DynamicNetwork::from_snapshot(&text, "s").unwrap_err().to_string();
        assert!(err.contains("v0") && err.contains("v1"), "{err}");
    }
}
