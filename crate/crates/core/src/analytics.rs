//! Observational statistics on how shares convert into purchases.
//!
//! A record (a received share, or a browse) converts when the same user buys
//! the same item within `horizon` seconds after it: a purchase at `t` counts
//! for a record at `ts` iff `ts < t <= ts + horizon`. The conversion index
//! (CI) of a group of records is `100 * converted / total`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{write_text, Error, Result};
use crate::events::{DynamicNetwork, EventLog, PurchaseIndex, UserEvent, WEEK};
use crate::sampler::UnionGraph;
use crate::stats;

pub const CI_SCALE: f64 = 100.0;
/// Degrees `1..=MAX_DEGREE` get their own row and column in the gap matrix.
pub const MAX_DEGREE: usize = 9;
/// Close-neighbor counts and week gaps at or above this share the last bucket.
pub const BUCKETS: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CiCell {
    pub total: u64,
    pub converted: u64,
}

impl CiCell {
    pub fn add(&mut self, converted: bool) {
        self.total += 1;
        self.converted += converted as u64;
    }

    /// `None` for an empty cell.
    pub fn ci(&self) -> Option<f64> {
        (self.total > 0).then(|| CI_SCALE * self.converted as f64 / self.total as f64)
    }

    fn merge(&mut self, other: CiCell) {
        self.total += other.total;
        self.converted += other.converted;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Taocode,
    Browse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Item,
    Category,
}

/// Records of one mode as `(user, item, ts)`; a share is a record of its
/// receiver.
pub fn records(log: &EventLog, mode: Mode) -> Vec<UserEvent> {
    match mode {
        Mode::Taocode => log.shares.iter().map(|s| UserEvent { user: s.receiver, item: s.item, ts: s.ts }).collect(),
        Mode::Browse => log.browses.clone(),
    }
}

pub fn converts(purchases: &PurchaseIndex, user: u32, item: u32, ts: i64, horizon: i64) -> bool {
    purchases.bought_in(user, item, ts.saturating_add(1), ts.saturating_add(horizon).saturating_add(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CiRow {
    pub group: u32,
    pub name: String,
    pub cell: CiCell,
}

/// CI per group, ascending by group index. Groups without records are left
/// out.
#[derive(Debug, Clone, PartialEq)]
pub struct CiTable {
    pub rows: Vec<CiRow>,
}

impl CiTable {
    pub fn get(&self, group: u32) -> Option<&CiCell> {
        self.rows.binary_search_by_key(&group, |r| r.group).ok().map(|i| &self.rows[i].cell)
    }

    pub fn total(&self) -> CiCell {
        let mut c = CiCell::default();
        for r in &self.rows {
            c.merge(r.cell);
        }
        c
    }
}

pub fn conversion_index(log: &EventLog, purchases: &PurchaseIndex, mode: Mode, group_by: GroupBy, horizon: i64) -> CiTable {
    let (names, group_of): (&[String], Box<dyn Fn(u32) -> u32>) = match group_by {
        GroupBy::Item => (&log.items, Box::new(|p| p)),
        GroupBy::Category => (&log.categories, Box::new(|p| log.item_category[p as usize])),
    };
    let mut cells = vec![CiCell::default(); names.len()];
    for r in records(log, mode) {
        cells[group_of(r.item) as usize].add(converts(purchases, r.user, r.item, r.ts, horizon));
    }
    let empty = cells.iter().filter(|c| c.total == 0).count();
    if empty > 0 {
        log::warn!("{empty} of {} {group_by:?} groups have no {mode:?} records and are left out", names.len());
    }
    let rows = cells
        .into_iter()
        .enumerate()
        .filter(|(_, c)| c.total > 0)
        .map(|(g, cell)| CiRow { group: g as u32, name: names[g].clone(), cell })
        .collect();
    CiTable { rows }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftPoint {
    pub category: u32,
    pub name: String,
    pub mean_pi: f64,
    pub lift: f64,
}

/// CI lift against mean price index across categories.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftFit {
    pub points: Vec<LiftPoint>,
    pub slope: f64,
    pub intercept: f64,
    pub rho: f64,
    pub p_value: f64,
}

/// Mean price index of the catalog items in each category.
pub fn category_mean_pi(log: &EventLog) -> Vec<f64> {
    let mut sum = vec![0.0; log.categories.len()];
    let mut n = vec![0usize; log.categories.len()];
    for (p, &c) in log.item_category.iter().enumerate() {
        sum[c as usize] += log.item_price[p] as f64;
        n[c as usize] += 1;
    }
    sum.iter().zip(&n).map(|(s, &k)| if k == 0 { f64::NAN } else { s / k as f64 }).collect()
}

/// Fits lift on mean PI over categories where both CIs exist and the browse
/// CI is non-zero.
pub fn ci_lift_vs_pi(log: &EventLog, taocode: &CiTable, browse: &CiTable) -> Result<LiftFit> {
    let mean_pi = category_mean_pi(log);
    let points: Vec<LiftPoint> = taocode
        .rows
        .iter()
        .filter_map(|row| {
            let b = browse.get(row.group)?.ci()?;
            let t = row.cell.ci()?;
            (b > 0.0).then(|| LiftPoint {
                category: row.group,
                name: row.name.clone(),
                mean_pi: mean_pi[row.group as usize],
                lift: t / b,
            })
        })
        .collect();
    if points.len() < 3 {
        return Err(Error::Invalid(format!("CI lift needs 3+ categories with both CIs, found {}", points.len())));
    }
    let x: Vec<f64> = points.iter().map(|p| p.mean_pi).collect();
    let y: Vec<f64> = points.iter().map(|p| p.lift).collect();
    let (slope, intercept) = stats::ols(&x, &y)?;
    let rho = stats::spearman(&x, &y)?;
    Ok(LiftFit { p_value: stats::spearman_p_value(rho, points.len()), points, slope, intercept, rho })
}

/// CI of in-grid shares by (sender degree, receiver degree), with degrees
/// counted as distinct partners in the network merged over all steps.
/// Shares with either degree above [`MAX_DEGREE`] are left out.
pub fn degree_gap_matrix(
    log: &EventLog,
    purchases: &PurchaseIndex,
    network: &DynamicNetwork,
    horizon: i64,
) -> [[CiCell; MAX_DEGREE]; MAX_DEGREE] {
    let union = UnionGraph::prefix(network, network.n_steps());
    let mut m = [[CiCell::default(); MAX_DEGREE]; MAX_DEGREE];
    for s in &log.shares {
        if network.grid().step_of(s.ts).is_none() {
            continue;
        }
        let (ds, dr) = (union.degree(s.sender), union.degree(s.receiver));
        if (1..=MAX_DEGREE).contains(&ds) && (1..=MAX_DEGREE).contains(&dr) {
            m[ds - 1][dr - 1].add(converts(purchases, s.receiver, s.item, s.ts, horizon));
        }
    }
    m
}

fn key(u: u32, p: u32) -> u64 {
    (u as u64) << 32 | p as u64
}

/// Earliest time per key.
fn earliest(events: impl Iterator<Item = (u64, i64)>) -> HashMap<u64, i64> {
    let mut m = HashMap::new();
    for (k, t) in events {
        let e = m.entry(k).or_insert(t);
        *e = (*e).min(t);
    }
    m
}

/// Number of close neighbors the receiver of each share had: partners it
/// exchanged a share with before the share, who had also received and
/// bought the item before it. Aligned with `log.shares`.
pub fn close_neighbor_counts(log: &EventLog) -> Vec<usize> {
    let mut first_contact: Vec<HashMap<u32, i64>> = vec![HashMap::new(); log.users.len()];
    for s in &log.shares {
        for (a, b) in [(s.sender, s.receiver), (s.receiver, s.sender)] {
            let e = first_contact[a as usize].entry(b).or_insert(s.ts);
            *e = (*e).min(s.ts);
        }
    }
    let partners: Vec<Vec<(i64, u32)>> = first_contact
        .into_iter()
        .map(|m| {
            let mut v: Vec<(i64, u32)> = m.into_iter().map(|(w, t)| (t, w)).collect();
            v.sort_unstable();
            v
        })
        .collect();
    let received = earliest(log.shares.iter().map(|s| (key(s.receiver, s.item), s.ts)));
    let bought = earliest(log.purchases.iter().map(|p| (key(p.user, p.item), p.ts)));
    let before = |m: &HashMap<u64, i64>, k: u64, ts: i64| m.get(&k).is_some_and(|&t| t < ts);
    log.shares
        .iter()
        .map(|s| {
            partners[s.receiver as usize]
                .iter()
                .take_while(|&&(t, _)| t < s.ts)
                .filter(|&&(_, w)| before(&received, key(w, s.item), s.ts) && before(&bought, key(w, s.item), s.ts))
                .count()
        })
        .collect()
}

/// CI of shares by the receiver's close-neighbor count, `BUCKETS - 1` and up
/// pooled.
pub fn close_neighbor_curve(log: &EventLog, purchases: &PurchaseIndex, horizon: i64) -> [CiCell; BUCKETS] {
    let mut curve = [CiCell::default(); BUCKETS];
    for (s, n) in log.shares.iter().zip(close_neighbor_counts(log)) {
        curve[n.min(BUCKETS - 1)].add(converts(purchases, s.receiver, s.item, s.ts, horizon));
    }
    curve
}

/// Weeks (rounded up) between the sender's latest earlier receipt of the
/// item and the share; 0 when the sender had not received it before.
pub fn week_gap(gap_seconds: Option<i64>) -> usize {
    match gap_seconds {
        None => 0,
        Some(g) => (g.max(1) as u64).div_ceil(WEEK as u64) as usize,
    }
}

/// CI of shares by week gap bucket and whether the sender bought the item
/// before sharing: `bars[delta][bought as usize]`.
pub fn temporal_gap_bars(log: &EventLog, purchases: &PurchaseIndex, horizon: i64) -> [[CiCell; 2]; BUCKETS] {
    let mut receipts: HashMap<u64, Vec<i64>> = HashMap::new();
    for s in &log.shares {
        receipts.entry(key(s.receiver, s.item)).or_default().push(s.ts);
    }
    for v in receipts.values_mut() {
        v.sort_unstable();
    }
    let bought = earliest(log.purchases.iter().map(|p| (key(p.user, p.item), p.ts)));
    let mut bars = [[CiCell::default(); 2]; BUCKETS];
    for s in &log.shares {
        let prior = receipts.get(&key(s.sender, s.item)).and_then(|v| {
            let i = v.partition_point(|&t| t < s.ts);
            (i > 0).then(|| s.ts - v[i - 1])
        });
        let delta = week_gap(prior).min(BUCKETS - 1);
        let sender_bought = bought.get(&key(s.sender, s.item)).is_some_and(|&t| t < s.ts);
        bars[delta][sender_bought as usize].add(converts(purchases, s.receiver, s.item, s.ts, horizon));
    }
    bars
}

/// Trend checks against the planted directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Trends {
    /// One-sided exact binomial p of the share conversions under the browse rate.
    pub taocode_vs_browse_p: f64,
    pub taocode_above_browse: bool,
    /// Adjacent supported close-neighbor buckets never decrease.
    pub close_monotone: bool,
    /// Sign test over all ordered pairs of supported buckets.
    pub close_sign_p: f64,
    /// Per week bucket with both flags supported: does the bought bar lead?
    pub bought_leads: Vec<(usize, bool)>,
}

#[derive(Debug, Clone)]
pub struct AnalyticsReport {
    pub horizon: i64,
    pub taocode_items: CiTable,
    pub browse_items: CiTable,
    pub taocode_categories: CiTable,
    pub browse_categories: CiTable,
    pub category_mean_pi: Vec<f64>,
    pub item_price: Vec<u32>,
    pub item_category: Vec<String>,
    pub lift: std::result::Result<LiftFit, String>,
    pub degree_gap: [[CiCell; MAX_DEGREE]; MAX_DEGREE],
    pub close_neighbors: [CiCell; BUCKETS],
    pub temporal_gap: [[CiCell; 2]; BUCKETS],
}

pub fn analyze(log: &EventLog, network: &DynamicNetwork, horizon: i64) -> Result<AnalyticsReport> {
    if horizon <= 0 {
        return Err(Error::Config(format!("conversion horizon must be positive, got {horizon}")));
    }
    let purchases = PurchaseIndex::new(log.n_users(), &log.purchases);
    let taocode_categories = conversion_index(log, &purchases, Mode::Taocode, GroupBy::Category, horizon);
    let browse_categories = conversion_index(log, &purchases, Mode::Browse, GroupBy::Category, horizon);
    let lift = ci_lift_vs_pi(log, &taocode_categories, &browse_categories).map_err(|e| e.to_string());
    Ok(AnalyticsReport {
        horizon,
        taocode_items: conversion_index(log, &purchases, Mode::Taocode, GroupBy::Item, horizon),
        browse_items: conversion_index(log, &purchases, Mode::Browse, GroupBy::Item, horizon),
        category_mean_pi: category_mean_pi(log),
        item_price: log.item_price.clone(),
        item_category: log.item_category.iter().map(|&c| log.categories[c as usize].clone()).collect(),
        lift,
        degree_gap: degree_gap_matrix(log, &purchases, network, horizon),
        close_neighbors: close_neighbor_curve(log, &purchases, horizon),
        temporal_gap: temporal_gap_bars(log, &purchases, horizon),
        taocode_categories,
        browse_categories,
    })
}

fn fmt_ci(c: &CiCell) -> String {
    c.ci().map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

fn csv_ci(c: &CiCell) -> String {
    c.ci().map_or_else(String::new, |v| format!("{v:.4}"))
}

impl AnalyticsReport {
    pub fn trends(&self) -> Trends {
        let (t, b) = (self.taocode_categories.total(), self.browse_categories.total());
        let rate = b.ci().unwrap_or(0.0) / CI_SCALE;
        let supported: Vec<f64> = self.close_neighbors.iter().filter_map(|c| c.ci()).collect();
        let (mut wins, mut losses) = (0, 0);
        for i in 0..supported.len() {
            for j in i + 1..supported.len() {
                if supported[j] > supported[i] {
                    wins += 1;
                } else if supported[j] < supported[i] {
                    losses += 1;
                }
            }
        }
        Trends {
            taocode_vs_browse_p: stats::binomial_upper_tail(t.converted, t.total, rate),
            taocode_above_browse: t.ci() > b.ci(),
            close_monotone: supported.windows(2).all(|w| w[1] >= w[0]),
            close_sign_p: stats::sign_test(wins, losses),
            bought_leads: self
                .temporal_gap
                .iter()
                .enumerate()
                .filter_map(|(d, [no, yes])| Some((d, yes.ci()? > no.ci()?)))
                .collect(),
        }
    }

    /// Five plain-text tables.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "# conversion index by category (horizon {} s)", self.horizon);
        let _ = writeln!(w, "{:<12} {:>8} {:>9} {:>10} {:>9} {:>10} {:>7}", "category", "mean_pi", "shares", "ci_share", "browses", "ci_browse", "lift");
        let mut cats: Vec<u32> = self.taocode_categories.rows.iter().map(|r| r.group).collect();
        cats.extend(self.browse_categories.rows.iter().map(|r| r.group));
        cats.sort_unstable();
        cats.dedup();
        for g in cats {
            let t = self.taocode_categories.get(g).copied().unwrap_or_default();
            let b = self.browse_categories.get(g).copied().unwrap_or_default();
            let name = self.taocode_categories.rows.iter().chain(&self.browse_categories.rows).find(|r| r.group == g).map_or("", |r| &r.name);
            let lift = match (t.ci(), b.ci()) {
                (Some(x), Some(y)) if y > 0.0 => format!("{:.3}", x / y),
                _ => "-".into(),
            };
            let _ = writeln!(
                w,
                "{:<12} {:>8.2} {:>9} {:>10} {:>9} {:>10} {:>7}",
                name, self.category_mean_pi[g as usize], t.total, fmt_ci(&t), b.total, fmt_ci(&b), lift
            );
        }
        let (t, b) = (self.taocode_categories.total(), self.browse_categories.total());
        let trends = self.trends();
        let _ = writeln!(
            w,
            "overall: shares {} ci {}, browses {} ci {}, binomial p {:.3e}",
            t.total,
            fmt_ci(&t),
            b.total,
            fmt_ci(&b),
            trends.taocode_vs_browse_p
        );

        let _ = writeln!(w, "\n# ci lift vs mean price index");
        match &self.lift {
            Ok(f) => {
                let _ = writeln!(
                    w,
                    "categories {} slope {:.5} intercept {:.4} spearman {:.4} p {:.3e}",
                    f.points.len(),
                    f.slope,
                    f.intercept,
                    f.rho,
                    f.p_value
                );
            }
            Err(e) => {
                let _ = writeln!(w, "unavailable: {e}");
            }
        }

        let _ = writeln!(w, "\n# ci by degree (rows: sender degree, columns: receiver degree)");
        let _ = write!(w, "{:>4}", "");
        for c in 1..=MAX_DEGREE {
            let _ = write!(w, " {c:>7}");
        }
        let _ = writeln!(w);
        for (r, row) in self.degree_gap.iter().enumerate() {
            let _ = write!(w, "{:>4}", r + 1);
            for cell in row {
                let _ = write!(w, " {:>7}", fmt_ci(cell));
            }
            let _ = writeln!(w);
        }

        let _ = writeln!(w, "\n# ci by close-neighbor count");
        let _ = writeln!(w, "{:<6} {:>9} {:>10} {:>8}", "count", "records", "converted", "ci");
        for (k, c) in self.close_neighbors.iter().enumerate() {
            let label = if k == BUCKETS - 1 { format!("{k}+") } else { k.to_string() };
            let _ = writeln!(w, "{:<6} {:>9} {:>10} {:>8}", label, c.total, c.converted, fmt_ci(c));
        }
        let _ = writeln!(w, "monotone {} sign p {:.3e}", trends.close_monotone, trends.close_sign_p);

        let _ = writeln!(w, "\n# ci by week gap and sender purchase");
        let _ = writeln!(w, "{:<6} {:>9} {:>10} {:>9} {:>10}", "weeks", "n_other", "ci_other", "n_bought", "ci_bought");
        for (d, [no, yes]) in self.temporal_gap.iter().enumerate() {
            let label = if d == BUCKETS - 1 { format!("{d}+") } else { d.to_string() };
            let _ = writeln!(w, "{:<6} {:>9} {:>10} {:>9} {:>10}", label, no.total, fmt_ci(no), yes.total, fmt_ci(yes));
        }
        out
    }

    /// Writes one CSV per table into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        let mut items = String::from("item,category,price_index,shares,shares_converted,ci_share,browses,browses_converted,ci_browse\n");
        let mut ids: Vec<(u32, &str)> = self.taocode_items.rows.iter().chain(&self.browse_items.rows).map(|r| (r.group, r.name.as_str())).collect();
        ids.sort_unstable();
        ids.dedup();
        for (p, name) in ids {
            let t = self.taocode_items.get(p).copied().unwrap_or_default();
            let b = self.browse_items.get(p).copied().unwrap_or_default();
            let _ = writeln!(
                items,
                "{name},{},{},{},{},{},{},{},{}",
                self.item_category[p as usize],
                self.item_price[p as usize],
                t.total,
                t.converted,
                csv_ci(&t),
                b.total,
                b.converted,
                csv_ci(&b)
            );
        }
        write_text(&dir.join("ci_items.csv"), &items)?;

        let mut cats = String::from("category,mean_pi,shares,shares_converted,ci_share,browses,browses_converted,ci_browse\n");
        for row in &self.taocode_categories.rows {
            let b = self.browse_categories.get(row.group).copied().unwrap_or_default();
            let t = row.cell;
            let _ = writeln!(
                cats,
                "{},{:.4},{},{},{},{},{},{}",
                row.name,
                self.category_mean_pi[row.group as usize],
                t.total,
                t.converted,
                csv_ci(&t),
                b.total,
                b.converted,
                csv_ci(&b)
            );
        }
        write_text(&dir.join("ci_categories.csv"), &cats)?;

        let mut lift = String::from("category,mean_pi,lift\n");
        if let Ok(f) = &self.lift {
            for p in &f.points {
                let _ = writeln!(lift, "{},{:.4},{:.6}", p.name, p.mean_pi, p.lift);
            }
        }
        write_text(&dir.join("lift.csv"), &lift)?;

        let mut gap = String::from("sender_degree,receiver_degree,records,converted,ci\n");
        for (r, row) in self.degree_gap.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                let _ = writeln!(gap, "{},{},{},{},{}", r + 1, c + 1, cell.total, cell.converted, csv_ci(cell));
            }
        }
        write_text(&dir.join("degree_gap.csv"), &gap)?;

        let mut close = String::from("close_neighbors,records,converted,ci\n");
        for (k, c) in self.close_neighbors.iter().enumerate() {
            let _ = writeln!(close, "{k},{},{},{}", c.total, c.converted, csv_ci(c));
        }
        write_text(&dir.join("close_neighbors.csv"), &close)?;

        let mut temporal = String::from("delta_weeks,sender_bought,records,converted,ci\n");
        for (d, bars) in self.temporal_gap.iter().enumerate() {
            for (flag, c) in bars.iter().enumerate() {
                let _ = writeln!(temporal, "{d},{flag},{},{},{}", c.total, c.converted, csv_ci(c));
            }
        }
        write_text(&dir.join("temporal_gap.csv"), &temporal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_ci() {
        let mut c = CiCell::default();
        assert_eq!(c.ci(), None);
        for i in 0..12 {
            c.add(i < 3);
        }
        assert_eq!(c.ci(), Some(25.0));
    }

    #[test]
    fn week_gaps_round_up() {
        assert_eq!(week_gap(None), 0);
        assert_eq!(week_gap(Some(10 * 24 * 3600)), 2);
        assert_eq!(week_gap(Some(WEEK)), 1);
        assert_eq!(week_gap(Some(1)), 1);
    }
}
