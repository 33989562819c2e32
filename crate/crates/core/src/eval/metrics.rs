//! Ranking metrics with cold/warm strata.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::events::Query;
use crate::stats::ranks;

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Invalid(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Invalid("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!("{pos} positives and {neg} negatives; both classes are needed")));
    }
    Ok((pos, neg))
}

/// Area under the ROC curve as the Mann-Whitney statistic; tied
/// positive/negative pairs count one half.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    let r = ranks(scores);
    let rank_sum: f64 = r.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Average precision: thresholds sweep down through the distinct scores,
/// and each recall increment is weighted by the precision at that
/// threshold.
pub fn auc_pr(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut new_tp = 0;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            new_tp += labels[order[j]] as usize;
            j += 1;
        }
        tp += new_tp;
        seen = j;
        ap += (new_tp as f64 / pos as f64) * (tp as f64 / seen as f64);
        i = j;
    }
    debug_assert_eq!(seen, scores.len());
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub n: usize,
    pub positives: usize,
}

impl Metrics {
    pub fn compute(scores: &[f64], labels: &[bool]) -> Result<Self> {
        Ok(Metrics {
            auc_roc: auc_roc(scores, labels)?,
            auc_pr: auc_pr(scores, labels)?,
            n: scores.len(),
            positives: labels.iter().filter(|&&l| l).count(),
        })
    }
}

/// Overall metrics plus the cold and warm strata. A stratum is absent when
/// it is empty or holds a single class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricResult {
    pub all: Metrics,
    pub cold: Option<Metrics>,
    pub warm: Option<Metrics>,
}

fn stratum(scores: &[f64], queries: &[Query], cold: bool) -> Option<Metrics> {
    let (s, l): (Vec<f64>, Vec<bool>) =
        scores.iter().zip(queries).filter(|(_, q)| q.cold == cold).map(|(&s, q)| (s, q.label)).unzip();
    Metrics::compute(&s, &l).ok()
}

/// Metrics computed separately over the cold and the warm queries.
pub fn stratify_cold_warm(scores: &[f64], queries: &[Query]) -> (Option<Metrics>, Option<Metrics>) {
    (stratum(scores, queries, true), stratum(scores, queries, false))
}

/// Scores aligned with `queries`, labels taken from them.
pub fn evaluate(scores: &[f64], queries: &[Query]) -> Result<MetricResult> {
    let labels: Vec<bool> = queries.iter().map(|q| q.label).collect();
    let all = Metrics::compute(scores, &labels)?;
    let (cold, warm) = stratify_cold_warm(scores, queries);
    Ok(MetricResult { all, cold, warm })
}
