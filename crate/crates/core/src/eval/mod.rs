//! Metrics, query splits, the logistic-regression baseline, training and
//! ablations.

mod ablate;
mod baseline;
mod metrics;
mod split;
mod train;

pub use ablate::{ablate, ablation_table, parse_variant, standard_variants, AblationRow, Variant};
pub use baseline::{LogisticModel, LrConfig, LrFeatures, SPEND_WINDOW};
pub use metrics::{auc_pr, auc_roc, evaluate, stratify_cold_warm, MetricResult, Metrics};
pub use split::{split_queries, Split, TRAIN_FRACTION};
pub use train::{sample_all, scores, train, EpochLog, TrainConfig, TrainOutcome};

use crate::error::Result;
use crate::events::{DynamicNetwork, PurchaseIndex, Query};
use crate::sampler::PriceBins;

/// Fits the baseline on the train queries and scores the test queries.
pub fn lr_baseline(
    queries: &[Query],
    split: &Split,
    network: &DynamicNetwork,
    purchases: &PurchaseIndex,
    item_price: &[u32],
    bins: PriceBins,
    cfg: &LrConfig,
) -> Result<(LogisticModel, MetricResult)> {
    let features = LrFeatures::new(network, purchases, item_price, bins);
    let x: Vec<Vec<f64>> = split.train.iter().map(|&i| features.extract(&queries[i])).collect();
    let y: Vec<bool> = split.train.iter().map(|&i| queries[i].label).collect();
    let model = LogisticModel::fit(&x, &y, cfg)?;
    let test: Vec<Query> = split.test.iter().map(|&i| queries[i]).collect();
    let s: Vec<f64> = test.iter().map(|q| model.predict(&features.extract(q))).collect();
    Ok((model, evaluate(&s, &test)?))
}
