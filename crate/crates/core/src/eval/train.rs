//! Mini-batch Adam training with early stopping on validation AUC-PR.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sharecast_autodiff::{AdamConfig, AdamState, ParamStore, Scalar};

use super::metrics::{evaluate, Metrics, MetricResult};
use super::split::Split;
use crate::error::{Error, Result};
use crate::events::Query;
use crate::model::InfNet;
use crate::sampler::{QuerySubgraph, Sampler};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop once this many epochs pass without a better validation AUC-PR;
    /// 0 stops after the first epoch.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 1e-3, batch_size: 512, max_epochs: 30, patience: 5 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("train: batch_size and max_epochs must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("train: learning_rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

/// Samples one subgraph per query.
pub fn sample_all(sampler: &Sampler<'_>, queries: &[Query]) -> Result<Vec<QuerySubgraph>> {
    queries.iter().map(|q| sampler.sample(q)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation: Metrics,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<F> {
    /// Parameters from the best validation epoch.
    pub store: ParamStore<F>,
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
    /// Test scores aligned with `split.test`.
    pub test_scores: Vec<f64>,
    pub test: MetricResult,
}

pub fn scores<F: Scalar>(model: &InfNet, store: &ParamStore<F>, subgraphs: &[QuerySubgraph], idx: &[usize]) -> Result<Vec<f64>> {
    idx.iter().map(|&i| Ok(model.predict(store, &subgraphs[i])?.to_f64_lossy())).collect()
}

/// Trains on `split.train` against `labels` (aligned with `queries`), picks
/// the epoch with the best validation AUC-PR under the same labels, and
/// scores the test set against the queries' own labels.
#[allow(clippy::too_many_arguments)]
pub fn train<F: Scalar>(
    model: &InfNet,
    queries: &[Query],
    subgraphs: &[QuerySubgraph],
    labels: &[bool],
    split: &Split,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome<F>> {
    cfg.validate()?;
    if subgraphs.len() != queries.len() || labels.len() != queries.len() {
        return Err(Error::Invalid("queries, subgraphs and labels must align".into()));
    }
    let mut store: ParamStore<F> = model.init_params(&mut seeds::rng_for(seed, seeds::INIT))?;
    let mut adam = AdamState::new(AdamConfig { lr: cfg.learning_rate, ..AdamConfig::default() }, &store);
    let mut shuffle = seeds::rng_for(seed, seeds::SHUFFLE);
    let val_labels: Vec<bool> = split.validation.iter().map(|&i| labels[i]).collect();
    let mut order = split.train.clone();
    let mut best: Option<(f64, usize, ParamStore<F>)> = None;
    let mut history = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            store.zero_grads();
            for &i in batch {
                let (loss, _) = model.accumulate_gradient(&mut store, &subgraphs[i], labels[i])?;
                let loss = loss.to_f64_lossy();
                if !loss.is_finite() {
                    let q = &queries[i];
                    return Err(Error::Diverged(format!(
                        "loss {loss} at epoch {epoch}, batch {b}, query (user {}, item {}, step {})",
                        q.user, q.item, q.step
                    )));
                }
                total += loss;
            }
            store.scale_grads(F::of(1.0 / batch.len() as f64));
            adam.step(&mut store)?;
            if store.ids().any(|id| store.get(id).values().iter().any(|v| !v.is_finite())) {
                return Err(Error::Diverged(format!("non-finite parameters after epoch {epoch}, batch {b}")));
            }
        }
        let val_scores = scores(model, &store, subgraphs, &split.validation)?;
        let validation = Metrics::compute(&val_scores, &val_labels)?;
        let train_loss = total / order.len().max(1) as f64;
        log::info!(
            "epoch {epoch}: train loss {train_loss:.5}, validation auc-roc {:.4} auc-pr {:.4}",
            validation.auc_roc,
            validation.auc_pr
        );
        history.push(EpochLog { epoch, train_loss, validation });
        if best.as_ref().is_none_or(|(pr, _, _)| validation.auc_pr > *pr) {
            best = Some((validation.auc_pr, epoch, store.clone()));
        }
        let best_epoch = best.as_ref().map_or(epoch, |b| b.1);
        if epoch - best_epoch >= cfg.patience {
            break;
        }
    }

    let (_, best_epoch, store) = best.expect("at least one epoch ran");
    let test_scores = scores(model, &store, subgraphs, &split.test)?;
    let test_queries: Vec<Query> = split.test.iter().map(|&i| queries[i]).collect();
    let test = evaluate(&test_scores, &test_queries)?;
    Ok(TrainOutcome { store, best_epoch, history, test_scores, test })
}
