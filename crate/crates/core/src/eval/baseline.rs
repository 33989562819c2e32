//! Logistic regression on hand-built per-query features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{DynamicNetwork, PurchaseIndex, Query};
use crate::sampler::PriceBins;

pub const SPEND_WINDOW: i64 = 30 * 24 * 3600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig { learning_rate: 0.5, iterations: 2000, l2: 1e-4 }
    }
}

/// Features of one query, all from before the query step:
/// one-hot item price bin, log spend over the last 30 days, log distinct
/// in- and out-partners, and log counts of items shared and received per
/// price bin.
pub struct LrFeatures<'a> {
    network: &'a DynamicNetwork,
    purchases: &'a PurchaseIndex,
    item_price: &'a [u32],
    bins: PriceBins,
}

impl<'a> LrFeatures<'a> {
    pub fn new(network: &'a DynamicNetwork, purchases: &'a PurchaseIndex, item_price: &'a [u32], bins: PriceBins) -> Self {
        LrFeatures { network, purchases, item_price, bins }
    }

    pub fn dim(&self) -> usize {
        3 * self.bins.n_bins() + 3
    }

    pub fn extract(&self, q: &Query) -> Vec<f64> {
        let b = self.bins.n_bins();
        let mut f = vec![0.0; self.dim()];
        f[self.bins.bin(self.item_price[q.item as usize])] = 1.0;
        let (start, _) = self.network.grid().interval(q.step);
        let spend: u64 = self
            .purchases
            .in_window(q.user, start - SPEND_WINDOW, start)
            .iter()
            .map(|&(_, p)| self.item_price[p as usize] as u64)
            .sum();
        f[b] = (spend as f64).ln_1p();
        let (mut ins, mut outs) = (Vec::new(), Vec::new());
        for t in 0..q.step {
            let g = self.network.step(t);
            for e in g.out_edges(q.user) {
                outs.push(e.dst);
                for &(p, _) in &e.events {
                    f[b + 3 + self.bins.bin(self.item_price[p as usize])] += 1.0;
                }
            }
            for e in g.in_edges(q.user) {
                ins.push(e.src);
                for &(p, _) in &e.events {
                    f[2 * b + 3 + self.bins.bin(self.item_price[p as usize])] += 1.0;
                }
            }
        }
        for v in [&mut ins, &mut outs] {
            v.sort_unstable();
            v.dedup();
        }
        f[b + 1] = (ins.len() as f64).ln_1p();
        f[b + 2] = (outs.len() as f64).ln_1p();
        for x in &mut f[b + 3..] {
            *x = x.ln_1p();
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LogisticModel {
    /// Standardizes with the training moments (unit scale for constant
    /// columns) and runs full-batch gradient descent on the mean
    /// cross-entropy.
    pub fn fit(x: &[Vec<f64>], y: &[bool], cfg: &LrConfig) -> Result<Self> {
        let n = x.len();
        if n == 0 || n != y.len() {
            return Err(Error::Invalid(format!("logistic fit on {n} rows and {} labels", y.len())));
        }
        let d = x[0].len();
        let mut mean = vec![0.0; d];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n as f64;
            }
        }
        let mut scale = vec![0.0; d];
        for row in x {
            for j in 0..d {
                scale[j] += (row[j] - mean[j]).powi(2) / n as f64;
            }
        }
        for s in &mut scale {
            *s = if *s > 1e-12 { s.sqrt() } else { 1.0 };
        }
        let z: Vec<Vec<f64>> = x.iter().map(|r| (0..d).map(|j| (r[j] - mean[j]) / scale[j]).collect()).collect();
        let mut w = vec![0.0; d];
        let mut bias = 0.0;
        let mut grad = vec![0.0; d];
        for _ in 0..cfg.iterations {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = 0.0;
            for (row, &label) in z.iter().zip(y) {
                let p = sigmoid(bias + row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>());
                let r = p - label as u8 as f64;
                gb += r;
                for (g, v) in grad.iter_mut().zip(row) {
                    *g += r * v;
                }
            }
            for j in 0..d {
                w[j] -= cfg.learning_rate * (grad[j] / n as f64 + cfg.l2 * w[j]);
            }
            bias -= cfg.learning_rate * gb / n as f64;
        }
        if w.iter().any(|v| !v.is_finite()) || !bias.is_finite() {
            return Err(Error::Diverged("logistic regression weights are not finite".into()));
        }
        Ok(LogisticModel { mean, scale, weights: w, bias })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let s: f64 = row.iter().enumerate().map(|(j, v)| (v - self.mean[j]) / self.scale[j] * self.weights[j]).sum();
        sigmoid(self.bias + s)
    }
}
