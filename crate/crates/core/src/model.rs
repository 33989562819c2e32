//! The purchase-prediction network.
//!
//! A structural block runs graph attention over the merged history graph.
//! A diffusion block aggregates embedded edge features per step with
//! separate in- and out-edge attention, then encodes each node's step
//! sequence. The head scores the target from its own embeddings, the summed
//! embeddings of its senders, and the item's price bin.
//!
//! Layers only compute rows for nodes whose output can still reach the seed
//! set, so layer `k` of a `K`-layer block covers nodes within `K - k` hops.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sharecast_autodiff::nn::{self, GruParams, SelfAttentionParams, LEAKY_SLOPE};
use sharecast_autodiff::{Bindings, ParamId, ParamStore, Scalar, Tape, Tensor, Var};

use crate::error::{Error, Result};
use crate::sampler::{QuerySubgraph, ROLE_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Encoder {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "mean")]
    Mean,
    #[serde(rename = "gru")]
    Gru,
    #[serde(rename = "self-attn")]
    SelfAttn,
}

impl Encoder {
    pub const ALL: [Encoder; 4] = [Encoder::None, Encoder::Mean, Encoder::Gru, Encoder::SelfAttn];

    pub fn name(self) -> &'static str {
        match self {
            Encoder::None => "none",
            Encoder::Mean => "mean",
            Encoder::Gru => "gru",
            Encoder::SelfAttn => "self-attn",
        }
    }
}

impl fmt::Display for Encoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Encoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Encoder::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown encoder `{s}` (none, mean, gru, self-attn)")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureMasks {
    /// Zero the purchase histogram in node features.
    pub user: bool,
    /// Zero the item price-bin vector.
    pub item: bool,
    /// Zero the shared-item edge features.
    pub taocode: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden_size: usize,
    pub structural_depth: usize,
    pub diffusion_depth: usize,
    pub encoder: Encoder,
    pub edge_attention: bool,
    pub structural_block: bool,
    pub mask: FeatureMasks,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden_size: 32,
            structural_depth: 2,
            diffusion_depth: 2,
            encoder: Encoder::SelfAttn,
            edge_attention: true,
            structural_block: true,
            mask: FeatureMasks::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 {
            return Err(Error::Config("model.hidden_size must be at least 1".into()));
        }
        if self.structural_depth == 0 || self.diffusion_depth == 0 {
            return Err(Error::Config("model depths must be at least 1".into()));
        }
        Ok(())
    }
}

/// Input sizes the parameters are shaped for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub node_dim: usize,
    pub edge_dim: usize,
    pub item_dim: usize,
    pub max_steps: usize,
}

impl ModelDims {
    /// Dimensions for `bins` price bins over a grid of `steps` steps.
    pub fn for_bins(bins: usize, steps: usize) -> Self {
        ModelDims { node_dim: bins + ROLE_WIDTH, edge_dim: bins, item_dim: bins, max_steps: steps }
    }
}

#[derive(Debug, Clone)]
struct StructuralLayer {
    w_self: ParamId,
    b_self: ParamId,
    w_nbr: ParamId,
    att_dst: ParamId,
    att_src: ParamId,
}

#[derive(Debug, Clone)]
enum EncoderParams {
    Plain,
    Gru([ParamId; 9]),
    SelfAttn { wq: ParamId, wk: ParamId, wv: ParamId, rel: ParamId },
}

#[derive(Debug, Clone)]
struct DiffusionLayer {
    edge_w: ParamId,
    edge_b: ParamId,
    w_in: ParamId,
    w_out: ParamId,
    proj_w: ParamId,
    proj_b: ParamId,
    encoder: EncoderParams,
}

#[derive(Debug, Clone)]
struct Layout {
    node_w: ParamId,
    node_b: ParamId,
    structural: Vec<StructuralLayer>,
    diffusion: Vec<DiffusionLayer>,
    readout: Option<(ParamId, ParamId)>,
    head_w: ParamId,
    head_b: ParamId,
}

/// Attention weights and step states of one diffusion layer.
#[derive(Debug, Clone)]
pub struct DiffusionTrace {
    /// Local node indices covered by this layer, ascending.
    pub active: Vec<usize>,
    /// Positions in `QuerySubgraph::edges` aggregated into in-segments.
    pub in_edges: Vec<usize>,
    pub in_weights: Var,
    /// Segment `t * active.len() + i` for each in-edge.
    pub in_segments: Vec<usize>,
    pub out_edges: Vec<usize>,
    pub out_weights: Var,
    pub out_segments: Vec<usize>,
    /// Rows `t * active.len() + i`: state after the sequence encoder.
    pub states: Var,
}

#[derive(Debug, Clone)]
pub struct Forward {
    pub prob: Var,
    pub logit: Var,
    /// Structural embeddings of the seeds in seed order, `[S, c]`.
    pub structural: Var,
    /// Dynamic embeddings of the seeds in seed order, `[S, c]`.
    pub dynamic: Var,
    pub diffusion: Vec<DiffusionTrace>,
}

/// Model definition: configuration plus the parameter layout.
#[derive(Debug, Clone)]
pub struct InfNet {
    config: ModelConfig,
    dims: ModelDims,
    layout: Layout,
    names: Vec<(String, [usize; 2])>,
}

impl InfNet {
    pub fn new(config: ModelConfig, dims: ModelDims) -> Result<Self> {
        config.validate()?;
        if dims.max_steps == 0 || dims.edge_dim == 0 || dims.node_dim == 0 {
            return Err(Error::Config("model input dimensions must be positive".into()));
        }
        let c = config.hidden_size;
        let mut names: Vec<(String, [usize; 2])> = Vec::new();
        let mut add = |name: String, shape: [usize; 2]| {
            names.push((name, shape));
            ParamId::from_index(names.len() - 1)
        };
        let node_w = add("node.w".into(), [dims.node_dim, c]);
        let node_b = add("node.b".into(), [1, c]);
        let mut structural = Vec::new();
        if config.structural_block {
            for k in 0..config.structural_depth {
                let fan_in = if k == 0 { dims.node_dim } else { c };
                structural.push(StructuralLayer {
                    w_self: add(format!("struct.{k}.w_self"), [fan_in, c]),
                    b_self: add(format!("struct.{k}.b_self"), [1, c]),
                    w_nbr: add(format!("struct.{k}.w_nbr"), [fan_in, c]),
                    att_dst: add(format!("struct.{k}.att_dst"), [c, 1]),
                    att_src: add(format!("struct.{k}.att_src"), [c, 1]),
                });
            }
        }
        let mut diffusion = Vec::new();
        for k in 0..config.diffusion_depth {
            let edge_w = add(format!("diff.{k}.edge_w"), [dims.edge_dim, c]);
            let edge_b = add(format!("diff.{k}.edge_b"), [1, c]);
            let w_in = add(format!("diff.{k}.w_in"), [3 * c, 1]);
            let w_out = add(format!("diff.{k}.w_out"), [3 * c, 1]);
            let proj_w = add(format!("diff.{k}.proj_w"), [2 * c, c]);
            let proj_b = add(format!("diff.{k}.proj_b"), [1, c]);
            let encoder = match config.encoder {
                Encoder::None | Encoder::Mean => EncoderParams::Plain,
                Encoder::Gru => {
                    let g = ["z", "r", "h"];
                    let mut ids = Vec::new();
                    for gate in g {
                        ids.push(add(format!("diff.{k}.gru.w_{gate}"), [c, c]));
                        ids.push(add(format!("diff.{k}.gru.u_{gate}"), [c, c]));
                        ids.push(add(format!("diff.{k}.gru.b_{gate}"), [1, c]));
                    }
                    EncoderParams::Gru(ids.try_into().expect("nine gru tensors"))
                }
                Encoder::SelfAttn => EncoderParams::SelfAttn {
                    wq: add(format!("diff.{k}.attn.wq"), [c, c]),
                    wk: add(format!("diff.{k}.attn.wk"), [c, c]),
                    wv: add(format!("diff.{k}.attn.wv"), [c, c]),
                    rel: add(format!("diff.{k}.attn.rel"), [dims.max_steps, 1]),
                },
            };
            diffusion.push(DiffusionLayer { edge_w, edge_b, w_in, w_out, proj_w, proj_b, encoder });
        }
        let readout = (config.encoder == Encoder::SelfAttn)
            .then(|| (add("readout.w".into(), [c, 1]), add("readout.rel".into(), [dims.max_steps, 1])));
        let head_w = add("head.w".into(), [4 * c + dims.item_dim, 1]);
        let head_b = add("head.b".into(), [1, 1]);
        let layout = Layout { node_w, node_b, structural, diffusion, readout, head_w, head_b };
        Ok(InfNet { config, dims, layout, names })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn dims(&self) -> &ModelDims {
        &self.dims
    }

    /// Fresh parameters: Xavier-uniform matrices, zero biases and bias tables.
    pub fn init_params<F: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ParamStore<F>> {
        let mut store = ParamStore::new();
        for (name, shape) in &self.names {
            if is_bias(name) {
                store.add_zeros(name, *shape)?;
            } else {
                store.add_xavier(name, *shape, rng)?;
            }
        }
        Ok(store)
    }

    /// Checks that `store` has exactly this model's parameter names and shapes.
    pub fn check_params<F: Scalar>(&self, store: &ParamStore<F>) -> Result<()> {
        if store.len() != self.names.len() {
            return Err(Error::Invalid(format!(
                "parameter store has {} tensors, model expects {}",
                store.len(),
                self.names.len()
            )));
        }
        for (id, (name, shape)) in store.ids().zip(&self.names) {
            if store.name(id) != name || store.get(id).shape() != *shape {
                return Err(Error::Invalid(format!("parameter `{}` does not match `{name}` {shape:?}", store.name(id))));
            }
        }
        Ok(())
    }

    pub fn forward<F: Scalar>(&self, tape: &mut Tape<F>, p: &Bindings, sg: &QuerySubgraph) -> Result<Forward> {
        if sg.node_dim != self.dims.node_dim || sg.edge_dim != self.dims.edge_dim {
            return Err(Error::Invalid("subgraph feature sizes do not match the model".into()));
        }
        if sg.n_steps == 0 || sg.n_steps > self.dims.max_steps {
            return Err(Error::Invalid(format!("subgraph has {} steps, model supports 1..={}", sg.n_steps, self.dims.max_steps)));
        }
        assert!(sg.seeds.len() >= 2, "a query always has at least one sender");
        let c = self.config.hidden_size;
        let n = sg.n_nodes();
        let bins = self.dims.node_dim - ROLE_WIDTH;

        let x = {
            let mut f: Vec<F> = sg.node_features.iter().map(|&v| F::of(f64::from(v))).collect();
            if self.config.mask.user {
                for row in f.chunks_mut(sg.node_dim) {
                    row[..bins].iter_mut().for_each(|v| *v = F::zero());
                }
            }
            tape.constant(Tensor::from_vec([n, sg.node_dim], f)?)
        };

        // Seeds sit at level 0, so the last layer of each block covers exactly them.
        let seed_active = active_set(sg, 0);
        let seed_pos: Vec<usize> = sg.seeds.iter().map(|s| seed_active.binary_search(s).expect("seed at level 0")).collect();

        let structural = if self.config.structural_block {
            let s = self.structural_block(tape, p, sg, x)?;
            tape.gather(s, seed_pos.clone())?
        } else {
            tape.constant(Tensor::zeros([sg.seeds.len(), c]))
        };
        let (d_all, diffusion) = self.diffusion_block(tape, p, sg, x)?;
        let dynamic = tape.gather(d_all, seed_pos)?;

        let d_u = tape.slice_rows(dynamic, 0, 1)?;
        let s_u = tape.slice_rows(structural, 0, 1)?;
        let both = tape.concat_cols(&[structural, dynamic])?;
        let senders: Vec<usize> = (1..sg.seeds.len()).collect();
        let sender_rows = tape.gather(both, senders.clone())?;
        let ones = tape.constant(Tensor::filled([senders.len(), 1], F::one()));
        let g_q = tape.weighted_segment_sum(ones, sender_rows, vec![0; senders.len()], 1)?;
        let item = if self.config.mask.item {
            Tensor::zeros([1, self.dims.item_dim])
        } else {
            Tensor::from_vec([1, self.dims.item_dim], sg.item_features.iter().map(|&v| F::of(f64::from(v))).collect())?
        };
        let item = tape.constant(item);
        let head_in = tape.concat_cols(&[d_u, s_u, g_q, item])?;
        let logit = nn::linear(tape, head_in, p[self.layout.head_w], Some(p[self.layout.head_b]))?;
        let prob = tape.sigmoid(logit);
        Ok(Forward { prob, logit, structural, dynamic, diffusion })
    }

    /// Graph attention over the merged history; returns `x^{K1}` for the seeds
    /// in ascending local order.
    fn structural_block<F: Scalar>(&self, tape: &mut Tape<F>, p: &Bindings, sg: &QuerySubgraph, x: Var) -> Result<Var> {
        let alpha = F::of(LEAKY_SLOPE);
        let depth = self.layout.structural.len();
        let mut prev_active: Vec<usize> = (0..sg.n_nodes()).collect();
        let mut prev = x;
        for (k, layer) in self.layout.structural.iter().enumerate() {
            let active = active_set(sg, depth - k - 1);
            let pos_prev = positions(sg.n_nodes(), &prev_active);
            let pos_cur = positions(sg.n_nodes(), &active);
            let self_rows = tape.gather(prev, active.iter().map(|&u| pos_prev[u]).collect())?;
            let z_self = nn::linear(tape, self_rows, p[layer.w_self], Some(p[layer.b_self]))?;
            let z_nbr = tape.matmul(prev, p[layer.w_nbr])?;

            let mut dst_rows = Vec::new();
            let mut src_rows = Vec::new();
            let mut segs = Vec::new();
            for &(a, b) in &sg.union_edges {
                for (u, v) in [(a, b), (b, a)] {
                    if pos_cur[u] != usize::MAX {
                        dst_rows.push(pos_prev[u]);
                        src_rows.push(pos_prev[v]);
                        segs.push(pos_cur[u]);
                    }
                }
            }
            let agg = if segs.is_empty() {
                tape.constant(Tensor::zeros([active.len(), self.config.hidden_size]))
            } else {
                let pd = tape.matmul(z_nbr, p[layer.att_dst])?;
                let ps = tape.matmul(z_nbr, p[layer.att_src])?;
                let ld = tape.gather(pd, dst_rows)?;
                let ls = tape.gather(ps, src_rows.clone())?;
                let logits = tape.add(ld, ls)?;
                let logits = tape.leaky_relu(logits, alpha);
                let w = tape.segment_softmax(logits, segs.clone(), active.len())?;
                let msgs = tape.gather(z_nbr, src_rows)?;
                tape.weighted_segment_sum(w, msgs, segs, active.len())?
            };
            let sum = tape.add(z_self, agg)?;
            prev = tape.leaky_relu(sum, alpha);
            prev_active = active;
        }
        Ok(prev)
    }

    /// Returns dynamic embeddings of the seeds in ascending local order plus
    /// a per-layer trace.
    fn diffusion_block<F: Scalar>(
        &self,
        tape: &mut Tape<F>,
        p: &Bindings,
        sg: &QuerySubgraph,
        x: Var,
    ) -> Result<(Var, Vec<DiffusionTrace>)> {
        let c = self.config.hidden_size;
        let alpha = F::of(LEAKY_SLOPE);
        let steps = sg.n_steps;
        let n = sg.n_nodes();
        let h0 = nn::linear(tape, x, p[self.layout.node_w], Some(p[self.layout.node_b]))?;
        let h0 = tape.leaky_relu(h0, alpha);

        let edge_feats = {
            let f: Vec<F> = if self.config.mask.taocode {
                vec![F::zero(); sg.edge_features.len()]
            } else {
                sg.edge_features.iter().map(|&v| F::of(f64::from(v))).collect()
            };
            tape.constant(Tensor::from_vec([sg.edges.len(), sg.edge_dim], f)?)
        };

        let depth = self.layout.diffusion.len();
        // `prev` rows: `t * prev_active.len() + i`, except layer 0 where every
        // step shares the rows of `h0`.
        let mut prev = h0;
        let mut prev_active: Vec<usize> = (0..n).collect();
        let mut prev_shared = true;
        let mut traces = Vec::with_capacity(depth);
        for (k, layer) in self.layout.diffusion.iter().enumerate() {
            let active = active_set(sg, depth - k - 1);
            let a = active.len();
            let pos_prev = positions(n, &prev_active);
            let pos_cur = positions(n, &active);
            let prev_row = |t: usize, u: usize| {
                if prev_shared {
                    pos_prev[u]
                } else {
                    t * prev_active.len() + pos_prev[u]
                }
            };

            let in_edges: Vec<usize> = (0..sg.edges.len()).filter(|&e| pos_cur[sg.edges[e].dst] != usize::MAX).collect();
            let out_edges: Vec<usize> = (0..sg.edges.len()).filter(|&e| pos_cur[sg.edges[e].src] != usize::MAX).collect();
            let in_segments: Vec<usize> = in_edges.iter().map(|&e| sg.edges[e].step * a + pos_cur[sg.edges[e].dst]).collect();
            let out_segments: Vec<usize> =
                out_edges.iter().map(|&e| sg.edges[e].step * a + pos_cur[sg.edges[e].src]).collect();

            let emb = nn::linear(tape, edge_feats, p[layer.edge_w], Some(p[layer.edge_b]))?;
            let side = |tape: &mut Tape<F>, w: ParamId, edges: &[usize], segs: &[usize], incoming: bool| -> Result<(Var, Var)> {
                if edges.is_empty() {
                    let w = tape.constant(Tensor::zeros([0, 1]));
                    return Ok((w, tape.constant(Tensor::zeros([steps * a, c]))));
                }
                let e_rows = tape.gather(emb, edges.to_vec())?;
                let weights = if self.config.edge_attention {
                    let w_self = tape.slice_rows(p[w], 0, c)?;
                    let w_other = tape.slice_rows(p[w], c, c)?;
                    let w_edge = tape.slice_rows(p[w], 2 * c, c)?;
                    let (mut own, mut other) = (Vec::new(), Vec::new());
                    for &e in edges {
                        let le = sg.edges[e];
                        let (u, v) = if incoming { (le.dst, le.src) } else { (le.src, le.dst) };
                        own.push(prev_row(le.step, u));
                        other.push(prev_row(le.step, v));
                    }
                    let ps = tape.matmul(prev, w_self)?;
                    let po = tape.matmul(prev, w_other)?;
                    let pe = tape.matmul(e_rows, w_edge)?;
                    let ls = tape.gather(ps, own)?;
                    let lo = tape.gather(po, other)?;
                    let logits = tape.add(ls, lo)?;
                    let logits = tape.add(logits, pe)?;
                    let logits = tape.leaky_relu(logits, alpha);
                    tape.segment_softmax(logits, segs.to_vec(), steps * a)?
                } else {
                    tape.constant(nn::uniform_segment_weights(segs, steps * a))
                };
                let agg = tape.weighted_segment_sum(weights, e_rows, segs.to_vec(), steps * a)?;
                Ok((weights, agg))
            };
            let (in_weights, in_agg) = side(tape, layer.w_in, &in_edges, &in_segments, true)?;
            let (out_weights, out_agg) = side(tape, layer.w_out, &out_edges, &out_segments, false)?;

            let joined = tape.concat_cols(&[in_agg, out_agg])?;
            let hp = nn::linear(tape, joined, p[layer.proj_w], Some(p[layer.proj_b]))?;
            let hp = tape.leaky_relu(hp, alpha);
            let states = self.encode(tape, p, &layer.encoder, hp, steps, a)?;

            traces.push(DiffusionTrace {
                active: active.clone(),
                in_edges,
                in_weights,
                in_segments,
                out_edges,
                out_weights,
                out_segments,
                states,
            });
            prev = states;
            prev_active = active;
            prev_shared = false;
        }

        let a = prev_active.len();
        let d = match self.config.encoder {
            Encoder::None | Encoder::Gru => tape.slice_rows(prev, (steps - 1) * a, a)?,
            Encoder::Mean => {
                let slices = (0..steps).map(|t| tape.slice_rows(prev, t * a, a)).collect::<Result<Vec<_>, _>>()?;
                tape.mean_over_steps(&slices)?
            }
            Encoder::SelfAttn => {
                let (w, rel) = self.layout.readout.expect("self-attention readout");
                let score = tape.matmul(prev, p[w])?;
                let recency: Vec<usize> = (0..steps * a).map(|r| steps - 1 - r / a).collect();
                let bias = tape.gather(p[rel], recency)?;
                let score = tape.add(score, bias)?;
                let segs: Vec<usize> = (0..steps * a).map(|r| r % a).collect();
                let weights = tape.segment_softmax(score, segs.clone(), a)?;
                tape.weighted_segment_sum(weights, prev, segs, a)?
            }
        };
        Ok((d, traces))
    }

    /// Runs the sequence encoder over `n_seq` step-major sequences.
    fn encode<F: Scalar>(
        &self,
        tape: &mut Tape<F>,
        p: &Bindings,
        enc: &EncoderParams,
        seq: Var,
        steps: usize,
        n_seq: usize,
    ) -> Result<Var> {
        match (self.config.encoder, enc) {
            (Encoder::None, _) => Ok(seq),
            (Encoder::Mean, _) => {
                let mut rows = Vec::new();
                let mut segs = Vec::new();
                let mut weights = Vec::new();
                for t in 0..steps {
                    for s in 0..n_seq {
                        for i in 0..=t {
                            rows.push(i * n_seq + s);
                            segs.push(t * n_seq + s);
                            weights.push(F::one() / F::of((t + 1) as f64));
                        }
                    }
                }
                let g = tape.gather(seq, rows)?;
                let w = tape.constant(Tensor::column(weights));
                Ok(tape.weighted_segment_sum(w, g, segs, steps * n_seq)?)
            }
            (Encoder::Gru, EncoderParams::Gru(ids)) => {
                let g = GruParams {
                    w_z: p[ids[0]],
                    u_z: p[ids[1]],
                    b_z: p[ids[2]],
                    w_r: p[ids[3]],
                    u_r: p[ids[4]],
                    b_r: p[ids[5]],
                    w_h: p[ids[6]],
                    u_h: p[ids[7]],
                    b_h: p[ids[8]],
                };
                let mut h = tape.constant(Tensor::zeros([n_seq, self.config.hidden_size]));
                let mut out = Vec::with_capacity(steps);
                for t in 0..steps {
                    let x_t = tape.slice_rows(seq, t * n_seq, n_seq)?;
                    h = nn::gru_cell(tape, x_t, h, &g)?;
                    out.push(h);
                }
                Ok(tape.concat_rows(&out)?)
            }
            (Encoder::SelfAttn, EncoderParams::SelfAttn { wq, wk, wv, rel }) => {
                let sa = SelfAttentionParams { wq: p[*wq], wk: p[*wk], wv: p[*wv], rel_bias: Some(p[*rel]) };
                Ok(nn::masked_self_attention(tape, seq, n_seq, &sa)?)
            }
            _ => unreachable!("encoder parameters follow the configured encoder"),
        }
    }

    /// Probability that the query converts.
    pub fn predict<F: Scalar>(&self, store: &ParamStore<F>, sg: &QuerySubgraph) -> Result<F> {
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let out = self.forward(&mut tape, &p, sg)?;
        Ok(tape.value(out.prob).item())
    }

    /// Binary cross-entropy for one labeled subgraph; adds `∂loss/∂θ` to the
    /// store's gradient buffers and returns the loss.
    pub fn accumulate_gradient<F: Scalar>(&self, store: &mut ParamStore<F>, sg: &QuerySubgraph, label: bool) -> Result<(F, F)> {
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let out = self.forward(&mut tape, &p, sg)?;
        let y = if label { F::one() } else { F::zero() };
        let loss = tape.binary_cross_entropy(out.prob, &[y])?;
        tape.backward(loss)?;
        store.accumulate_grads(&tape, &p);
        Ok((tape.value(loss).item(), tape.value(out.prob).item()))
    }
}

/// Biases and bias tables start at zero; everything else is Xavier-initialized.
fn is_bias(name: &str) -> bool {
    let last = name.rsplit('.').next().unwrap_or(name);
    last == "b" || last == "rel" || last.starts_with("b_") || last.ends_with("_b")
}

/// Local indices with BFS level at most `max_level`, ascending.
fn active_set(sg: &QuerySubgraph, max_level: usize) -> Vec<usize> {
    (0..sg.n_nodes()).filter(|&u| sg.level[u] <= max_level).collect()
}

/// Inverse of `active`: local index to row, `usize::MAX` when absent.
fn positions(n: usize, active: &[usize]) -> Vec<usize> {
    let mut pos = vec![usize::MAX; n];
    for (i, &u) in active.iter().enumerate() {
        pos[u] = i;
    }
    pos
}
