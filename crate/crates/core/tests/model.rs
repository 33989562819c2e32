mod common;

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sharecast::events::Query;
use sharecast::model::{Encoder, FeatureMasks, InfNet, ModelConfig, ModelDims};
use sharecast::sampler::{LocalEdge, QuerySubgraph};
use sharecast_autodiff::{grad_check_many, AutodiffError, Bindings, ParamStore, Tape, Tensor};

const BINS: usize = 3;

fn net(encoder: Encoder, c: usize) -> InfNet {
    let cfg = ModelConfig { hidden_size: c, encoder, ..ModelConfig::default() };
    InfNet::new(cfg, ModelDims::for_bins(BINS, 4)).unwrap()
}

fn params(net: &InfNet, seed: u64) -> ParamStore<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store: ParamStore<f64> = net.init_params(&mut rng).unwrap();
    // Non-zero biases so that every parameter influences the loss.
    for id in store.ids().collect::<Vec<_>>() {
        for v in store.get_mut(id).values_mut() {
            if *v == 0.0 {
                *v = rng.random_range(-0.5..0.5);
            }
        }
    }
    store
}

fn tensors(store: &ParamStore<f64>) -> Vec<Tensor<f64>> {
    store.ids().map(|id| store.get(id).clone()).collect()
}

#[test]
fn full_model_gradients_match_finite_differences() {
    for encoder in Encoder::ALL {
        let model = net(encoder, 3);
        for seed in 0..20 {
            let sg = common::small_subgraph(seed, 6, 2, BINS);
            let store = params(&model, 1000 + seed);
            let label = seed % 2 == 0;
            let err = grad_check_many(
                |tape, vars| {
                    let p = Bindings::new(vars.to_vec());
                    let out = model
                        .forward(tape, &p, &sg)
                        .map_err(|e| AutodiffError::InvalidArgument { op: "forward", msg: e.to_string() })?;
                    tape.binary_cross_entropy(out.prob, &[if label { 1.0 } else { 0.0 }])
                },
                &tensors(&store),
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "{encoder} seed {seed}: {err:e}");
        }
    }
}

#[test]
fn attention_weights_normalize_per_segment() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = net(Encoder::SelfAttn, 4);
    for trial in 0..100 {
        let sg = common::random_subgraph(&mut rng, 12, BINS);
        let store = params(&model, trial);
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let out = model.forward(&mut tape, &p, &sg).unwrap();
        for layer in &out.diffusion {
            for (w, segs) in [(layer.in_weights, &layer.in_segments), (layer.out_weights, &layer.out_segments)] {
                let mut sums = std::collections::BTreeMap::new();
                for (&s, &x) in segs.iter().zip(tape.value(w).values()) {
                    *sums.entry(s).or_insert(0.0) += x;
                }
                for (s, total) in sums {
                    assert!((total - 1.0f64).abs() < 1e-6, "segment {s}: {total}");
                }
            }
        }
    }
}

#[test]
fn without_attention_weights_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = ModelConfig { hidden_size: 4, edge_attention: false, ..ModelConfig::default() };
    let model = InfNet::new(cfg, ModelDims::for_bins(BINS, 4)).unwrap();
    for trial in 0..50 {
        let sg = common::random_subgraph(&mut rng, 12, BINS);
        let store = params(&model, trial);
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let out = model.forward(&mut tape, &p, &sg).unwrap();
        for layer in &out.diffusion {
            let segs = &layer.in_segments;
            for (i, &x) in tape.value(layer.in_weights).values().iter().enumerate() {
                let count = segs.iter().filter(|&&s| s == segs[i]).count();
                assert_eq!(x, 1.0 / count as f64);
            }
        }
    }
}

#[test]
fn single_in_edge_has_weight_one() {
    let sg = star(0.0);
    let model = net(Encoder::SelfAttn, 3);
    let store = params(&model, 1);
    let mut tape = Tape::new();
    let p = store.bind(&mut tape);
    let out = model.forward(&mut tape, &p, &sg).unwrap();
    let layer = &out.diffusion[1];
    // node 1 receives only from node 0 at step 1
    let i = layer.in_edges.iter().position(|&e| sg.edges[e].dst == 1).unwrap();
    assert_eq!(tape.value(layer.in_weights).values()[i], 1.0);
}

#[test]
fn identical_senders_split_attention_evenly() {
    let mut sg = star(0.0);
    sg.node_features = vec![0.0; sg.node_features.len()];
    sg.edge_features = vec![1.0; sg.edge_features.len()];
    let model = net(Encoder::Mean, 3);
    let store = params(&model, 2);
    let mut tape = Tape::new();
    let p = store.bind(&mut tape);
    let out = model.forward(&mut tape, &p, &sg).unwrap();
    let layer = &out.diffusion[0];
    let w: Vec<f64> = layer
        .in_edges
        .iter()
        .zip(tape.value(layer.in_weights).values())
        .filter(|(&e, _)| sg.edges[e].dst == 0)
        .map(|(_, &w)| w)
        .collect();
    assert_eq!(w.len(), 2);
    assert_relative_eq!(w[0], 0.5, epsilon = 1e-12);
    assert_relative_eq!(w[1], 0.5, epsilon = 1e-12);
}

#[test]
fn future_steps_do_not_change_earlier_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for encoder in Encoder::ALL {
        let model = net(encoder, 4);
        for trial in 0..30 {
            let sg = common::random_subgraph(&mut rng, 12, BINS);
            let store = params(&model, trial);
            let cut = rng.random_range(0..sg.n_steps);
            let mut perturbed = sg.clone();
            for (e, edge) in sg.edges.iter().enumerate() {
                if edge.step > cut {
                    for f in &mut perturbed.edge_features[e * BINS..(e + 1) * BINS] {
                        *f += rng.random_range(1.0..5.0);
                    }
                }
            }
            let states = |g: &QuerySubgraph| {
                let mut tape = Tape::new();
                let p = store.bind(&mut tape);
                let out = model.forward(&mut tape, &p, g).unwrap();
                out.diffusion
                    .iter()
                    .map(|l| {
                        let keep = (cut + 1) * l.active.len() * 4;
                        tape.value(l.states).values()[..keep].iter().map(|x| x.to_bits()).collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>()
            };
            assert_eq!(states(&sg), states(&perturbed), "{encoder} trial {trial}");
        }
    }
}

/// Relabels local nodes by `perm` (old index -> new index).
fn relabel(sg: &QuerySubgraph, perm: &[usize]) -> QuerySubgraph {
    let n = sg.n_nodes();
    let mut out = sg.clone();
    for old in 0..n {
        let new = perm[old];
        out.nodes[new] = sg.nodes[old];
        out.level[new] = sg.level[old];
        out.node_features[new * sg.node_dim..(new + 1) * sg.node_dim].copy_from_slice(sg.node_feature(old));
    }
    out.seeds = sg.seeds.iter().map(|&s| perm[s]).collect();
    out.edges = sg.edges.iter().map(|e| LocalEdge { step: e.step, src: perm[e.src], dst: perm[e.dst] }).collect();
    out.union_edges = sg
        .union_edges
        .iter()
        .map(|&(a, b)| (perm[a].min(perm[b]), perm[a].max(perm[b])))
        .collect();
    out
}

#[test]
fn relabeling_nodes_leaves_prediction_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for encoder in Encoder::ALL {
        let model = net(encoder, 4);
        for trial in 0..30 {
            let sg = common::random_subgraph(&mut rng, 15, BINS);
            let store = params(&model, trial);
            let mut perm: Vec<usize> = (0..sg.n_nodes()).collect();
            for i in (1..perm.len()).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let a = model.predict(&store, &sg).unwrap();
            let b = model.predict(&store, &relabel(&sg, &perm)).unwrap();
            assert!((a - b).abs() <= 1e-10, "{encoder}: {a} vs {b}");
        }
    }
}

#[test]
fn zero_head_predicts_one_half() {
    let model = net(Encoder::SelfAttn, 3);
    let mut store = params(&model, 3);
    for name in ["head.w", "head.b"] {
        let id = store.id(name).unwrap();
        store.get_mut(id).values_mut().iter_mut().for_each(|v| *v = 0.0);
    }
    assert_eq!(model.predict(&store, &common::small_subgraph(3, 6, 2, BINS)).unwrap(), 0.5);
}

#[test]
fn item_mask_ignores_item_bin() {
    let cfg = ModelConfig { hidden_size: 3, mask: FeatureMasks { item: true, ..Default::default() }, ..Default::default() };
    let model = InfNet::new(cfg, ModelDims::for_bins(BINS, 4)).unwrap();
    let store = params(&model, 4);
    let sg = common::small_subgraph(4, 6, 2, BINS);
    let mut other = sg.clone();
    other.item_features = vec![0.0, 0.0, 1.0];
    assert_eq!(model.predict(&store, &sg).unwrap(), model.predict(&store, &other).unwrap());
}

#[test]
fn single_step_none_and_mean_agree() {
    let sg = common::small_subgraph(7, 6, 1, BINS);
    let none = net(Encoder::None, 3);
    let mean = net(Encoder::Mean, 3);
    let store = params(&none, 8);
    assert_eq!(none.predict(&store, &sg).unwrap(), mean.predict(&store, &sg).unwrap());
}

#[test]
fn other_nodes_reach_the_prediction_only_through_attention() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let plain = ModelConfig { hidden_size: 4, edge_attention: false, structural_block: false, ..Default::default() };
    let attn = ModelConfig { edge_attention: true, ..plain };
    let m_plain = InfNet::new(plain, ModelDims::for_bins(BINS, 4)).unwrap();
    let m_attn = InfNet::new(attn, ModelDims::for_bins(BINS, 4)).unwrap();
    let mut changed = 0;
    for trial in 0..30 {
        let sg = common::random_subgraph(&mut rng, 12, BINS);
        let others: Vec<usize> = (sg.seeds.len()..sg.n_nodes()).collect();
        if others.is_empty() {
            continue;
        }
        let mut zeroed = sg.clone();
        for &o in &others {
            zeroed.node_features[o * sg.node_dim..(o + 1) * sg.node_dim].fill(0.0);
        }
        let sp = params(&m_plain, trial);
        assert_eq!(m_plain.predict(&sp, &sg).unwrap(), m_plain.predict(&sp, &zeroed).unwrap());
        let sa = params(&m_attn, trial);
        if m_attn.predict(&sa, &sg).unwrap() != m_attn.predict(&sa, &zeroed).unwrap() {
            changed += 1;
        }
    }
    assert!(changed > 0);
}

// --- hand-rolled scalar oracles -------------------------------------------

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.2 * x
    }
}

fn param(store: &ParamStore<f64>, name: &str) -> Tensor<f64> {
    store.get(store.id(name).unwrap()).clone()
}

/// `x W + b` for a row vector.
fn affine(x: &[f64], w: &Tensor<f64>, b: Option<&Tensor<f64>>) -> Vec<f64> {
    (0..w.cols())
        .map(|j| (0..w.rows()).map(|i| x[i] * w.get(i, j)).sum::<f64>() + b.map_or(0.0, |b| b.get(0, j)))
        .collect()
}

fn dot_rows(x: &[f64], w: &Tensor<f64>, from: usize) -> f64 {
    x.iter().enumerate().map(|(i, &v)| v * w.get(from + i, 0)).sum()
}

/// Target 0 with senders 1 and 2; edges 1->0 and 2->0 at step 0, 0->1 at step 1.
fn star(bump: f32) -> QuerySubgraph {
    QuerySubgraph {
        query: Query { user: 0, item: 0, step: 2, label: true, cold: false },
        nodes: vec![0, 1, 2],
        level: vec![0, 0, 0],
        seeds: vec![0, 1, 2],
        n_steps: 2,
        edges: vec![
            LocalEdge { step: 0, src: 1, dst: 0 },
            LocalEdge { step: 0, src: 2, dst: 0 },
            LocalEdge { step: 1, src: 0, dst: 1 },
        ],
        edge_features: vec![1.0, 0.0, 0.0, 0.0, 2.0, 1.0, 0.0, 1.0 + bump, 0.0],
        union_edges: vec![(0, 1), (0, 2)],
        node_features: vec![2.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        item_features: vec![0.0, 1.0, 0.0],
        node_dim: BINS + 3,
        edge_dim: BINS,
    }
}

#[test]
fn structural_layer_matches_scalar_oracle() {
    let c = 2;
    let cfg = ModelConfig { hidden_size: c, structural_depth: 1, diffusion_depth: 1, ..Default::default() };
    let model = InfNet::new(cfg, ModelDims::for_bins(BINS, 4)).unwrap();
    let store = params(&model, 21);
    let sg = star(0.0);
    let mut tape = Tape::new();
    let p = store.bind(&mut tape);
    let out = model.forward(&mut tape, &p, &sg).unwrap();
    let got = tape.value(out.structural).clone();

    let (ws, bs, wn) = (param(&store, "struct.0.w_self"), param(&store, "struct.0.b_self"), param(&store, "struct.0.w_nbr"));
    let (ad, asrc) = (param(&store, "struct.0.att_dst"), param(&store, "struct.0.att_src"));
    let x: Vec<Vec<f64>> = (0..3).map(|u| sg.node_feature(u).iter().map(|&v| f64::from(v)).collect()).collect();
    let zn: Vec<Vec<f64>> = x.iter().map(|xu| affine(xu, &wn, None)).collect();
    let nbrs = [vec![1, 2], vec![0], vec![0]];
    for u in 0..3 {
        let logits: Vec<f64> = nbrs[u].iter().map(|&v| leaky(dot_rows(&zn[u], &ad, 0) + dot_rows(&zn[v], &asrc, 0))).collect();
        let m = logits.iter().cloned().fold(f64::MIN, f64::max);
        let ex: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = ex.iter().sum();
        let zs = affine(&x[u], &ws, Some(&bs));
        for j in 0..c {
            let agg: f64 = nbrs[u].iter().zip(&ex).map(|(&v, e)| e / z * zn[v][j]).sum();
            assert_relative_eq!(got.get(u, j), leaky(zs[j] + agg), epsilon = 1e-12);
        }
    }
}

#[test]
fn diffusion_layer_matches_scalar_oracle() {
    let c = 2;
    let cfg = ModelConfig {
        hidden_size: c,
        structural_depth: 1,
        diffusion_depth: 1,
        encoder: Encoder::Mean,
        ..Default::default()
    };
    let model = InfNet::new(cfg, ModelDims::for_bins(BINS, 4)).unwrap();
    let store = params(&model, 22);
    let sg = star(0.0);
    let mut tape = Tape::new();
    let p = store.bind(&mut tape);
    let out = model.forward(&mut tape, &p, &sg).unwrap();
    let got = tape.value(out.dynamic).clone();

    let h0: Vec<Vec<f64>> = (0..3)
        .map(|u| {
            let x: Vec<f64> = sg.node_feature(u).iter().map(|&v| f64::from(v)).collect();
            affine(&x, &param(&store, "node.w"), Some(&param(&store, "node.b"))).into_iter().map(leaky).collect()
        })
        .collect();
    let (ew, eb) = (param(&store, "diff.0.edge_w"), param(&store, "diff.0.edge_b"));
    let emb: Vec<Vec<f64>> = (0..3)
        .map(|e| affine(&sg.edge_feature(e).iter().map(|&v| f64::from(v)).collect::<Vec<_>>(), &ew, Some(&eb)))
        .collect();
    let (w_in, w_out) = (param(&store, "diff.0.w_in"), param(&store, "diff.0.w_out"));
    let (pw, pb) = (param(&store, "diff.0.proj_w"), param(&store, "diff.0.proj_b"));

    let mut hp = vec![vec![vec![0.0; c]; 2]; 3];
    for t in 0..2 {
        for u in 0..3 {
            let mut agg = vec![0.0; 2 * c];
            for (side, w, off) in [(true, &w_in, 0), (false, &w_out, c)] {
                let es: Vec<usize> = (0..3)
                    .filter(|&e| sg.edges[e].step == t && if side { sg.edges[e].dst == u } else { sg.edges[e].src == u })
                    .collect();
                let logits: Vec<f64> = es
                    .iter()
                    .map(|&e| {
                        let v = if side { sg.edges[e].src } else { sg.edges[e].dst };
                        leaky(dot_rows(&h0[u], w, 0) + dot_rows(&h0[v], w, c) + dot_rows(&emb[e], w, 2 * c))
                    })
                    .collect();
                let z: f64 = logits.iter().map(|l| l.exp()).sum();
                for (k, &e) in es.iter().enumerate() {
                    for j in 0..c {
                        agg[off + j] += logits[k].exp() / z * emb[e][j];
                    }
                }
            }
            hp[u][t] = affine(&agg, &pw, Some(&pb)).into_iter().map(leaky).collect();
        }
    }
    for u in 0..3 {
        for j in 0..c {
            let s0 = hp[u][0][j];
            let s1 = (hp[u][0][j] + hp[u][1][j]) / 2.0;
            assert_relative_eq!(got.get(u, j), (s0 + s1) / 2.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn isolated_structure_uses_own_features_only() {
    let cfg = ModelConfig { hidden_size: 3, structural_depth: 1, ..Default::default() };
    let model = InfNet::new(cfg, ModelDims::for_bins(BINS, 4)).unwrap();
    let store = params(&model, 30);
    let mut sg = star(0.0);
    sg.union_edges.clear();
    let mut tape = Tape::new();
    let p = store.bind(&mut tape);
    let out = model.forward(&mut tape, &p, &sg).unwrap();
    let x: Vec<f64> = sg.node_feature(0).iter().map(|&v| f64::from(v)).collect();
    let expect: Vec<f64> = affine(&x, &param(&store, "struct.0.w_self"), Some(&param(&store, "struct.0.b_self")))
        .into_iter()
        .map(leaky)
        .collect();
    for (j, e) in expect.iter().enumerate() {
        assert_relative_eq!(tape.value(out.structural).get(0, j), *e, epsilon = 1e-12);
    }
}

#[test]
fn symmetric_pair_gets_identical_structure() {
    let cfg = ModelConfig { hidden_size: 3, ..Default::default() };
    let model = InfNet::new(cfg, ModelDims::for_bins(BINS, 4)).unwrap();
    let store = params(&model, 31);
    let mut sg = star(0.0);
    sg.nodes.truncate(2);
    sg.level.truncate(2);
    sg.seeds = vec![0, 1];
    sg.edges = vec![LocalEdge { step: 0, src: 1, dst: 0 }];
    sg.edge_features.truncate(BINS);
    sg.union_edges = vec![(0, 1)];
    sg.node_features = vec![1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 1.0, 0.0, 2.0, 0.0, 0.0, 1.0];
    let mut tape = Tape::new();
    let p = store.bind(&mut tape);
    let out = model.forward(&mut tape, &p, &sg).unwrap();
    let s = tape.value(out.structural);
    assert_eq!(s.row(0), s.row(1));
}

#[test]
fn gradient_accumulation_matches_batch_mean() {
    let model = net(Encoder::Gru, 3);
    let mut store = params(&model, 40);
    let a = common::small_subgraph(41, 6, 2, BINS);
    let b = common::small_subgraph(42, 6, 2, BINS);
    let (la, _) = model.accumulate_gradient(&mut store, &a, true).unwrap();
    let (lb, _) = model.accumulate_gradient(&mut store, &b, false).unwrap();
    assert!(la > 0.0 && lb > 0.0);
    let total: f64 = store.ids().map(|id| store.grad(id).iter().map(|g| g.abs()).sum::<f64>()).sum();
    assert!(total > 0.0);
    store.zero_grads();
    assert!(store.ids().all(|id| store.grad(id).iter().all(|&g| g == 0.0)));
}
