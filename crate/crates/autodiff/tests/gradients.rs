use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sharecast_autodiff::nn::{self, GruParams, SelfAttentionParams};
use sharecast_autodiff::{grad_check, grad_check_many, Result, Shape, Tape, Tensor, Var};

const H: f64 = 1e-5;
const OP_TOL: f64 = 1e-5;
const SEEDS: u64 = 20;

fn rand_tensor(rng: &mut ChaCha8Rng, shape: Shape) -> Tensor<f64> {
    Tensor::from_fn(shape, |_, _| rng.random_range(-1.5..1.5))
}

/// Reduces any output to a scalar through fixed random weights, so that
/// every output element carries a distinct upstream gradient.
fn project(tape: &mut Tape<f64>, y: Var, seed: u64) -> Result<Var> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let w = tape.constant(rand_tensor(&mut rng, tape.shape(y)));
    let p = tape.mul(y, w)?;
    Ok(tape.sum_all(p))
}

fn check_op(name: &str, shapes: &[Shape], f: impl Fn(&mut Tape<f64>, &[Var]) -> Result<Var>) {
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<Tensor<f64>> = shapes.iter().map(|&s| rand_tensor(&mut rng, s)).collect();
        let err = grad_check_many(
            |tape, vars| {
                let y = f(tape, vars)?;
                project(tape, y, seed)
            },
            &inputs,
            H,
        )
        .unwrap();
        assert!(err < OP_TOL, "{name} seed {seed}: relative error {err:e}");
    }
}

#[test]
fn matmul_and_elementwise_ops() {
    check_op("matmul", &[[3, 4], [4, 2]], |t, v| t.matmul(v[0], v[1]));
    check_op("add", &[[3, 2], [3, 2]], |t, v| t.add(v[0], v[1]));
    check_op("sub", &[[3, 2], [3, 2]], |t, v| t.sub(v[0], v[1]));
    check_op("mul", &[[3, 2], [3, 2]], |t, v| t.mul(v[0], v[1]));
    check_op("add_row", &[[4, 3], [1, 3]], |t, v| t.add_row(v[0], v[1]));
    check_op("scale", &[[2, 5]], |t, v| Ok(t.scale(v[0], -0.7)));
    check_op("leaky_relu", &[[4, 4]], |t, v| Ok(t.leaky_relu(v[0], 0.2)));
    check_op("sigmoid", &[[3, 3]], |t, v| Ok(t.sigmoid(v[0])));
    check_op("tanh", &[[3, 3]], |t, v| Ok(t.tanh(v[0])));
}

#[test]
fn shape_ops() {
    check_op("concat_cols", &[[3, 2], [3, 1], [3, 4]], |t, v| t.concat_cols(v));
    check_op("concat_rows", &[[1, 3], [2, 3]], |t, v| t.concat_rows(v));
    check_op("slice_rows", &[[5, 2]], |t, v| t.slice_rows(v[0], 1, 3));
    check_op("gather", &[[4, 3]], |t, v| t.gather(v[0], vec![3, 0, 0, 2, 3]));
    check_op("sum_cols", &[[4, 3]], |t, v| Ok(t.sum_cols(v[0])));
    check_op("sum_all", &[[4, 3]], |t, v| Ok(t.sum_all(v[0])));
    check_op("mean_over_steps", &[[2, 3], [2, 3], [2, 3]], |t, v| t.mean_over_steps(v));
}

#[test]
fn segment_ops() {
    let segs = vec![0, 2, 0, 2, 2, 3];
    check_op("segment_softmax", &[[6, 1]], |t, v| t.segment_softmax(v[0], segs.clone(), 4));
    check_op("weighted_segment_sum", &[[6, 1], [6, 3]], |t, v| {
        t.weighted_segment_sum(v[0], v[1], segs.clone(), 5)
    });
}

#[test]
fn binary_cross_entropy_grad() {
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pred = Tensor::column((0..5).map(|_| rng.random_range(0.05..0.95)).collect());
        let target: Vec<f64> = (0..5).map(|_| f64::from(rng.random_bool(0.5))).collect();
        let err = grad_check(|t, x| t.binary_cross_entropy(x, &target), &pred, H).unwrap();
        assert!(err < OP_TOL, "bce seed {seed}: {err:e}");
    }
}

#[test]
fn gru_cell_grad() {
    let d = 3;
    let mut shapes = vec![[2, d], [2, d]];
    shapes.extend([[d, d], [d, d], [1, d]].iter().cycle().take(9));
    check_op("gru_cell", &shapes, |t, v| {
        let p = GruParams {
            w_z: v[2],
            u_z: v[3],
            b_z: v[4],
            w_r: v[5],
            u_r: v[6],
            b_r: v[7],
            w_h: v[8],
            u_h: v[9],
            b_h: v[10],
        };
        nn::gru_cell(t, v[0], v[1], &p)
    });
}

#[test]
fn masked_self_attention_grad() {
    check_op("masked_self_attention", &[[6, 3], [3, 3], [3, 3], [3, 2], [2, 1]], |t, v| {
        let p = SelfAttentionParams { wq: v[1], wk: v[2], wv: v[3], rel_bias: Some(v[4]) };
        nn::masked_self_attention(t, v[0], 2, &p)
    });
}

#[test]
fn linear_function_is_exact() {
    let x = Tensor::column(vec![0.3, -1.2, 4.0]);
    let err = grad_check(
        |t, x| {
            let s = t.scale(x, 2.5);
            Ok(t.sum_all(s))
        },
        &x,
        H,
    )
    .unwrap();
    assert!(err <= 1e-9, "{err:e}");
}

/// A three-layer network that touches every primitive on the way to a loss.
fn composite(t: &mut Tape<f64>, v: &[Var]) -> Result<Var> {
    let (x, w1, b1, w2, w3, bias, wq, wk, wv) = (v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]);
    let h = nn::linear(t, x, w1, Some(b1))?;
    let h = t.leaky_relu(h, 0.2);
    let h2 = t.matmul(h, w2)?;
    let h2 = t.tanh(h2);
    let att = nn::masked_self_attention(t, h2, 2, &SelfAttentionParams { wq, wk, wv, rel_bias: Some(bias) })?;
    let both = t.concat_cols(&[h2, att])?;
    let logits = t.matmul(both, w3)?;
    let segs = vec![0, 1, 0, 1, 0, 1];
    let alpha = t.segment_softmax(logits, segs.clone(), 2)?;
    let pooled = t.weighted_segment_sum(alpha, h2, segs, 2)?;
    let first = t.slice_rows(pooled, 0, 1)?;
    let second = t.slice_rows(pooled, 1, 1)?;
    let avg = t.mean_over_steps(&[first, second])?;
    let stacked = t.concat_rows(&[avg, first])?;
    let score = t.sum_cols(stacked);
    let p = t.sigmoid(score);
    t.binary_cross_entropy(p, &[1.0, 0.0])
}

#[test]
fn random_composite_of_all_ops() {
    let shapes: [Shape; 9] = [[6, 4], [4, 3], [1, 3], [3, 3], [6, 1], [3, 1], [3, 3], [3, 3], [3, 3]];
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let inputs: Vec<Tensor<f64>> = shapes.iter().map(|&s| rand_tensor(&mut rng, s)).collect();
        let err = grad_check_many(composite, &inputs, H).unwrap();
        assert!(err < OP_TOL, "composite seed {seed}: {err:e}");
    }
}

#[test]
fn corrupted_backward_rule_is_detected() {
    let x = Tensor::column(vec![0.4, -0.9, 1.3]);
    // Claims d/dx sin(x) = sin(x).
    let err = grad_check(
        |t, x| {
            let y = t.map(x, f64::sin, f64::sin);
            Ok(t.sum_all(y))
        },
        &x,
        H,
    )
    .unwrap();
    assert!(err > 1e-2, "{err:e}");
}

#[test]
fn forward_is_bit_deterministic() {
    let run = || {
        let shapes: [Shape; 9] = [[6, 4], [4, 3], [1, 3], [3, 3], [6, 1], [3, 1], [3, 3], [3, 3], [3, 3]];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut t = Tape::new();
        let vars: Vec<Var> = shapes.iter().map(|&s| t.param(rand_tensor(&mut rng, s))).collect();
        let loss = composite(&mut t, &vars).unwrap();
        t.backward(loss).unwrap();
        (t.value(loss).item().to_bits(), t.grad(vars[1]).unwrap().to_vec())
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn segment_softmax_normalizes(
        logits in prop::collection::vec(-30.0f64..30.0, 1..40),
        seg_seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seg_seed);
        let n_seg = 5;
        let segs: Vec<usize> = logits.iter().map(|_| rng.random_range(0..n_seg)).collect();
        let mut t = Tape::<f64>::new();
        let x = t.constant(Tensor::column(logits.clone()));
        let y = t.segment_softmax(x, segs.clone(), n_seg).unwrap();
        let mut sums = vec![0.0; n_seg];
        for (&s, &w) in segs.iter().zip(t.value(y).values()) {
            prop_assert!(w > 0.0);
            sums[s] += w;
        }
        for s in 0..n_seg {
            if segs.contains(&s) {
                prop_assert!((sums[s] - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn attention_ignores_later_steps(perturb in prop::collection::vec(-5.0f64..5.0, 6), step in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base = rand_tensor(&mut rng, [8, 3]);
        let wq = rand_tensor(&mut rng, [3, 3]);
        let wk = rand_tensor(&mut rng, [3, 3]);
        let wv = rand_tensor(&mut rng, [3, 3]);
        let bias = rand_tensor(&mut rng, [4, 1]);
        let eval = |input: Tensor<f64>| {
            let mut t = Tape::new();
            let p = SelfAttentionParams {
                wq: t.constant(wq.clone()),
                wk: t.constant(wk.clone()),
                wv: t.constant(wv.clone()),
                rel_bias: Some(t.constant(bias.clone())),
            };
            let x = t.constant(input);
            let out = nn::masked_self_attention(&mut t, x, 2, &p).unwrap();
            t.value(out).values().to_vec()
        };
        let mut changed = base.clone();
        // rows are step-major with two sequences; perturb every row after `step`
        for r in (step + 1) * 2..8 {
            for c in 0..3 {
                changed.values_mut()[r * 3 + c] += perturb[(r + c) % 6];
            }
        }
        let a = eval(base);
        let b = eval(changed);
        let keep = (step + 1) * 2 * 3;
        for i in 0..keep {
            prop_assert_eq!(a[i].to_bits(), b[i].to_bits());
        }
    }
}
