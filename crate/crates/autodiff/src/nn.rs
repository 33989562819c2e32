//! Layers composed from tape primitives.
//!
//! Everything here is differentiable through the primitives it is built
//! from, so none of it carries a hand-written backward rule.

use rand::Rng;

use crate::error::{AutodiffError, Result};
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::tensor::{Shape, Tensor};

/// Negative-side slope used by every LeakyReLU in the model.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Glorot/Xavier uniform initialization, `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_uniform<F: Scalar, R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Tensor<F> {
    let limit = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
    Tensor::from_fn(shape, |_, _| F::of(rng.random_range(-limit..=limit)))
}

/// `x W (+ b)` with `b` a `[1, out]` row.
pub fn linear<F: Scalar>(tape: &mut Tape<F>, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
    let y = tape.matmul(x, w)?;
    match b {
        Some(b) => tape.add_row(y, b),
        None => Ok(y),
    }
}

/// Gate weights of a GRU cell; `w_*` act on the input, `u_*` on the state.
#[derive(Debug, Clone, Copy)]
pub struct GruParams {
    pub w_z: Var,
    pub u_z: Var,
    pub b_z: Var,
    pub w_r: Var,
    pub u_r: Var,
    pub b_r: Var,
    pub w_h: Var,
    pub u_h: Var,
    pub b_h: Var,
}

/// One GRU step over a batch of rows:
///
/// ```text
/// z  = σ(x W_z + h U_z + b_z)
/// r  = σ(x W_r + h U_r + b_r)
/// h~ = tanh(x W_h + (r ⊙ h) U_h + b_h)
/// h' = h + z ⊙ (h~ − h)
/// ```
pub fn gru_cell<F: Scalar>(tape: &mut Tape<F>, x: Var, h: Var, p: &GruParams) -> Result<Var> {
    let gate = |tape: &mut Tape<F>, w: Var, u: Var, b: Var, state: Var| -> Result<Var> {
        let xi = tape.matmul(x, w)?;
        let hi = tape.matmul(state, u)?;
        let s = tape.add(xi, hi)?;
        tape.add_row(s, b)
    };
    let z = gate(tape, p.w_z, p.u_z, p.b_z, h)?;
    let z = tape.sigmoid(z);
    let r = gate(tape, p.w_r, p.u_r, p.b_r, h)?;
    let r = tape.sigmoid(r);
    let rh = tape.mul(r, h)?;
    let cand = gate(tape, p.w_h, p.u_h, p.b_h, rh)?;
    let cand = tape.tanh(cand);
    let delta = tape.sub(cand, h)?;
    let step = tape.mul(z, delta)?;
    tape.add(h, step)
}

/// Projections of single-head causal self-attention.
///
/// `rel_bias`, when present, is a `[max_distance, 1]` table of additive
/// logit biases indexed by `t - i` (clamped to the last entry).
#[derive(Debug, Clone, Copy)]
pub struct SelfAttentionParams {
    pub wq: Var,
    pub wk: Var,
    pub wv: Var,
    pub rel_bias: Option<Var>,
}

/// Causal scaled dot-product attention over `n_seq` interleaved sequences.
///
/// Rows of `seq` are step-major: row `t * n_seq + s` is step `t` of
/// sequence `s`. Output row `(t, s)` attends to steps `0..=t` of sequence
/// `s` only, so it is unaffected by anything at later steps.
pub fn masked_self_attention<F: Scalar>(
    tape: &mut Tape<F>,
    seq: Var,
    n_seq: usize,
    p: &SelfAttentionParams,
) -> Result<Var> {
    let rows = tape.shape(seq)[0];
    if n_seq == 0 || !rows.is_multiple_of(n_seq) {
        return Err(AutodiffError::InvalidArgument {
            op: "masked_self_attention",
            msg: format!("{rows} rows do not split into sequences of {n_seq}"),
        });
    }
    let steps = rows / n_seq;
    let q = tape.matmul(seq, p.wq)?;
    let k = tape.matmul(seq, p.wk)?;
    let v = tape.matmul(seq, p.wv)?;
    let dim = tape.shape(q)[1];

    let pairs = n_seq * steps * (steps + 1) / 2;
    let mut q_rows = Vec::with_capacity(pairs);
    let mut k_rows = Vec::with_capacity(pairs);
    let mut dist = Vec::with_capacity(pairs);
    for t in 0..steps {
        for s in 0..n_seq {
            for i in 0..=t {
                q_rows.push(t * n_seq + s);
                k_rows.push(i * n_seq + s);
                dist.push(t - i);
            }
        }
    }
    let segments = q_rows.clone();
    let qg = tape.gather(q, q_rows)?;
    let kg = tape.gather(k, k_rows.clone())?;
    let prod = tape.mul(qg, kg)?;
    let dots = tape.sum_cols(prod);
    let mut logits = tape.scale(dots, F::one() / F::of(dim as f64).sqrt());
    if let Some(table) = p.rel_bias {
        let max = tape.shape(table)[0];
        let idx = dist.into_iter().map(|d| d.min(max - 1)).collect();
        let bias = tape.gather(table, idx)?;
        logits = tape.add(logits, bias)?;
    }
    let weights = tape.segment_softmax(logits, segments.clone(), rows)?;
    let vg = tape.gather(v, k_rows)?;
    tape.weighted_segment_sum(weights, vg, segments, rows)
}

/// `[E, 1]` weights equal to `1 / |segment|` for each entry.
pub fn uniform_segment_weights<F: Scalar>(segments: &[usize], n_segments: usize) -> Tensor<F> {
    let mut count = vec![0usize; n_segments];
    for &s in segments {
        count[s] += 1;
    }
    Tensor::column(segments.iter().map(|&s| F::one() / F::of(count[s] as f64)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn zeros_gru(tape: &mut Tape<f64>, d: usize) -> GruParams {
        let mut z = |s: Shape| tape.param(Tensor::zeros(s));
        GruParams {
            w_z: z([d, d]),
            u_z: z([d, d]),
            b_z: z([1, d]),
            w_r: z([d, d]),
            u_r: z([d, d]),
            b_r: z([1, d]),
            w_h: z([d, d]),
            u_h: z([d, d]),
            b_h: z([1, d]),
        }
    }

    #[test]
    fn zero_gru_halves_state() {
        let mut tape = Tape::new();
        let p = zeros_gru(&mut tape, 3);
        let x = tape.constant(Tensor::from_vec([1, 3], vec![5.0, -1.0, 2.0]).unwrap());
        let h = tape.constant(Tensor::from_vec([1, 3], vec![0.8, -0.4, 2.0]).unwrap());
        let out = gru_cell(&mut tape, x, h, &p).unwrap();
        for (&o, &e) in tape.value(out).values().iter().zip(&[0.4, -0.2, 1.0]) {
            assert_abs_diff_eq!(o, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn uniform_weights_per_segment() {
        let w = uniform_segment_weights::<f64>(&[0, 0, 2, 0], 3);
        assert_eq!(w.values(), &[1.0 / 3.0, 1.0 / 3.0, 1.0, 1.0 / 3.0]);
    }

    #[test]
    fn attention_first_step_copies_value_projection() {
        let mut tape = Tape::<f64>::new();
        let eye = Tensor::from_fn([2, 2], |r, c| if r == c { 1.0 } else { 0.0 });
        let p = SelfAttentionParams {
            wq: tape.param(eye.clone()),
            wk: tape.param(eye.clone()),
            wv: tape.param(eye),
            rel_bias: None,
        };
        let seq = tape.constant(Tensor::from_vec([4, 2], vec![1.0, 2.0, 3.0, 4.0, 9.0, 9.0, 7.0, 7.0]).unwrap());
        let out = masked_self_attention(&mut tape, seq, 2, &p).unwrap();
        assert_eq!(&tape.value(out).values()[..4], &[1.0, 2.0, 3.0, 4.0]);
    }
}
