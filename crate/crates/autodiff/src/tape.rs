use crate::error::{AutodiffError, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Clamp applied to predictions inside [`Tape::binary_cross_entropy`].
pub const BCE_EPS: f64 = 1e-7;

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<F> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, F),
    LeakyRelu(Var, F),
    Sigmoid(Var),
    Tanh(Var),
    Map { input: Var, deriv: Vec<F> },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceRows { input: Var, start: usize },
    Gather { input: Var, index: Vec<usize> },
    SumCols(Var),
    SumAll(Var),
    MeanOverSteps(Vec<Var>),
    SegmentSoftmax { logits: Var, segments: Vec<usize> },
    WeightedSegmentSum { weights: Var, values: Var, segments: Vec<usize> },
    Bce { pred: Var, target: Vec<F> },
}

#[derive(Debug)]
struct Node<F> {
    value: Tensor<F>,
    op: Op<F>,
    requires_grad: bool,
}

/// Ordered record of evaluated operations.
///
/// Every node's inputs precede it, so a reverse sweep is a valid
/// topological order for backpropagation. A tape belongs to a single
/// forward/backward context; build a fresh one per evaluation.
#[derive(Debug, Default)]
pub struct Tape<F> {
    nodes: Vec<Node<F>>,
}

fn mismatch(op: &'static str, lhs: Shape, rhs: Shape) -> AutodiffError {
    AutodiffError::ShapeMismatch { op, lhs, rhs }
}

fn invalid(op: &'static str, msg: impl Into<String>) -> AutodiffError {
    AutodiffError::InvalidArgument { op, msg: msg.into() }
}

impl<F: Scalar> Tape<F> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a tensor that never receives a gradient.
    pub fn constant(&mut self, mut value: Tensor<F>) -> Var {
        value.set_requires_grad(false);
        self.push(value, Op::Leaf, false)
    }

    /// Records a trainable leaf; its gradient buffer is allocated up front.
    pub fn param(&mut self, mut value: Tensor<F>) -> Var {
        value.set_requires_grad(true);
        self.push(value, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> Shape {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Accumulated gradient, if `v` requires one and backward has reached it.
    pub fn grad(&self, v: Var) -> Option<&[F]> {
        self.nodes[v.0].value.grad()
    }

    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.value.zero_grad();
        }
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn vals(&self, v: Var) -> &[F] {
        self.nodes[v.0].value.values()
    }

    fn record(&mut self, shape: Shape, values: Vec<F>, op: Op<F>, inputs: &[Var]) -> Var {
        let rg = self.any_grad(inputs);
        let value = Tensor::from_vec(shape, values).expect("op produced consistent shape");
        self.push(value, op, rg)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let [n, k] = self.shape(a);
        let [k2, m] = self.shape(b);
        if k != k2 {
            return Err(mismatch("matmul", [n, k], [k2, m]));
        }
        let (av, bv) = (self.vals(a), self.vals(b));
        let mut out = vec![F::zero(); n * m];
        for i in 0..n {
            let orow = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let x = av[i * k + p];
                let brow = &bv[p * m..(p + 1) * m];
                for (o, &y) in orow.iter_mut().zip(brow) {
                    *o = *o + x * y;
                }
            }
        }
        Ok(self.record([n, m], out, Op::MatMul(a, b), &[a, b]))
    }

    fn zip_same(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(F, F) -> F) -> Result<Vec<F>> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(mismatch(op, sa, sb));
        }
        Ok(self.vals(a).iter().zip(self.vals(b)).map(|(&x, &y)| f(x, y)).collect())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_same("add", a, b, |x, y| x + y)?;
        Ok(self.record(self.shape(a), out, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_same("sub", a, b, |x, y| x - y)?;
        Ok(self.record(self.shape(a), out, Op::Sub(a, b), &[a, b]))
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_same("mul", a, b, |x, y| x * y)?;
        Ok(self.record(self.shape(a), out, Op::Mul(a, b), &[a, b]))
    }

    /// `a[n, m] + row[1, m]`, broadcasting the row over `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let [n, m] = self.shape(a);
        let sr = self.shape(row);
        if sr != [1, m] {
            return Err(mismatch("add_row", [n, m], sr));
        }
        let rv = self.vals(row);
        let out: Vec<F> = self.vals(a).iter().enumerate().map(|(i, &x)| x + rv[i % m]).collect();
        Ok(self.record([n, m], out, Op::AddRow(a, row), &[a, row]))
    }

    pub fn scale(&mut self, a: Var, s: F) -> Var {
        let out = self.vals(a).iter().map(|&x| x * s).collect();
        self.record(self.shape(a), out, Op::Scale(a, s), &[a])
    }

    pub fn leaky_relu(&mut self, a: Var, alpha: F) -> Var {
        let out = self.vals(a).iter().map(|&x| if x > F::zero() { x } else { alpha * x }).collect();
        self.record(self.shape(a), out, Op::LeakyRelu(a, alpha), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.vals(a).iter().map(|&x| sigmoid(x)).collect();
        self.record(self.shape(a), out, Op::Sigmoid(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.vals(a).iter().map(|&x| x.tanh()).collect();
        self.record(self.shape(a), out, Op::Tanh(a), &[a])
    }

    /// Element-wise `f` with a caller-supplied derivative `df`.
    pub fn map(&mut self, a: Var, f: impl Fn(F) -> F, df: impl Fn(F) -> F) -> Var {
        let xs = self.vals(a);
        let out = xs.iter().map(|&x| f(x)).collect();
        let deriv = xs.iter().map(|&x| df(x)).collect();
        self.record(self.shape(a), out, Op::Map { input: a, deriv }, &[a])
    }

    /// Horizontal concatenation of tensors with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(invalid("concat_cols", "no inputs"));
        };
        let n = self.shape(first)[0];
        let mut total = 0;
        for &p in parts {
            let s = self.shape(p);
            if s[0] != n {
                return Err(mismatch("concat_cols", self.shape(first), s));
            }
            total += s[1];
        }
        let mut out = Vec::with_capacity(n * total);
        for r in 0..n {
            for &p in parts {
                out.extend_from_slice(self.nodes[p.0].value.row(r));
            }
        }
        Ok(self.record([n, total], out, Op::ConcatCols(parts.to_vec()), parts))
    }

    /// Vertical concatenation of tensors with equal column counts.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(invalid("concat_rows", "no inputs"));
        };
        let m = self.shape(first)[1];
        let mut out = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let s = self.shape(p);
            if s[1] != m {
                return Err(mismatch("concat_rows", self.shape(first), s));
            }
            rows += s[0];
            out.extend_from_slice(self.vals(p));
        }
        Ok(self.record([rows, m], out, Op::ConcatRows(parts.to_vec()), parts))
    }

    /// Rows `start..start + len`.
    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let [n, m] = self.shape(a);
        if start + len > n {
            return Err(invalid("slice_rows", format!("rows {start}..{} out of {n}", start + len)));
        }
        let out = self.vals(a)[start * m..(start + len) * m].to_vec();
        Ok(self.record([len, m], out, Op::SliceRows { input: a, start }, &[a]))
    }

    /// Row gather: output row `i` is input row `index[i]`.
    pub fn gather(&mut self, a: Var, index: Vec<usize>) -> Result<Var> {
        let [n, m] = self.shape(a);
        if let Some(&bad) = index.iter().find(|&&i| i >= n) {
            return Err(invalid("gather", format!("row {bad} out of {n}")));
        }
        let src = self.vals(a);
        let mut out = Vec::with_capacity(index.len() * m);
        for &i in &index {
            out.extend_from_slice(&src[i * m..(i + 1) * m]);
        }
        Ok(self.record([index.len(), m], out, Op::Gather { input: a, index }, &[a]))
    }

    /// Row sums: `[n, m] -> [n, 1]`.
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let [n, m] = self.shape(a);
        let out = self.vals(a).chunks(m.max(1)).take(n).map(|row| row.iter().copied().sum()).collect();
        self.record([n, 1], out, Op::SumCols(a), &[a])
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.vals(a).iter().copied().sum();
        self.record([1, 1], vec![s], Op::SumAll(a), &[a])
    }

    /// Element-wise mean of equally shaped step tensors.
    pub fn mean_over_steps(&mut self, steps: &[Var]) -> Result<Var> {
        let Some(&first) = steps.first() else {
            return Err(invalid("mean_over_steps", "no steps"));
        };
        let shape = self.shape(first);
        let mut out = vec![F::zero(); shape[0] * shape[1]];
        for &s in steps {
            if self.shape(s) != shape {
                return Err(mismatch("mean_over_steps", shape, self.shape(s)));
            }
            for (o, &x) in out.iter_mut().zip(self.vals(s)) {
                *o = *o + x;
            }
        }
        let inv = F::one() / F::of(steps.len() as f64);
        out.iter_mut().for_each(|o| *o = *o * inv);
        Ok(self.record(shape, out, Op::MeanOverSteps(steps.to_vec()), steps))
    }

    /// Softmax of `logits[e]` over all entries sharing `segments[e]`.
    ///
    /// `logits` is `[E, 1]`. Segment ids need not be sorted; a segment with a
    /// single entry gets weight exactly one.
    pub fn segment_softmax(&mut self, logits: Var, segments: Vec<usize>, n_segments: usize) -> Result<Var> {
        let [e, one] = self.shape(logits);
        if one != 1 || segments.len() != e {
            return Err(invalid(
                "segment_softmax",
                format!("logits {:?} with {} segment ids", [e, one], segments.len()),
            ));
        }
        if let Some(&bad) = segments.iter().find(|&&s| s >= n_segments) {
            return Err(invalid("segment_softmax", format!("segment {bad} out of {n_segments}")));
        }
        let x = self.vals(logits);
        let mut max = vec![F::neg_infinity(); n_segments];
        for (&s, &v) in segments.iter().zip(x) {
            if v > max[s] {
                max[s] = v;
            }
        }
        let mut out: Vec<F> = segments.iter().zip(x).map(|(&s, &v)| (v - max[s]).exp()).collect();
        let mut denom = vec![F::zero(); n_segments];
        for (&s, &v) in segments.iter().zip(&out) {
            denom[s] = denom[s] + v;
        }
        for (o, &s) in out.iter_mut().zip(&segments) {
            *o = *o / denom[s];
        }
        Ok(self.record([e, 1], out, Op::SegmentSoftmax { logits, segments }, &[logits]))
    }

    /// `out[s] = Σ_{e : segments[e] = s} weights[e] · values[e]`, shape `[n_segments, m]`.
    ///
    /// Segments without entries produce zero rows.
    pub fn weighted_segment_sum(
        &mut self,
        weights: Var,
        values: Var,
        segments: Vec<usize>,
        n_segments: usize,
    ) -> Result<Var> {
        let [e, m] = self.shape(values);
        let sw = self.shape(weights);
        if sw != [e, 1] {
            return Err(mismatch("weighted_segment_sum", sw, [e, m]));
        }
        if segments.len() != e {
            return Err(invalid("weighted_segment_sum", format!("{e} rows with {} segment ids", segments.len())));
        }
        if let Some(&bad) = segments.iter().find(|&&s| s >= n_segments) {
            return Err(invalid("weighted_segment_sum", format!("segment {bad} out of {n_segments}")));
        }
        let (w, x) = (self.vals(weights), self.vals(values));
        let mut out = vec![F::zero(); n_segments * m];
        for (i, &s) in segments.iter().enumerate() {
            let row = &x[i * m..(i + 1) * m];
            let dst = &mut out[s * m..(s + 1) * m];
            for (o, &v) in dst.iter_mut().zip(row) {
                *o = *o + w[i] * v;
            }
        }
        Ok(self.record(
            [n_segments, m],
            out,
            Op::WeightedSegmentSum { weights, values, segments },
            &[weights, values],
        ))
    }

    /// Mean binary cross-entropy of `pred` (`[n, 1]` probabilities) against
    /// `target`. Predictions are clamped to `[BCE_EPS, 1 - BCE_EPS]`.
    pub fn binary_cross_entropy(&mut self, pred: Var, target: &[F]) -> Result<Var> {
        let [n, one] = self.shape(pred);
        if one != 1 || target.len() != n || n == 0 {
            return Err(invalid("binary_cross_entropy", format!("pred {:?} with {} targets", [n, one], target.len())));
        }
        let eps = F::of(BCE_EPS);
        let mut total = F::zero();
        for (&p, &y) in self.vals(pred).iter().zip(target) {
            let p = p.max(eps).min(F::one() - eps);
            total = total - (y * p.ln() + (F::one() - y) * (F::one() - p).ln());
        }
        let loss = total / F::of(n as f64);
        Ok(self.record([1, 1], vec![loss], Op::Bce { pred, target: target.to_vec() }, &[pred]))
    }

    /// Backpropagates from a scalar `loss`, accumulating into the gradient
    /// buffers of every node that requires a gradient. Calling it twice
    /// without [`Tape::zero_grad`] doubles the stored gradients.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let shape = self.shape(loss);
        if shape != [1, 1] {
            return Err(AutodiffError::NonScalarLoss(shape));
        }
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        let mut pass: Vec<Option<Vec<F>>> = Vec::with_capacity(loss.0 + 1);
        pass.resize_with(loss.0 + 1, || None);
        pass[loss.0] = Some(vec![F::one()]);
        for i in (0..=loss.0).rev() {
            let Some(g) = pass[i].take() else { continue };
            self.propagate(i, &g, &mut pass);
            let value = &mut self.nodes[i].value;
            if value.grad().is_none() {
                value.set_requires_grad(true);
            }
            let buf = value.grad_mut().expect("allocated above");
            for (b, &x) in buf.iter_mut().zip(&g) {
                *b = *b + x;
            }
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[F], pass: &mut [Option<Vec<F>>]) {
        let nodes = &self.nodes;
        macro_rules! with_slot {
            ($v:expr, |$buf:ident| $body:block) => {
                if let Some($buf) = grad_slot(pass, nodes, $v) {
                    $body
                }
            };
        }
        let val = |v: Var| nodes[v.0].value.values();
        let out = nodes[i].value.values();
        match &nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let [n, k] = nodes[a.0].value.shape();
                let m = nodes[b.0].value.cols();
                let (av, bv) = (val(*a), val(*b));
                with_slot!(*a, |ga| {
                    for r in 0..n {
                        let grow = &g[r * m..(r + 1) * m];
                        for p in 0..k {
                            let brow = &bv[p * m..(p + 1) * m];
                            let mut s = F::zero();
                            for (&x, &y) in grow.iter().zip(brow) {
                                s = s + x * y;
                            }
                            ga[r * k + p] = ga[r * k + p] + s;
                        }
                    }
                });
                with_slot!(*b, |gb| {
                    for r in 0..n {
                        let grow = &g[r * m..(r + 1) * m];
                        for p in 0..k {
                            let x = av[r * k + p];
                            let dst = &mut gb[p * m..(p + 1) * m];
                            for (d, &y) in dst.iter_mut().zip(grow) {
                                *d = *d + x * y;
                            }
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                with_slot!(*a, |ga| { add_into(ga, g) });
                with_slot!(*b, |gb| { add_into(gb, g) });
            }
            Op::Sub(a, b) => {
                with_slot!(*a, |ga| { add_into(ga, g) });
                with_slot!(*b, |gb| {
                    for (d, &x) in gb.iter_mut().zip(g) {
                        *d = *d - x;
                    }
                });
            }
            Op::Mul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                with_slot!(*a, |ga| {
                    for ((d, &x), &y) in ga.iter_mut().zip(g).zip(bv) {
                        *d = *d + x * y;
                    }
                });
                with_slot!(*b, |gb| {
                    for ((d, &x), &y) in gb.iter_mut().zip(g).zip(av) {
                        *d = *d + x * y;
                    }
                });
            }
            Op::AddRow(a, row) => {
                with_slot!(*a, |ga| { add_into(ga, g) });
                let m = nodes[row.0].value.cols();
                with_slot!(*row, |gr| {
                    for (j, &x) in g.iter().enumerate() {
                        gr[j % m] = gr[j % m] + x;
                    }
                });
            }
            Op::Scale(a, s) => {
                with_slot!(*a, |ga| {
                    for (d, &x) in ga.iter_mut().zip(g) {
                        *d = *d + x * *s;
                    }
                });
            }
            Op::LeakyRelu(a, alpha) => {
                let av = val(*a);
                with_slot!(*a, |ga| {
                    for ((d, &x), &v) in ga.iter_mut().zip(g).zip(av) {
                        *d = *d + if v > F::zero() { x } else { x * *alpha };
                    }
                });
            }
            Op::Sigmoid(a) => {
                with_slot!(*a, |ga| {
                    for ((d, &x), &y) in ga.iter_mut().zip(g).zip(out) {
                        *d = *d + x * y * (F::one() - y);
                    }
                });
            }
            Op::Tanh(a) => {
                with_slot!(*a, |ga| {
                    for ((d, &x), &y) in ga.iter_mut().zip(g).zip(out) {
                        *d = *d + x * (F::one() - y * y);
                    }
                });
            }
            Op::Map { input, deriv } => {
                with_slot!(*input, |ga| {
                    for ((d, &x), &dv) in ga.iter_mut().zip(g).zip(deriv) {
                        *d = *d + x * dv;
                    }
                });
            }
            Op::ConcatCols(parts) => {
                let total = nodes[i].value.cols();
                let n = nodes[i].value.rows();
                let mut offset = 0;
                for &p in parts {
                    let w = nodes[p.0].value.cols();
                    with_slot!(p, |gp| {
                        for r in 0..n {
                            let src = &g[r * total + offset..r * total + offset + w];
                            add_into(&mut gp[r * w..(r + 1) * w], src);
                        }
                    });
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = nodes[p.0].value.len();
                    with_slot!(p, |gp| { add_into(gp, &g[offset..offset + len]) });
                    offset += len;
                }
            }
            Op::SliceRows { input, start } => {
                let m = nodes[input.0].value.cols();
                with_slot!(*input, |ga| { add_into(&mut ga[start * m..start * m + g.len()], g) });
            }
            Op::Gather { input, index } => {
                let m = nodes[input.0].value.cols();
                with_slot!(*input, |ga| {
                    for (r, &src) in index.iter().enumerate() {
                        add_into(&mut ga[src * m..(src + 1) * m], &g[r * m..(r + 1) * m]);
                    }
                });
            }
            Op::SumCols(a) => {
                let m = nodes[a.0].value.cols();
                with_slot!(*a, |ga| {
                    for (j, d) in ga.iter_mut().enumerate() {
                        *d = *d + g[j / m];
                    }
                });
            }
            Op::SumAll(a) => {
                with_slot!(*a, |ga| {
                    for d in ga.iter_mut() {
                        *d = *d + g[0];
                    }
                });
            }
            Op::MeanOverSteps(steps) => {
                let inv = F::one() / F::of(steps.len() as f64);
                for &s in steps {
                    with_slot!(s, |gs| {
                        for (d, &x) in gs.iter_mut().zip(g) {
                            *d = *d + x * inv;
                        }
                    });
                }
            }
            Op::SegmentSoftmax { logits, segments } => {
                let n_seg = segments.iter().copied().max().map_or(0, |m| m + 1);
                let mut dot = vec![F::zero(); n_seg];
                for ((&s, &y), &x) in segments.iter().zip(out).zip(g) {
                    dot[s] = dot[s] + y * x;
                }
                with_slot!(*logits, |gl| {
                    for (e, &s) in segments.iter().enumerate() {
                        gl[e] = gl[e] + out[e] * (g[e] - dot[s]);
                    }
                });
            }
            Op::WeightedSegmentSum { weights, values, segments } => {
                let m = nodes[values.0].value.cols();
                let (wv, xv) = (val(*weights), val(*values));
                with_slot!(*weights, |gw| {
                    for (e, &s) in segments.iter().enumerate() {
                        let mut acc = F::zero();
                        for (&x, &y) in xv[e * m..(e + 1) * m].iter().zip(&g[s * m..(s + 1) * m]) {
                            acc = acc + x * y;
                        }
                        gw[e] = gw[e] + acc;
                    }
                });
                with_slot!(*values, |gx| {
                    for (e, &s) in segments.iter().enumerate() {
                        let w = wv[e];
                        for (d, &y) in gx[e * m..(e + 1) * m].iter_mut().zip(&g[s * m..(s + 1) * m]) {
                            *d = *d + w * y;
                        }
                    }
                });
            }
            Op::Bce { pred, target } => {
                let eps = F::of(BCE_EPS);
                let pv = val(*pred);
                let n = F::of(pv.len() as f64);
                with_slot!(*pred, |gp| {
                    for ((d, &p), &y) in gp.iter_mut().zip(pv).zip(target) {
                        if p < eps || p > F::one() - eps {
                            continue;
                        }
                        *d = *d + g[0] * (p - y) / (p * (F::one() - p)) / n;
                    }
                });
            }
        }
    }
}

fn grad_slot<'a, F: Scalar>(pass: &'a mut [Option<Vec<F>>], nodes: &[Node<F>], v: Var) -> Option<&'a mut Vec<F>> {
    let node = &nodes[v.0];
    if !node.requires_grad {
        return None;
    }
    Some(pass[v.0].get_or_insert_with(|| vec![F::zero(); node.value.len()]))
}

fn add_into<F: Scalar>(dst: &mut [F], src: &[F]) {
    for (d, &x) in dst.iter_mut().zip(src) {
        *d = *d + x;
    }
}

pub(crate) fn sigmoid<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}
