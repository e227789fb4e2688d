use super::kernels;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddBias(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Square(Var),
    Clamp {
        x: Var,
        lo: f64,
        hi: f64,
    },
    Sum(Var),
    SliceRows {
        x: Var,
        start: usize,
    },
    Softmax {
        x: Var,
        axis: usize,
    },
    LogSoftmax {
        x: Var,
        axis: usize,
    },
    NllMean {
        logp: Var,
        labels: Vec<usize>,
    },
    Conv {
        x: Var,
        w: Var,
        dilation: usize,
    },
    Attention {
        q: Var,
        k: Var,
        v: Var,
        window: usize,
        scale: f64,
        // softmax weights per query, concatenated in query order
        probs: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Ordered record of executed operations.
///
/// Values are computed eagerly when an op is recorded, so node ids are a
/// topological order by construction: every input precedes its consumer.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Graph::backward`], indexed by node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }

    pub fn take(&mut self, var: Var) -> Option<Vec<f64>> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}

fn dim_err(msg: String) -> Error {
    Error::Dimension(msg)
}

/// `(outer, axis_len, inner)` strides for reducing over `axis`.
fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(format!(
                "op {} produced a non-finite value",
                op_name(&op)
            )));
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Result<Var> {
        self.push(value, Op::Leaf, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.push(value, Op::Leaf, false)
    }

    /// Copy of `x` cut off from the gradient tape.
    pub fn detach(&mut self, x: Var) -> Result<Var> {
        let value = self.value(x).clone();
        self.constant(value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.value(a).dims2()?;
        let (k2, n) = self.value(b).dims2()?;
        if k != k2 {
            return Err(dim_err(format!(
                "matmul inner dimensions disagree: {m}x{k} · {k2}x{n}"
            )));
        }
        let av = self.value(a).data();
        let bv = self.value(b).data();
        let mut out = vec![0.0; m * n];
        for (i, row) in out.chunks_mut(n).enumerate() {
            kernels::matmul_row(&av[i * k..(i + 1) * k], bv, n, row);
        }
        let rg = self.rg(&[a, b]);
        self.push(Tensor::matrix(m, n, out)?, Op::MatMul(a, b), rg)
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(dim_err(format!(
                "{what}: shapes {:?} and {:?} differ",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let mut out = self.value(a).clone();
        kernels::add_in_place(out.data_mut(), self.value(b).data());
        let rg = self.rg(&[a, b]);
        self.push(out, Op::Add(a, b), rg)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        let mut out = self.value(a).clone();
        for (o, &v) in out.data_mut().iter_mut().zip(self.value(b).data()) {
            *o -= v;
        }
        let rg = self.rg(&[a, b]);
        self.push(out, Op::Sub(a, b), rg)
    }

    /// Adds a length-`n` bias to every row of an `m × n` matrix.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (_, n) = self.value(x).dims2()?;
        if self.value(bias).numel() != n {
            return Err(dim_err(format!(
                "bias of length {} does not match {n} columns",
                self.value(bias).numel()
            )));
        }
        let mut out = self.value(x).clone();
        let b = self.value(bias).data();
        for row in out.data_mut().chunks_mut(n) {
            kernels::add_in_place(row, b);
        }
        let rg = self.rg(&[x, bias]);
        self.push(out, Op::AddBias(x, bias), rg)
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var> {
        let mut out = self.value(x).clone();
        out.data_mut().iter_mut().for_each(|v| *v *= factor);
        let rg = self.rg(&[x]);
        self.push(out, Op::Scale(x, factor), rg)
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let mut out = self.value(x).clone();
        kernels::relu_in_place(out.data_mut());
        let rg = self.rg(&[x]);
        self.push(out, Op::Relu(x), rg)
    }

    pub fn square(&mut self, x: Var) -> Result<Var> {
        let mut out = self.value(x).clone();
        out.data_mut().iter_mut().for_each(|v| *v *= *v);
        let rg = self.rg(&[x]);
        self.push(out, Op::Square(x), rg)
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Result<Var> {
        if lo > hi {
            return Err(Error::Parameter(format!("clamp bounds {lo} > {hi}")));
        }
        let mut out = self.value(x).clone();
        out.data_mut().iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        let rg = self.rg(&[x]);
        self.push(out, Op::Clamp { x, lo, hi }, rg)
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s: f64 = self.value(x).data().iter().sum();
        let rg = self.rg(&[x]);
        self.push(Tensor::scalar(s), Op::Sum(x), rg)
    }

    /// Rows `[start, end)` of a 2-D tensor.
    pub fn slice_rows(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let (m, n) = self.value(x).dims2()?;
        if start >= end || end > m {
            return Err(dim_err(format!(
                "row slice {start}..{end} invalid for {m} rows"
            )));
        }
        let data = self.value(x).data()[start * n..end * n].to_vec();
        let rg = self.rg(&[x]);
        self.push(
            Tensor::matrix(end - start, n, data)?,
            Op::SliceRows { x, start },
            rg,
        )
    }

    fn check_axis(&self, x: Var, axis: usize) -> Result<()> {
        let rank = self.value(x).shape().len();
        if axis >= rank {
            return Err(dim_err(format!("axis {axis} out of range for rank {rank}")));
        }
        Ok(())
    }

    fn map_axis(&self, x: Var, axis: usize, f: fn(&[f64], &mut [f64])) -> Tensor {
        let src = self.value(x);
        let (outer, len, inner) = axis_split(src.shape(), axis);
        let mut out = src.clone();
        let mut line = vec![0.0; len];
        let mut res = vec![0.0; len];
        for o in 0..outer {
            for i in 0..inner {
                for (a, l) in line.iter_mut().enumerate() {
                    *l = src.data()[(o * len + a) * inner + i];
                }
                f(&line, &mut res);
                for (a, &r) in res.iter().enumerate() {
                    out.data_mut()[(o * len + a) * inner + i] = r;
                }
            }
        }
        out
    }

    /// Max-stabilised softmax along `axis`.
    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        self.check_axis(x, axis)?;
        let out = self.map_axis(x, axis, kernels::softmax_row);
        let rg = self.rg(&[x]);
        self.push(out, Op::Softmax { x, axis }, rg)
    }

    pub fn log_softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        self.check_axis(x, axis)?;
        let out = self.map_axis(x, axis, kernels::log_softmax_row);
        let rg = self.rg(&[x]);
        self.push(out, Op::LogSoftmax { x, axis }, rg)
    }

    /// `-(1/T) Σ_t logp[t, labels[t]]` for a `T × C` log-probability matrix.
    pub fn nll_mean(&mut self, logp: Var, labels: &[usize]) -> Result<Var> {
        let (t, c) = self.value(logp).dims2()?;
        if labels.len() != t {
            return Err(dim_err(format!(
                "{} labels for {t} frames",
                labels.len()
            )));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= c) {
            return Err(Error::Data(format!(
                "label {y} at frame {i} is outside [0, {c})"
            )));
        }
        let lp = self.value(logp).data();
        let mut s = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            s += lp[i * c + y];
        }
        let loss = -s / t as f64;
        let rg = self.rg(&[logp]);
        self.push(
            Tensor::scalar(loss),
            Op::NllMean {
                logp,
                labels: labels.to_vec(),
            },
            rg,
        )
    }

    /// Causal dilated 1-D convolution over time.
    ///
    /// `x` is `T × d_in`, `w` is `k × d_in × d_out`. The input is implicitly
    /// left-padded with `(k - 1) * dilation` zero frames, so the output has
    /// `T` rows and frame `t` only reads frames `≤ t`.
    pub fn causal_conv1d(&mut self, x: Var, w: Var, dilation: usize) -> Result<Var> {
        if dilation < 1 {
            return Err(Error::Parameter("dilation must be at least 1".into()));
        }
        let (t_len, d_in) = self.value(x).dims2()?;
        let (k, d_in2, d_out) = match self.value(w).shape() {
            &[k, a, b] => (k, a, b),
            other => {
                return Err(dim_err(format!(
                    "conv kernel must be k×d_in×d_out, got {other:?}"
                )))
            }
        };
        if d_in != d_in2 {
            return Err(dim_err(format!(
                "conv kernel expects {d_in2} input channels, input has {d_in}"
            )));
        }
        let xv = self.value(x).data();
        let wv = self.value(w).data();
        let mut out = vec![0.0; t_len * d_out];
        for (t, row) in out.chunks_mut(d_out).enumerate() {
            kernels::conv_frame(
                t,
                k,
                dilation,
                d_in,
                d_out,
                wv,
                |s| &xv[s * d_in..(s + 1) * d_in],
                row,
            );
        }
        let rg = self.rg(&[x, w]);
        self.push(
            Tensor::matrix(t_len, d_out, out)?,
            Op::Conv { x, w, dilation },
            rg,
        )
    }

    /// Single-head hierarchical causal window attention.
    ///
    /// Query `t` attends to the keys given by [`kernels::key_range`]:
    /// the preceding window of length `window` plus its own window up to `t`.
    /// `q`/`k` are `T × d_k`, `v` is `T × d_v`; scores are scaled by
    /// `1/sqrt(d_k)`.
    pub fn window_attention(&mut self, q: Var, k: Var, v: Var, window: usize) -> Result<Var> {
        if window < 1 {
            return Err(Error::Parameter("attention window must be at least 1".into()));
        }
        let (tq, dk) = self.value(q).dims2()?;
        let (tk, dk2) = self.value(k).dims2()?;
        let (tv, dv) = self.value(v).dims2()?;
        if dk != dk2 || tq != tk || tk != tv {
            return Err(dim_err(format!(
                "attention shapes disagree: q {tq}x{dk}, k {tk}x{dk2}, v {tv}x{dv}"
            )));
        }
        let scale = 1.0 / (dk as f64).sqrt();
        let qv = self.value(q).data();
        let kv = self.value(k).data();
        let vv = self.value(v).data();
        let mut out = vec![0.0; tq * dv];
        let mut probs = Vec::new();
        let mut p_row = Vec::new();
        for (t, row) in out.chunks_mut(dv).enumerate() {
            kernels::attend_row(
                &qv[t * dk..(t + 1) * dk],
                kernels::key_range(t, window),
                scale,
                |j| &kv[j * dk..(j + 1) * dk],
                |j| &vv[j * dv..(j + 1) * dv],
                &mut p_row,
                row,
            );
            probs.extend_from_slice(&p_row);
        }
        let rg = self.rg(&[q, k, v]);
        self.push(
            Tensor::matrix(tq, dv, out)?,
            Op::Attention {
                q,
                k,
                v,
                window,
                scale,
                probs,
            },
            rg,
        )
    }

    /// Reverse pass from a scalar `root`.
    ///
    /// Nodes are visited once each, in reverse recording order.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        if self.value(root).numel() != 1 {
            return Err(dim_err(format!(
                "backward needs a scalar root, got shape {:?}",
                self.value(root).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(vec![1.0]);
        for idx in (0..=root.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                grads[idx] = None;
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(idx, &g, &mut grads);
            // only leaf gradients are kept
            if matches!(node.op, Op::Leaf) {
                grads[idx] = Some(g);
            }
        }
        for (idx, g) in grads.iter().enumerate() {
            if let Some(g) = g {
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!(
                        "gradient of node {idx} ({}) is not finite",
                        op_name(&self.nodes[idx].op)
                    )));
                }
            }
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], var: Var, f: impl FnOnce(&mut [f64])) {
        if !self.nodes[var.0].requires_grad {
            return;
        }
        let slot = grads[var.0].get_or_insert_with(|| vec![0.0; self.nodes[var.0].value.numel()]);
        f(slot);
    }

    fn propagate(&self, idx: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.value(*a).dims2().expect("2-D");
                let (_, n) = self.value(*b).dims2().expect("2-D");
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                self.accumulate(grads, *a, |ga| {
                    for i in 0..m {
                        let g_row = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            ga[i * k + p] += kernels::dot(g_row, &bv[p * n..(p + 1) * n]);
                        }
                    }
                });
                self.accumulate(grads, *b, |gb| {
                    for i in 0..m {
                        let g_row = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let a_ip = av[i * k + p];
                            for (o, &gv) in gb[p * n..(p + 1) * n].iter_mut().zip(g_row) {
                                *o += a_ip * gv;
                            }
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, |ga| kernels::add_in_place(ga, g));
                self.accumulate(grads, *b, |gb| kernels::add_in_place(gb, g));
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, |ga| kernels::add_in_place(ga, g));
                self.accumulate(grads, *b, |gb| {
                    for (o, &v) in gb.iter_mut().zip(g) {
                        *o -= v;
                    }
                });
            }
            Op::AddBias(x, bias) => {
                let n = self.value(*bias).numel();
                self.accumulate(grads, *x, |gx| kernels::add_in_place(gx, g));
                self.accumulate(grads, *bias, |gb| {
                    for row in g.chunks(n) {
                        kernels::add_in_place(gb, row);
                    }
                });
            }
            Op::Scale(x, f) => {
                self.accumulate(grads, *x, |gx| {
                    for (o, &v) in gx.iter_mut().zip(g) {
                        *o += f * v;
                    }
                });
            }
            Op::Relu(x) => {
                let y = node.value.data();
                self.accumulate(grads, *x, |gx| {
                    for ((o, &v), &yv) in gx.iter_mut().zip(g).zip(y) {
                        if yv > 0.0 {
                            *o += v;
                        }
                    }
                });
            }
            Op::Square(x) => {
                let xv = self.value(*x).data();
                self.accumulate(grads, *x, |gx| {
                    for ((o, &v), &xi) in gx.iter_mut().zip(g).zip(xv) {
                        *o += 2.0 * xi * v;
                    }
                });
            }
            Op::Clamp { x, lo, hi } => {
                let xv = self.value(*x).data();
                self.accumulate(grads, *x, |gx| {
                    for ((o, &v), &xi) in gx.iter_mut().zip(g).zip(xv) {
                        if xi >= *lo && xi <= *hi {
                            *o += v;
                        }
                    }
                });
            }
            Op::Sum(x) => {
                self.accumulate(grads, *x, |gx| gx.iter_mut().for_each(|o| *o += g[0]));
            }
            Op::SliceRows { x, start } => {
                let (_, n) = self.value(*x).dims2().expect("2-D");
                self.accumulate(grads, *x, |gx| {
                    kernels::add_in_place(&mut gx[start * n..start * n + g.len()], g)
                });
            }
            Op::Softmax { x, axis } => {
                let y = node.value.data();
                let (outer, len, inner) = axis_split(node.value.shape(), *axis);
                self.accumulate(grads, *x, |gx| {
                    for o in 0..outer {
                        for i in 0..inner {
                            let at = |a: usize| (o * len + a) * inner + i;
                            let dot: f64 = (0..len).map(|a| g[at(a)] * y[at(a)]).sum();
                            for a in 0..len {
                                gx[at(a)] += y[at(a)] * (g[at(a)] - dot);
                            }
                        }
                    }
                });
            }
            Op::LogSoftmax { x, axis } => {
                let y = node.value.data();
                let (outer, len, inner) = axis_split(node.value.shape(), *axis);
                self.accumulate(grads, *x, |gx| {
                    for o in 0..outer {
                        for i in 0..inner {
                            let at = |a: usize| (o * len + a) * inner + i;
                            let total: f64 = (0..len).map(|a| g[at(a)]).sum();
                            for a in 0..len {
                                gx[at(a)] += g[at(a)] - y[at(a)].exp() * total;
                            }
                        }
                    }
                });
            }
            Op::NllMean { logp, labels } => {
                let (t, c) = self.value(*logp).dims2().expect("2-D");
                let scale = g[0] / t as f64;
                self.accumulate(grads, *logp, |gl| {
                    for (i, &y) in labels.iter().enumerate() {
                        gl[i * c + y] -= scale;
                    }
                });
            }
            Op::Conv { x, w, dilation } => {
                let (t_len, d_in) = self.value(*x).dims2().expect("2-D");
                let (k, d_out) = {
                    let s = self.value(*w).shape();
                    (s[0], s[2])
                };
                let xv = self.value(*x).data();
                let wv = self.value(*w).data();
                self.accumulate(grads, *x, |gx| {
                    for t in 0..t_len {
                        let g_row = &g[t * d_out..(t + 1) * d_out];
                        for j in 0..k {
                            let off = (k - 1 - j) * dilation;
                            if off > t {
                                continue;
                            }
                            let s = t - off;
                            for i in 0..d_in {
                                let w_row = &wv[(j * d_in + i) * d_out..(j * d_in + i + 1) * d_out];
                                gx[s * d_in + i] += kernels::dot(g_row, w_row);
                            }
                        }
                    }
                });
                self.accumulate(grads, *w, |gw| {
                    for t in 0..t_len {
                        let g_row = &g[t * d_out..(t + 1) * d_out];
                        for j in 0..k {
                            let off = (k - 1 - j) * dilation;
                            if off > t {
                                continue;
                            }
                            let s = t - off;
                            for i in 0..d_in {
                                let xi = xv[s * d_in + i];
                                let w_row =
                                    &mut gw[(j * d_in + i) * d_out..(j * d_in + i + 1) * d_out];
                                for (o, &gv) in w_row.iter_mut().zip(g_row) {
                                    *o += xi * gv;
                                }
                            }
                        }
                    }
                });
            }
            Op::Attention {
                q,
                k,
                v,
                window,
                scale,
                probs,
            } => {
                let (t_len, dk) = self.value(*q).dims2().expect("2-D");
                let (_, dv) = self.value(*v).dims2().expect("2-D");
                let qv = self.value(*q).data();
                let kv = self.value(*k).data();
                let vv = self.value(*v).data();
                let mut dq = vec![0.0; t_len * dk];
                let mut dk_buf = vec![0.0; t_len * dk];
                let mut dv_buf = vec![0.0; t_len * dv];
                let mut offset = 0;
                let mut ds = Vec::new();
                for t in 0..t_len {
                    let range = kernels::key_range(t, *window);
                    let n_keys = range.len();
                    let p = &probs[offset..offset + n_keys];
                    offset += n_keys;
                    let g_row = &g[t * dv..(t + 1) * dv];
                    ds.clear();
                    let mut weighted = 0.0;
                    for (jj, j) in range.clone().enumerate() {
                        let dp = kernels::dot(g_row, &vv[j * dv..(j + 1) * dv]);
                        ds.push(dp);
                        weighted += p[jj] * dp;
                        for (o, &gv) in dv_buf[j * dv..(j + 1) * dv].iter_mut().zip(g_row) {
                            *o += p[jj] * gv;
                        }
                    }
                    let q_row = &qv[t * dk..(t + 1) * dk];
                    for (jj, j) in range.enumerate() {
                        let s = p[jj] * (ds[jj] - weighted) * scale;
                        let k_row = &kv[j * dk..(j + 1) * dk];
                        for (o, &kvv) in dq[t * dk..(t + 1) * dk].iter_mut().zip(k_row) {
                            *o += s * kvv;
                        }
                        for (o, &qvv) in dk_buf[j * dk..(j + 1) * dk].iter_mut().zip(q_row) {
                            *o += s * qvv;
                        }
                    }
                }
                self.accumulate(grads, *q, |gq| kernels::add_in_place(gq, &dq));
                self.accumulate(grads, *k, |gk| kernels::add_in_place(gk, &dk_buf));
                self.accumulate(grads, *v, |gv| kernels::add_in_place(gv, &dv_buf));
            }
        }
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::MatMul(..) => "matmul",
        Op::Add(..) => "add",
        Op::Sub(..) => "sub",
        Op::AddBias(..) => "add_bias",
        Op::Scale(..) => "scale",
        Op::Relu(_) => "relu",
        Op::Square(_) => "square",
        Op::Clamp { .. } => "clamp",
        Op::Sum(_) => "sum",
        Op::SliceRows { .. } => "slice_rows",
        Op::Softmax { .. } => "softmax",
        Op::LogSoftmax { .. } => "log_softmax",
        Op::NllMean { .. } => "nll_mean",
        Op::Conv { .. } => "causal_conv1d",
        Op::Attention { .. } => "window_attention",
    }
}
