//! Reverse-mode differentiation over a linear tape of coarse kernels.
//!
//! Every op records its inputs plus whatever it needs for the backward
//! pass. Node ids are handed out in topological order, so `backward`
//! simply walks the tape in reverse.

use super::gemm::gemm;
use super::tensor::{split_axis, strides, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Linear {
        x: Var,
        w: Var,
        b: Option<Var>,
        rows: usize,
        d_in: usize,
        d_out: usize,
    },
    Conv1d {
        x: Var,
        w: Var,
        b: Option<Var>,
        geom: ConvGeom,
        cols: Vec<f64>,
    },
    /// Output element `i` was read from input element `src[i]`.
    Gather {
        x: Var,
        src: Vec<usize>,
    },
    Relu {
        x: Var,
    },
    Add {
        a: Var,
        b: Var,
    },
    Scale {
        x: Var,
        c: f64,
    },
    MulConst {
        x: Var,
        factor: Vec<f64>,
    },
    Dot {
        x: Var,
        w: Vec<f64>,
    },
    Softmax {
        x: Var,
        width: usize,
    },
    CrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
    Contrast {
        anchor: Var,
        positive: Var,
        groups: usize,
        k: usize,
        d: usize,
        p_cross: Vec<f64>,
        p_self: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy)]
struct ConvGeom {
    batch: usize,
    c_in: usize,
    c_out: usize,
    k: usize,
    len: usize,
    dilation: usize,
}

impl ConvGeom {
    fn offset(&self, tap: usize) -> isize {
        (tap as isize - (self.k / 2) as isize) * self.dilation as isize
    }
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    requires_grad: bool,
    op: Op,
}

/// A single forward/backward graph. Not shared across threads.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf that receives a gradient on `backward`.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, true, Op::Leaf)
    }

    /// Leaf excluded from differentiation.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, false, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Scalar value of a one-element node.
    pub fn item(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data()[0]
    }

    /// Gradient accumulated by the last `backward` call, if the node took part.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn grad_tensor(&self, v: Var) -> Option<Tensor> {
        self.grad(v)
            .map(|g| Tensor::new(self.shape(v), g.to_vec()).expect("grad shape"))
    }

    fn push(&mut self, value: Tensor, requires_grad: bool, op: Op) -> Var {
        self.nodes.push(Node {
            value,
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, vars: &[Option<Var>]) -> bool {
        vars.iter().flatten().any(|v| self.nodes[v.0].requires_grad)
    }

    // ----------------------------------------------------------------- ops

    /// `y = x W + b` applied over the last axis of `x`.
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let ws = self.shape(w).to_vec();
        let d_in = *xs.last().expect("non-empty shape");
        if ws.len() != 2 || ws[0] != d_in {
            return Err(Error::shape("linear", &xs, &ws));
        }
        let d_out = ws[1];
        if let Some(b) = b {
            if self.shape(b) != [d_out] {
                return Err(Error::shape("linear bias", self.shape(b), &[d_out]));
            }
        }
        let rows = self.value(x).len() / d_in;
        let mut out = vec![0.0; rows * d_out];
        if let Some(b) = b {
            let bias = self.value(b).data();
            for row in out.chunks_exact_mut(d_out) {
                row.copy_from_slice(bias);
            }
        }
        let beta = if b.is_some() { 1.0 } else { 0.0 };
        gemm(
            rows,
            d_in,
            d_out,
            1.0,
            self.value(x).data(),
            false,
            self.value(w).data(),
            false,
            beta,
            &mut out,
        );
        let mut shape = xs;
        *shape.last_mut().unwrap() = d_out;
        let rg = self.any_grad(&[Some(x), Some(w), b]);
        Ok(self.push(
            Tensor::new(&shape, out)?,
            rg,
            Op::Linear {
                x,
                w,
                b,
                rows,
                d_in,
                d_out,
            },
        ))
    }

    /// Dilated 1-D convolution over `[B, C_in, L]` with zero "same" padding.
    ///
    /// `kernel` is `[C_out, C_in, K]` with odd `K`; output is `[B, C_out, L]`.
    pub fn conv1d(&mut self, x: Var, kernel: Var, bias: Option<Var>, dilation: usize) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let ws = self.shape(kernel).to_vec();
        if xs.len() != 3 || ws.len() != 3 || ws[1] != xs[1] {
            return Err(Error::shape("conv1d", &xs, &ws));
        }
        if ws[2] % 2 == 0 {
            return Err(Error::config(format!("conv1d kernel size must be odd, got {}", ws[2])));
        }
        if dilation < 1 {
            return Err(Error::config("conv1d dilation must be >= 1"));
        }
        let geom = ConvGeom {
            batch: xs[0],
            c_in: xs[1],
            c_out: ws[0],
            k: ws[2],
            len: xs[2],
            dilation,
        };
        if let Some(b) = bias {
            if self.shape(b) != [geom.c_out] {
                return Err(Error::shape("conv1d bias", self.shape(b), &[geom.c_out]));
            }
        }
        let cols = im2col(self.value(x).data(), &geom);
        let bl = geom.batch * geom.len;
        let mut y2 = vec![0.0; geom.c_out * bl];
        gemm(
            geom.c_out,
            geom.c_in * geom.k,
            bl,
            1.0,
            self.value(kernel).data(),
            false,
            &cols,
            false,
            0.0,
            &mut y2,
        );
        let mut out = vec![0.0; geom.batch * geom.c_out * geom.len];
        let bias_vals = bias.map(|b| self.value(b).data().to_vec());
        for b in 0..geom.batch {
            for co in 0..geom.c_out {
                let shift = bias_vals.as_ref().map_or(0.0, |v| v[co]);
                let src = &y2[co * bl + b * geom.len..co * bl + (b + 1) * geom.len];
                let dst = &mut out[(b * geom.c_out + co) * geom.len..][..geom.len];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = s + shift;
                }
            }
        }
        let rg = self.any_grad(&[Some(x), Some(kernel), bias]);
        Ok(self.push(
            Tensor::new(&[geom.batch, geom.c_out, geom.len], out)?,
            rg,
            Op::Conv1d {
                x,
                w: kernel,
                b: bias,
                geom,
                cols: if rg { cols } else { Vec::new() },
            },
        ))
    }

    /// Kernel-2, stride-2 max-pooling along `axis`; an odd tail element passes through.
    ///
    /// Ties route to the lower index.
    pub fn max_pool_pairs(&mut self, x: Var, axis: usize) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        if axis >= xs.len() {
            return Err(Error::Index(format!("pool axis {axis} for shape {xs:?}")));
        }
        let (outer, len, inner) = split_axis(&xs, axis);
        let out_len = len.div_ceil(2);
        let data = self.value(x).data();
        let mut out = Vec::with_capacity(outer * out_len * inner);
        let mut src = Vec::with_capacity(outer * out_len * inner);
        for o in 0..outer {
            for j in 0..out_len {
                for i in 0..inner {
                    let first = (o * len + 2 * j) * inner + i;
                    let mut best = first;
                    if 2 * j + 1 < len {
                        let second = first + inner;
                        if data[second] > data[first] {
                            best = second;
                        }
                    }
                    out.push(data[best]);
                    src.push(best);
                }
            }
        }
        let mut shape = xs;
        shape[axis] = out_len;
        let rg = self.requires_grad(x);
        Ok(self.push(Tensor::new(&shape, out)?, rg, Op::Gather { x, src }))
    }

    /// `maxpool1d` over the last axis of `[B, C, L]`.
    pub fn maxpool1d(&mut self, x: Var) -> Result<Var> {
        let nd = self.shape(x).len();
        self.max_pool_pairs(x, nd - 1)
    }

    /// Global max over `axis`, removing it. Ties route to the lowest index.
    pub fn max_over(&mut self, x: Var, axis: usize) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        if axis >= xs.len() {
            return Err(Error::Index(format!("reduce axis {axis} for shape {xs:?}")));
        }
        let (outer, len, inner) = split_axis(&xs, axis);
        let data = self.value(x).data();
        let mut out = Vec::with_capacity(outer * inner);
        let mut src = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for i in 0..inner {
                let mut best = o * len * inner + i;
                for t in 1..len {
                    let idx = (o * len + t) * inner + i;
                    if data[idx] > data[best] {
                        best = idx;
                    }
                }
                out.push(data[best]);
                src.push(best);
            }
        }
        let mut shape = xs;
        shape.remove(axis);
        if shape.is_empty() {
            shape.push(1);
        }
        let rg = self.requires_grad(x);
        Ok(self.push(Tensor::new(&shape, out)?, rg, Op::Gather { x, src }))
    }

    /// Reorders axes so output axis `i` is input axis `perm[i]`.
    pub fn permute(&mut self, x: Var, perm: &[usize]) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let mut seen = vec![false; xs.len()];
        if perm.len() != xs.len() || perm.iter().any(|&p| p >= xs.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::shape("permute", &xs, perm));
        }
        let in_strides = strides(&xs);
        let out_shape: Vec<usize> = perm.iter().map(|&p| xs[p]).collect();
        let step: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let n = self.value(x).len();
        let mut src = Vec::with_capacity(n);
        let mut idx = vec![0usize; out_shape.len()];
        let mut off = 0usize;
        for _ in 0..n {
            src.push(off);
            for ax in (0..idx.len()).rev() {
                idx[ax] += 1;
                off += step[ax];
                if idx[ax] < out_shape[ax] {
                    break;
                }
                off -= step[ax] * out_shape[ax];
                idx[ax] = 0;
            }
        }
        Ok(self.gather(x, &out_shape, src))
    }

    /// Contiguous slice `[start, start + len)` along `axis`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        if axis >= xs.len() || len == 0 || start + len > xs[axis] {
            return Err(Error::Index(format!(
                "slice [{start}, {}) on axis {axis} of shape {xs:?}",
                start + len
            )));
        }
        let (outer, full, inner) = split_axis(&xs, axis);
        let mut src = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * full + start) * inner;
            src.extend(base..base + len * inner);
        }
        let mut shape = xs;
        shape[axis] = len;
        Ok(self.gather(x, &shape, src))
    }

    fn gather(&mut self, x: Var, shape: &[usize], src: Vec<usize>) -> Var {
        let data = self.value(x).data();
        let out: Vec<f64> = src.iter().map(|&i| data[i]).collect();
        let rg = self.requires_grad(x);
        self.push(Tensor::new(shape, out).expect("gather shape"), rg, Op::Gather { x, src })
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let out: Vec<f64> = t.data().iter().map(|&v| v.max(0.0)).collect();
        let shape = t.shape().to_vec();
        let rg = self.requires_grad(x);
        self.push(Tensor::new(&shape, out).unwrap(), rg, Op::Relu { x })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape("add", self.shape(a), self.shape(b)));
        }
        let out: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.shape(a).to_vec();
        let rg = self.any_grad(&[Some(a), Some(b)]);
        Ok(self.push(Tensor::new(&shape, out)?, rg, Op::Add { a, b }))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let t = self.value(x);
        let out: Vec<f64> = t.data().iter().map(|v| v * c).collect();
        let shape = t.shape().to_vec();
        let rg = self.requires_grad(x);
        self.push(Tensor::new(&shape, out).unwrap(), rg, Op::Scale { x, c })
    }

    /// Elementwise product with a constant of the same shape.
    pub fn mul_const(&mut self, x: Var, factor: Vec<f64>) -> Result<Var> {
        if factor.len() != self.value(x).len() {
            return Err(Error::shape("mul_const", self.shape(x), &[factor.len()]));
        }
        let out: Vec<f64> = self
            .value(x)
            .data()
            .iter()
            .zip(&factor)
            .map(|(v, f)| v * f)
            .collect();
        let shape = self.shape(x).to_vec();
        let rg = self.requires_grad(x);
        Ok(self.push(Tensor::new(&shape, out)?, rg, Op::MulConst { x, factor }))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let n = self.value(x).len();
        self.dot_const(x, vec![1.0; n]).expect("matching length")
    }

    /// Scalar `sum_i x_i w_i` against constant weights.
    pub fn dot_const(&mut self, x: Var, w: Vec<f64>) -> Result<Var> {
        if w.len() != self.value(x).len() {
            return Err(Error::shape("dot_const", self.shape(x), &[w.len()]));
        }
        let s: f64 = self.value(x).data().iter().zip(&w).map(|(a, b)| a * b).sum();
        let rg = self.requires_grad(x);
        Ok(self.push(Tensor::scalar(s), rg, Op::Dot { x, w }))
    }

    /// Arithmetic mean of scalar nodes.
    pub fn mean_of(&mut self, xs: &[Var]) -> Result<Var> {
        let (&first, rest) = xs
            .split_first()
            .ok_or_else(|| Error::Empty("mean of zero terms".into()))?;
        let mut acc = first;
        for &x in rest {
            acc = self.add(acc, x)?;
        }
        Ok(self.scale(acc, 1.0 / xs.len() as f64))
    }

    /// Row-wise softmax over the last axis, computed with the max shift.
    pub fn softmax(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let width = *t.shape().last().unwrap();
        let mut out = t.data().to_vec();
        for row in out.chunks_exact_mut(width) {
            softmax_in_place(row);
        }
        let shape = t.shape().to_vec();
        let rg = self.requires_grad(x);
        self.push(Tensor::new(&shape, out).unwrap(), rg, Op::Softmax { x, width })
    }

    /// Mean negative log-likelihood of `labels` under `softmax(logits)` for `[B, K]` logits.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let s = self.shape(logits).to_vec();
        if s.len() != 2 || s[0] != labels.len() {
            return Err(Error::shape("cross_entropy", &s, &[labels.len()]));
        }
        let k = s[1];
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Index(format!("label {bad} outside [0, {k})")));
        }
        let mut probs = self.value(logits).data().to_vec();
        let mut loss = 0.0;
        for (row, &label) in probs.chunks_exact_mut(k).zip(labels) {
            let lse = log_sum_exp(row);
            loss += lse - row[label];
            for v in row.iter_mut() {
                *v = (*v - lse).exp();
            }
        }
        loss /= labels.len() as f64;
        let rg = self.requires_grad(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            rg,
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
            },
        ))
    }

    /// Contrastive negative log-likelihood over groups of aligned sequences.
    ///
    /// `anchor` and `positive` are `[G, K, D]`. Within each group `g`, anchor
    /// row `t` scores its positive `positive[g, t]` against every
    /// `positive[g, t']` and every other anchor row `anchor[g, t' != t]`.
    /// The result is the mean over all `G * K` rows of
    /// `logsumexp(candidates) - anchor[g,t] . positive[g,t]`.
    pub fn contrast(&mut self, anchor: Var, positive: Var) -> Result<Var> {
        let s = self.shape(anchor).to_vec();
        if s.len() != 3 || self.shape(positive) != s.as_slice() {
            return Err(Error::shape("contrast", &s, self.shape(positive)));
        }
        let (groups, k, d) = (s[0], s[1], s[2]);
        let za = self.value(anchor).data();
        let zp = self.value(positive).data();
        let mut p_cross = vec![0.0; groups * k * k];
        let mut p_self = vec![0.0; groups * k * k];
        let mut total = 0.0;
        let mut row = Vec::with_capacity(2 * k);
        for g in 0..groups {
            let a = &za[g * k * d..(g + 1) * k * d];
            let p = &zp[g * k * d..(g + 1) * k * d];
            let cross = &mut p_cross[g * k * k..(g + 1) * k * k];
            let own = &mut p_self[g * k * k..(g + 1) * k * k];
            gemm(k, d, k, 1.0, a, false, p, true, 0.0, cross);
            gemm(k, d, k, 1.0, a, false, a, true, 0.0, own);
            for t in 0..k {
                let cr = &mut cross[t * k..(t + 1) * k];
                let sr = &mut own[t * k..(t + 1) * k];
                row.clear();
                row.extend_from_slice(cr);
                row.extend(sr.iter().enumerate().filter(|&(j, _)| j != t).map(|(_, &v)| v));
                let lse = log_sum_exp(&row);
                total += lse - cr[t];
                for v in cr.iter_mut() {
                    *v = (*v - lse).exp();
                }
                for (j, v) in sr.iter_mut().enumerate() {
                    *v = if j == t { 0.0 } else { (*v - lse).exp() };
                }
            }
        }
        let loss = total / (groups * k) as f64;
        let rg = self.any_grad(&[Some(anchor), Some(positive)]);
        Ok(self.push(
            Tensor::scalar(loss),
            rg,
            Op::Contrast {
                anchor,
                positive,
                groups,
                k,
                d,
                p_cross,
                p_self,
            },
        ))
    }

    // ------------------------------------------------------------ backward

    /// Populates gradients for every node reachable from the scalar `loss`.
    ///
    /// Previous gradients are discarded.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if !self.value(loss).is_scalar() {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        self.grads = vec![None; self.nodes.len()];
        if !self.requires_grad(loss) {
            return Ok(());
        }
        self.grads[loss.0] = Some(vec![1.0]);
        for id in (0..=loss.0).rev() {
            let Some(g) = self.grads[id].take() else {
                continue;
            };
            self.backprop_node(id, &g);
            self.grads[id] = Some(g);
        }
        Ok(())
    }

    fn backprop_node(&mut self, id: usize, g: &[f64]) {
        let nodes = &self.nodes;
        let grads = &mut self.grads;
        let wants = |v: Var| nodes[v.0].requires_grad;
        match &nodes[id].op {
            Op::Leaf => {}
            Op::Linear {
                x,
                w,
                b,
                rows,
                d_in,
                d_out,
            } => {
                let (rows, d_in, d_out) = (*rows, *d_in, *d_out);
                if wants(*x) {
                    let dx = slot(grads, *x, rows * d_in);
                    gemm(rows, d_out, d_in, 1.0, g, false, nodes[w.0].value.data(), true, 1.0, dx);
                }
                if wants(*w) {
                    let dw = slot(grads, *w, d_in * d_out);
                    gemm(d_in, rows, d_out, 1.0, nodes[x.0].value.data(), true, g, false, 1.0, dw);
                }
                if let Some(b) = b.filter(|&b| wants(b)) {
                    let db = slot(grads, b, d_out);
                    for row in g.chunks_exact(d_out) {
                        for (acc, v) in db.iter_mut().zip(row) {
                            *acc += v;
                        }
                    }
                }
            }
            Op::Conv1d { x, w, b, geom, cols } => {
                let bl = geom.batch * geom.len;
                let ck = geom.c_in * geom.k;
                // Reorder the upstream gradient to [C_out, B*L] to match the forward gemm.
                let mut dy2 = vec![0.0; geom.c_out * bl];
                for bi in 0..geom.batch {
                    for co in 0..geom.c_out {
                        let src = &g[(bi * geom.c_out + co) * geom.len..][..geom.len];
                        dy2[co * bl + bi * geom.len..][..geom.len].copy_from_slice(src);
                    }
                }
                if wants(*w) {
                    let dw = slot(grads, *w, geom.c_out * ck);
                    gemm(geom.c_out, bl, ck, 1.0, &dy2, false, cols, true, 1.0, dw);
                }
                if let Some(b) = b.filter(|&b| wants(b)) {
                    let db = slot(grads, b, geom.c_out);
                    for (co, acc) in db.iter_mut().enumerate() {
                        *acc += dy2[co * bl..(co + 1) * bl].iter().sum::<f64>();
                    }
                }
                if wants(*x) {
                    let mut dcols = vec![0.0; ck * bl];
                    gemm(ck, geom.c_out, bl, 1.0, nodes[w.0].value.data(), true, &dy2, false, 0.0, &mut dcols);
                    let dx = slot(grads, *x, geom.batch * geom.c_in * geom.len);
                    col2im(&dcols, geom, dx);
                }
            }
            Op::Gather { x, src } => {
                if wants(*x) {
                    let n = nodes[x.0].value.len();
                    let dx = slot(grads, *x, n);
                    for (&i, &gv) in src.iter().zip(g) {
                        dx[i] += gv;
                    }
                }
            }
            Op::Relu { x } => {
                if wants(*x) {
                    let xv = nodes[x.0].value.data();
                    let dx = slot(grads, *x, xv.len());
                    for ((acc, &v), &gv) in dx.iter_mut().zip(xv).zip(g) {
                        if v > 0.0 {
                            *acc += gv;
                        }
                    }
                }
            }
            Op::Add { a, b } => {
                for v in [*a, *b] {
                    if wants(v) {
                        for (acc, gv) in slot(grads, v, g.len()).iter_mut().zip(g) {
                            *acc += gv;
                        }
                    }
                }
            }
            Op::Scale { x, c } => {
                if wants(*x) {
                    for (acc, gv) in slot(grads, *x, g.len()).iter_mut().zip(g) {
                        *acc += c * gv;
                    }
                }
            }
            Op::MulConst { x, factor } => {
                if wants(*x) {
                    for ((acc, gv), f) in slot(grads, *x, g.len()).iter_mut().zip(g).zip(factor) {
                        *acc += gv * f;
                    }
                }
            }
            Op::Dot { x, w } => {
                if wants(*x) {
                    for (acc, wv) in slot(grads, *x, w.len()).iter_mut().zip(w) {
                        *acc += g[0] * wv;
                    }
                }
            }
            Op::Softmax { x, width } => {
                if wants(*x) {
                    let p = nodes[id].value.data();
                    let dx = slot(grads, *x, p.len());
                    for ((pr, gr), dr) in p
                        .chunks_exact(*width)
                        .zip(g.chunks_exact(*width))
                        .zip(dx.chunks_exact_mut(*width))
                    {
                        let inner: f64 = pr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for ((acc, &pv), &gv) in dr.iter_mut().zip(pr).zip(gr) {
                            *acc += pv * (gv - inner);
                        }
                    }
                }
            }
            Op::CrossEntropy {
                logits,
                labels,
                probs,
            } => {
                if wants(*logits) {
                    let k = probs.len() / labels.len();
                    let c = g[0] / labels.len() as f64;
                    let dx = slot(grads, *logits, probs.len());
                    for (r, &label) in labels.iter().enumerate() {
                        for j in 0..k {
                            let onehot = if j == label { 1.0 } else { 0.0 };
                            dx[r * k + j] += c * (probs[r * k + j] - onehot);
                        }
                    }
                }
            }
            Op::Contrast {
                anchor,
                positive,
                groups,
                k,
                d,
                p_cross,
                p_self,
            } => {
                let (groups, k, d) = (*groups, *k, *d);
                let c = g[0] / (groups * k) as f64;
                let za = nodes[anchor.0].value.data();
                let zp = nodes[positive.0].value.data();
                let mut d_cross = vec![0.0; k * k];
                let mut d_self = vec![0.0; k * k];
                let mut da = vec![0.0; groups * k * d];
                let mut dp = vec![0.0; groups * k * d];
                for gi in 0..groups {
                    let pc = &p_cross[gi * k * k..(gi + 1) * k * k];
                    let ps = &p_self[gi * k * k..(gi + 1) * k * k];
                    for t in 0..k {
                        for j in 0..k {
                            let idx = t * k + j;
                            d_cross[idx] = c * (pc[idx] - if t == j { 1.0 } else { 0.0 });
                            // The self-similarity matrix is symmetric in its arguments.
                            d_self[idx] = c * (ps[idx] + ps[j * k + t]);
                        }
                    }
                    let a = &za[gi * k * d..(gi + 1) * k * d];
                    let p = &zp[gi * k * d..(gi + 1) * k * d];
                    let da_g = &mut da[gi * k * d..(gi + 1) * k * d];
                    gemm(k, k, d, 1.0, &d_cross, false, p, false, 0.0, da_g);
                    gemm(k, k, d, 1.0, &d_self, false, a, false, 1.0, da_g);
                    let dp_g = &mut dp[gi * k * d..(gi + 1) * k * d];
                    gemm(k, k, d, 1.0, &d_cross, true, a, false, 0.0, dp_g);
                }
                for (v, buf) in [(*anchor, &da), (*positive, &dp)] {
                    if wants(v) {
                        for (acc, x) in slot(grads, v, buf.len()).iter_mut().zip(buf) {
                            *acc += x;
                        }
                    }
                }
            }
        }
    }
}

fn slot(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

fn im2col(x: &[f64], geom: &ConvGeom) -> Vec<f64> {
    let bl = geom.batch * geom.len;
    let mut cols = vec![0.0; geom.c_in * geom.k * bl];
    for ci in 0..geom.c_in {
        for tap in 0..geom.k {
            let off = geom.offset(tap);
            let row = &mut cols[(ci * geom.k + tap) * bl..][..bl];
            for b in 0..geom.batch {
                let xrow = &x[(b * geom.c_in + ci) * geom.len..][..geom.len];
                let dst = &mut row[b * geom.len..][..geom.len];
                let (lo, hi) = valid_range(off, geom.len);
                for t in lo..hi {
                    dst[t] = xrow[(t as isize + off) as usize];
                }
            }
        }
    }
    cols
}

fn col2im(dcols: &[f64], geom: &ConvGeom, dx: &mut [f64]) {
    let bl = geom.batch * geom.len;
    for ci in 0..geom.c_in {
        for tap in 0..geom.k {
            let off = geom.offset(tap);
            let row = &dcols[(ci * geom.k + tap) * bl..][..bl];
            for b in 0..geom.batch {
                let xrow = &mut dx[(b * geom.c_in + ci) * geom.len..][..geom.len];
                let src = &row[b * geom.len..][..geom.len];
                let (lo, hi) = valid_range(off, geom.len);
                for t in lo..hi {
                    xrow[(t as isize + off) as usize] += src[t];
                }
            }
        }
    }
}

/// Output positions `t` for which `t + off` lies inside `[0, len)`.
fn valid_range(off: isize, len: usize) -> (usize, usize) {
    let lo = (-off).max(0) as usize;
    let hi = (len as isize - off).clamp(0, len as isize) as usize;
    (lo.min(hi), hi)
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in row.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in row.iter_mut() {
        *v /= s;
    }
}
