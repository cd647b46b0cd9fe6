//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Every operation appends one node holding its forward value. `backward`
//! walks the nodes in exact reverse order and never mutates the tape, so it
//! can be called any number of times and always yields the same gradients.
//!
//! Tensors of rank ≥ 3 are treated as a stack of matrices over the leading
//! "group" axes; this is how a mini-batch of `M`-token samples is carried
//! through the attention operations.

use crate::error::{Error, Result};
use crate::numerics::tensor::{matmul_nt_raw, matmul_raw, matmul_tn_raw, Tensor};

/// Handle to a value recorded on a [`Tape`].
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
    MatMul {
        a: Var,
        b: Var,
    },
    AddBias {
        x: Var,
        bias: Var,
    },
    Add {
        a: Var,
        b: Var,
    },
    Scale {
        x: Var,
        factor: f64,
    },
    Gelu {
        x: Var,
    },
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        normalized: Vec<f64>,
        inv_std: Vec<f64>,
    },
    LayerNormTokens {
        x: Var,
        gain: Var,
        bias: Var,
        normalized: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Reshape {
        x: Var,
    },
    Scores {
        q: Var,
        k: Var,
        scale: f64,
    },
    MaskedSoftmax {
        x: Var,
    },
    Attend {
        p: Var,
        v: Var,
    },
    GroupMean {
        x: Var,
    },
    CrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Gradients returned by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient of `var`; zeros if the loss does not depend on it.
    pub fn get(&self, var: Var) -> Tensor {
        let shape = &self.shapes[var.0];
        match &self.grads[var.0] {
            Some(g) => Tensor::new(shape.clone(), g.clone()).expect("gradient shape"),
            None => Tensor::zeros(shape),
        }
    }
}

/// Sum of `terms` in a canonical (value-sorted) order, so the result is
/// bitwise independent of the order the terms were produced in.
fn canonical_sum(terms: &mut [f64]) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum()
}

fn split_groups(shape: &[usize]) -> (usize, usize, usize) {
    let n = shape.len();
    let rows = shape[n - 2];
    let cols = shape[n - 1];
    let groups = shape[..n - 2].iter().product();
    (groups, rows, cols)
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// GELU, tanh approximation.
pub fn gelu_scalar(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad_scalar(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
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

    pub fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op, name: &'static str) -> Result<Var> {
        if !value.all_finite() {
            return Err(Error::NonFinite { op: name });
        }
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn leaf(&mut self, value: Tensor) -> Result<Var> {
        self.push(value, Op::Leaf, "leaf")
    }

    /// `a[.., k] · b[k, n]`; leading axes of `a` are flattened into rows.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if bv.shape().len() != 2 || av.cols() != bv.shape()[0] {
            return Err(Error::dim(
                "matmul",
                format!("{:?} · {:?}", av.shape(), bv.shape()),
            ));
        }
        let (m, k, n) = (av.rows(), av.cols(), bv.cols());
        let mut out = vec![0.0; m * n];
        matmul_raw(av.values(), bv.values(), m, k, n, &mut out);
        let mut shape = av.shape().to_vec();
        *shape.last_mut().unwrap() = n;
        let t = Tensor::new(shape, out)?;
        self.push(t, Op::MatMul { a, b }, "matmul")
    }

    /// Adds `bias[n]` to every row of `x[.., n]`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if bv.len() != xv.cols() {
            return Err(Error::dim(
                "add_bias",
                format!("{:?} + {:?}", xv.shape(), bv.shape()),
            ));
        }
        let n = xv.cols();
        let mut out = xv.values().to_vec();
        for row in out.chunks_mut(n) {
            for (o, b) in row.iter_mut().zip(bv.values()) {
                *o += b;
            }
        }
        let t = Tensor::new(xv.shape().to_vec(), out)?;
        self.push(t, Op::AddBias { x, bias }, "add_bias")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(Error::dim(
                "add",
                format!("{:?} + {:?}", av.shape(), bv.shape()),
            ));
        }
        let out = av.values().iter().zip(bv.values()).map(|(x, y)| x + y).collect();
        let t = Tensor::new(av.shape().to_vec(), out)?;
        self.push(t, Op::Add { a, b }, "add")
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var> {
        let xv = self.value(x);
        let out = xv.values().iter().map(|v| v * factor).collect();
        let t = Tensor::new(xv.shape().to_vec(), out)?;
        self.push(t, Op::Scale { x, factor }, "scale")
    }

    pub fn gelu(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let out = xv.values().iter().map(|&v| gelu_scalar(v)).collect();
        let t = Tensor::new(xv.shape().to_vec(), out)?;
        self.push(t, Op::Gelu { x }, "gelu")
    }

    /// Normalizes each row of `x[.., d]` over its `d` entries.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        let xv = self.value(x);
        let d = xv.cols();
        if d < 2 || self.value(gain).len() != d || self.value(bias).len() != d {
            return Err(Error::dim(
                "layer_norm",
                format!("x {:?}, gain/bias must have {d} ≥ 2 entries", xv.shape()),
            ));
        }
        let g = self.value(gain).values();
        let b = self.value(bias).values();
        let mut normalized = Vec::with_capacity(xv.len());
        let mut inv_std = Vec::with_capacity(xv.rows());
        let mut out = Vec::with_capacity(xv.len());
        for row in xv.values().chunks(d) {
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std.push(inv);
            for (j, v) in row.iter().enumerate() {
                let h = (v - mean) * inv;
                normalized.push(h);
                out.push(g[j] * h + b[j]);
            }
        }
        let t = Tensor::new(xv.shape().to_vec(), out)?;
        self.push(
            t,
            Op::LayerNorm {
                x,
                gain,
                bias,
                normalized,
                inv_std,
            },
            "layer_norm",
        )
    }

    /// Normalizes `x[g, m, d]` over the `m` token axis separately for every
    /// embedding column, then applies a per-column gain and bias.
    pub fn layer_norm_tokens(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        let xv = self.value(x);
        if xv.shape().len() < 3 {
            return Err(Error::dim("layer_norm_tokens", "need [groups, tokens, d]"));
        }
        let (groups, m, d) = split_groups(xv.shape());
        if m < 2 || self.value(gain).len() != d || self.value(bias).len() != d {
            return Err(Error::dim(
                "layer_norm_tokens",
                format!("x {:?} with gain/bias of {d}", xv.shape()),
            ));
        }
        let g = self.value(gain).values();
        let b = self.value(bias).values();
        let xs = xv.values();
        let mut normalized = vec![0.0; xs.len()];
        let mut out = vec![0.0; xs.len()];
        let mut inv_std = Vec::with_capacity(groups * d);
        let mut column = vec![0.0; m];
        for grp in 0..groups {
            let base = grp * m * d;
            for c in 0..d {
                for (r, slot) in column.iter_mut().enumerate() {
                    *slot = xs[base + r * d + c];
                }
                let mean = canonical_sum(&mut column.clone()) / m as f64;
                let mut sq: Vec<f64> = column.iter().map(|v| (v - mean) * (v - mean)).collect();
                let var = canonical_sum(&mut sq) / m as f64;
                let inv = 1.0 / (var + eps).sqrt();
                inv_std.push(inv);
                for (r, v) in column.iter().enumerate() {
                    let h = (v - mean) * inv;
                    normalized[base + r * d + c] = h;
                    out[base + r * d + c] = g[c] * h + b[c];
                }
            }
        }
        let t = Tensor::new(xv.shape().to_vec(), out)?;
        self.push(
            t,
            Op::LayerNormTokens {
                x,
                gain,
                bias,
                normalized,
                inv_std,
            },
            "layer_norm_tokens",
        )
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(x).reshaped(shape)?;
        self.push(t, Op::Reshape { x }, "reshape")
    }

    /// `scale · q[g, m, k] · k[g, n, k]ᵀ` per group.
    pub fn scores(&mut self, q: Var, k: Var, scale: f64) -> Result<Var> {
        let (qv, kv) = (self.value(q), self.value(k));
        if qv.shape().len() < 3 || qv.shape().len() != kv.shape().len() {
            return Err(Error::dim("scores", "need [groups, tokens, d] operands"));
        }
        let (gq, m, dq) = split_groups(qv.shape());
        let (gk, n, dk) = split_groups(kv.shape());
        if gq != gk || dq != dk {
            return Err(Error::dim(
                "scores",
                format!("{:?} vs {:?}", qv.shape(), kv.shape()),
            ));
        }
        let mut out = vec![0.0; gq * m * n];
        for grp in 0..gq {
            matmul_nt_raw(
                &qv.values()[grp * m * dq..(grp + 1) * m * dq],
                &kv.values()[grp * n * dk..(grp + 1) * n * dk],
                m,
                dq,
                n,
                &mut out[grp * m * n..(grp + 1) * m * n],
            );
        }
        out.iter_mut().for_each(|v| *v *= scale);
        let mut shape = qv.shape().to_vec();
        let last = shape.len() - 1;
        shape[last] = n;
        let t = Tensor::new(shape, out)?;
        self.push(t, Op::Scores { q, k, scale }, "scores")
    }

    /// Row-wise softmax of `x[.., m, n]` restricted to admissible entries.
    ///
    /// `mask` is either `m × n` (shared by every group) or the full size of
    /// `x`. Inadmissible entries get exactly zero weight.
    pub fn masked_softmax_rows(&mut self, x: Var, mask: &[bool]) -> Result<Var> {
        let xv = self.value(x);
        let n = xv.cols();
        let total = xv.len();
        let per = if xv.shape().len() >= 2 {
            xv.shape()[xv.shape().len() - 2] * n
        } else {
            n
        };
        if mask.len() != per && mask.len() != total {
            return Err(Error::dim(
                "masked_softmax_rows",
                format!("mask of {} for input {:?}", mask.len(), xv.shape()),
            ));
        }
        let period = mask.len();
        let mut out = vec![0.0; total];
        let mut exps = Vec::with_capacity(n);
        for (r, row) in xv.values().chunks(n).enumerate() {
            let mrow_start = (r * n) % period;
            let mrow = &mask[mrow_start..mrow_start + n];
            let max = row
                .iter()
                .zip(mrow)
                .filter(|(_, &ok)| ok)
                .map(|(v, _)| *v)
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return Err(Error::DegenerateMask {
                    row: (r * n % period) / n,
                });
            }
            exps.clear();
            exps.extend(
                row.iter()
                    .zip(mrow)
                    .map(|(v, &ok)| if ok { (v - max).exp() } else { 0.0 }),
            );
            let mut terms: Vec<f64> = exps.iter().copied().filter(|&e| e != 0.0).collect();
            let denom = canonical_sum(&mut terms);
            for (o, e) in out[r * n..(r + 1) * n].iter_mut().zip(&exps) {
                *o = e / denom;
            }
        }
        let t = Tensor::new(xv.shape().to_vec(), out)?;
        self.push(t, Op::MaskedSoftmax { x }, "masked_softmax_rows")
    }

    /// `p[g, m, n] · v[g, n, d]` per group.
    ///
    /// With `canonical` set, each output entry sums its `n` terms in
    /// value-sorted order, making the result bitwise invariant to any
    /// consistent permutation of the `n` axis.
    pub fn attend(&mut self, p: Var, v: Var, canonical: bool) -> Result<Var> {
        let (pv, vv) = (self.value(p), self.value(v));
        if pv.shape().len() < 3 || pv.shape().len() != vv.shape().len() {
            return Err(Error::dim("attend", "need [groups, tokens, d] operands"));
        }
        let (gp, m, n) = split_groups(pv.shape());
        let (gv, nv, d) = split_groups(vv.shape());
        if gp != gv || n != nv {
            return Err(Error::dim(
                "attend",
                format!("{:?} · {:?}", pv.shape(), vv.shape()),
            ));
        }
        let mut out = vec![0.0; gp * m * d];
        let mut terms = Vec::with_capacity(n);
        for grp in 0..gp {
            let pg = &pv.values()[grp * m * n..(grp + 1) * m * n];
            let vg = &vv.values()[grp * n * d..(grp + 1) * n * d];
            let og = &mut out[grp * m * d..(grp + 1) * m * d];
            if canonical {
                for i in 0..m {
                    for c in 0..d {
                        terms.clear();
                        for j in 0..n {
                            let w = pg[i * n + j];
                            if w != 0.0 {
                                terms.push(w * vg[j * d + c]);
                            }
                        }
                        og[i * d + c] = canonical_sum(&mut terms);
                    }
                }
            } else {
                matmul_raw(pg, vg, m, n, d, og);
            }
        }
        let mut shape = pv.shape().to_vec();
        let last = shape.len() - 1;
        shape[last] = d;
        let t = Tensor::new(shape, out)?;
        self.push(t, Op::Attend { p, v }, "attend")
    }

    /// Mean over the token axis: `x[g, m, d] → [g, d]`. With `canonical` set
    /// the sum runs in value-sorted order, so the result is bitwise
    /// independent of token order.
    pub fn group_mean(&mut self, x: Var, canonical: bool) -> Result<Var> {
        let xv = self.value(x);
        if xv.shape().len() < 2 {
            return Err(Error::dim("group_mean", "need [.., m, d]"));
        }
        let (groups, m, d) = if xv.shape().len() == 2 {
            (1, xv.shape()[0], xv.shape()[1])
        } else {
            split_groups(xv.shape())
        };
        let mut out = vec![0.0; groups * d];
        let mut terms = vec![0.0; m];
        for grp in 0..groups {
            for c in 0..d {
                for (r, t) in terms.iter_mut().enumerate() {
                    *t = xv.values()[grp * m * d + r * d + c];
                }
                let sum = if canonical {
                    canonical_sum(&mut terms)
                } else {
                    terms.iter().sum()
                };
                out[grp * d + c] = sum / m as f64;
            }
        }
        let shape = if xv.shape().len() == 2 {
            vec![d]
        } else {
            let mut s = xv.shape()[..xv.shape().len() - 2].to_vec();
            s.push(d);
            s
        };
        let t = Tensor::new(shape, out)?;
        self.push(t, Op::GroupMean { x }, "group_mean")
    }

    /// Mean negative log-likelihood of `labels` under `softmax(logits[b, K])`.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let lv = self.value(logits);
        let k = lv.cols();
        let b = lv.rows();
        if labels.len() != b {
            return Err(Error::dim(
                "cross_entropy",
                format!("{b} rows but {} labels", labels.len()),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Label {
                label: bad,
                classes: k,
            });
        }
        let mut probs = Vec::with_capacity(lv.len());
        let mut loss = 0.0;
        for (row, &label) in lv.values().chunks(k).zip(labels) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
            let log_z = max + sum.ln();
            loss += log_z - row[label];
            probs.extend(row.iter().map(|v| (v - log_z).exp()));
        }
        let t = Tensor::scalar(loss / b as f64);
        self.push(
            t,
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
            },
            "cross_entropy",
        )
    }

    /// Gradients of the scalar `loss` with respect to every recorded value.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::dim(
                "backward",
                format!("loss must be scalar, got {:?}", self.shape(loss)),
            ));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        fn acc(grads: &mut [Option<Vec<f64>>], var: Var, delta: Vec<f64>) {
            match &mut grads[var.0] {
                Some(g) => g.iter_mut().zip(&delta).for_each(|(a, d)| *a += d),
                slot => *slot = Some(delta),
            }
        }

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul { a, b } => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                    let mut ga = vec![0.0; m * k];
                    matmul_nt_raw(&g, bv.values(), m, n, k, &mut ga);
                    let mut gb = vec![0.0; k * n];
                    matmul_tn_raw(av.values(), &g, m, k, n, &mut gb);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::AddBias { x, bias } => {
                    let n = self.value(*bias).len();
                    let mut gb = vec![0.0; n];
                    for row in g.chunks(n) {
                        gb.iter_mut().zip(row).for_each(|(a, v)| *a += v);
                    }
                    acc(&mut grads, *bias, gb);
                    acc(&mut grads, *x, g.clone());
                }
                Op::Add { a, b } => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g.clone());
                }
                Op::Scale { x, factor } => {
                    acc(&mut grads, *x, g.iter().map(|v| v * factor).collect());
                }
                Op::Gelu { x } => {
                    let xv = self.value(*x).values();
                    let gx = g
                        .iter()
                        .zip(xv)
                        .map(|(gv, &v)| gv * gelu_grad_scalar(v))
                        .collect();
                    acc(&mut grads, *x, gx);
                }
                Op::LayerNorm {
                    x,
                    gain,
                    bias,
                    normalized,
                    inv_std,
                } => {
                    let gw = self.value(*gain).values();
                    let d = gw.len();
                    let mut gx = vec![0.0; g.len()];
                    let mut gg = vec![0.0; d];
                    let mut gbias = vec![0.0; d];
                    for (r, (grow, hrow)) in g.chunks(d).zip(normalized.chunks(d)).enumerate() {
                        let mut sum_dh = 0.0;
                        let mut sum_dh_h = 0.0;
                        for j in 0..d {
                            gg[j] += grow[j] * hrow[j];
                            gbias[j] += grow[j];
                            let dh = grow[j] * gw[j];
                            sum_dh += dh;
                            sum_dh_h += dh * hrow[j];
                        }
                        let inv = inv_std[r];
                        let df = d as f64;
                        for j in 0..d {
                            let dh = grow[j] * gw[j];
                            gx[r * d + j] = inv / df * (df * dh - sum_dh - hrow[j] * sum_dh_h);
                        }
                    }
                    acc(&mut grads, *x, gx);
                    acc(&mut grads, *gain, gg);
                    acc(&mut grads, *bias, gbias);
                }
                Op::LayerNormTokens {
                    x,
                    gain,
                    bias,
                    normalized,
                    inv_std,
                } => {
                    let (groups, m, d) = split_groups(self.shape(*x));
                    let gw = self.value(*gain).values();
                    let mut gx = vec![0.0; g.len()];
                    let mut gg = vec![0.0; d];
                    let mut gbias = vec![0.0; d];
                    let mf = m as f64;
                    for grp in 0..groups {
                        let base = grp * m * d;
                        for c in 0..d {
                            let mut sum_dh = 0.0;
                            let mut sum_dh_h = 0.0;
                            for r in 0..m {
                                let i = base + r * d + c;
                                gg[c] += g[i] * normalized[i];
                                gbias[c] += g[i];
                                let dh = g[i] * gw[c];
                                sum_dh += dh;
                                sum_dh_h += dh * normalized[i];
                            }
                            let inv = inv_std[grp * d + c];
                            for r in 0..m {
                                let i = base + r * d + c;
                                let dh = g[i] * gw[c];
                                gx[i] = inv / mf * (mf * dh - sum_dh - normalized[i] * sum_dh_h);
                            }
                        }
                    }
                    acc(&mut grads, *x, gx);
                    acc(&mut grads, *gain, gg);
                    acc(&mut grads, *bias, gbias);
                }
                Op::Reshape { x } => acc(&mut grads, *x, g.clone()),
                Op::Scores { q, k, scale } => {
                    let (qv, kv) = (self.value(*q), self.value(*k));
                    let (groups, m, d) = split_groups(qv.shape());
                    let (_, n, _) = split_groups(kv.shape());
                    let gs: Vec<f64> = g.iter().map(|v| v * scale).collect();
                    let mut gq = vec![0.0; qv.len()];
                    let mut gk = vec![0.0; kv.len()];
                    for grp in 0..groups {
                        let gsg = &gs[grp * m * n..(grp + 1) * m * n];
                        matmul_raw(
                            gsg,
                            &kv.values()[grp * n * d..(grp + 1) * n * d],
                            m,
                            n,
                            d,
                            &mut gq[grp * m * d..(grp + 1) * m * d],
                        );
                        matmul_tn_raw(
                            gsg,
                            &qv.values()[grp * m * d..(grp + 1) * m * d],
                            m,
                            n,
                            d,
                            &mut gk[grp * n * d..(grp + 1) * n * d],
                        );
                    }
                    acc(&mut grads, *q, gq);
                    acc(&mut grads, *k, gk);
                }
                Op::MaskedSoftmax { x } => {
                    let p = node.value.values();
                    let n = node.value.cols();
                    let mut gx = vec![0.0; p.len()];
                    for ((prow, grow), gxrow) in
                        p.chunks(n).zip(g.chunks(n)).zip(gx.chunks_mut(n))
                    {
                        let dot: f64 = prow.iter().zip(grow).map(|(a, b)| a * b).sum();
                        for j in 0..n {
                            gxrow[j] = prow[j] * (grow[j] - dot);
                        }
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::Attend { p, v } => {
                    let (pv, vv) = (self.value(*p), self.value(*v));
                    let (groups, m, n) = split_groups(pv.shape());
                    let d = vv.cols();
                    let mut gp = vec![0.0; pv.len()];
                    let mut gv = vec![0.0; vv.len()];
                    for grp in 0..groups {
                        let gg = &g[grp * m * d..(grp + 1) * m * d];
                        matmul_nt_raw(
                            gg,
                            &vv.values()[grp * n * d..(grp + 1) * n * d],
                            m,
                            d,
                            n,
                            &mut gp[grp * m * n..(grp + 1) * m * n],
                        );
                        matmul_tn_raw(
                            &pv.values()[grp * m * n..(grp + 1) * m * n],
                            gg,
                            m,
                            n,
                            d,
                            &mut gv[grp * n * d..(grp + 1) * n * d],
                        );
                    }
                    acc(&mut grads, *p, gp);
                    acc(&mut grads, *v, gv);
                }
                Op::GroupMean { x } => {
                    let xs = self.shape(*x);
                    let (groups, m, d) = if xs.len() == 2 {
                        (1, xs[0], xs[1])
                    } else {
                        split_groups(xs)
                    };
                    let mut gx = vec![0.0; groups * m * d];
                    for grp in 0..groups {
                        for r in 0..m {
                            for c in 0..d {
                                gx[grp * m * d + r * d + c] = g[grp * d + c] / m as f64;
                            }
                        }
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::CrossEntropy {
                    logits,
                    labels,
                    probs,
                } => {
                    let b = labels.len();
                    let k = probs.len() / b;
                    let scale = g[0] / b as f64;
                    let mut gl = probs.clone();
                    for (r, &label) in labels.iter().enumerate() {
                        gl[r * k + label] -= 1.0;
                    }
                    gl.iter_mut().for_each(|v| *v *= scale);
                    acc(&mut grads, *logits, gl);
                }
            }
            grads[idx] = Some(g);
        }

        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        grads.resize(self.nodes.len(), None);
        Ok(Gradients { grads, shapes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Central finite differences of `f` around `inputs[which]`.
    fn numeric_grad(
        inputs: &[Tensor],
        which: usize,
        f: &dyn Fn(&mut Tape, &[Var]) -> Var,
        h: f64,
    ) -> Vec<f64> {
        let eval = |ins: &[Tensor]| {
            let mut tape = Tape::new();
            let vars: Vec<Var> = ins.iter().map(|t| tape.leaf(t.clone()).unwrap()).collect();
            let out = f(&mut tape, &vars);
            tape.value(out).values()[0]
        };
        (0..inputs[which].len())
            .map(|i| {
                let mut plus = inputs.to_vec();
                plus[which].values_mut()[i] += h;
                let mut minus = inputs.to_vec();
                minus[which].values_mut()[i] -= h;
                (eval(&plus) - eval(&minus)) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt()
            + b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    fn check(inputs: Vec<Tensor>, f: &dyn Fn(&mut Tape, &[Var]) -> Var, tol: f64) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone()).unwrap()).collect();
        let out = f(&mut tape, &vars);
        let grads = tape.backward(out).unwrap();
        for (i, v) in vars.iter().enumerate() {
            let analytic = grads.get(*v);
            let numeric = numeric_grad(&inputs, i, f, 1e-5);
            let err = rel_err(analytic.values(), &numeric);
            assert!(err < tol, "input {i}: relative error {err:e}");
        }
    }

    /// Weighted sum so every output entry contributes a distinct gradient.
    fn probe(tape: &mut Tape, x: Var, seed: u64) -> Var {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = tape.value(x).len();
        let w = Tensor::new(vec![n, 1], (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap();
        let w = tape.leaf(w).unwrap();
        let flat = tape.reshape(x, &[1, n]).unwrap();
        let s = tape.matmul(flat, w).unwrap();
        tape.reshape(s, &[1]).unwrap()
    }

    #[test]
    fn matmul_examples() {
        let mut tape = Tape::new();
        let i = tape.leaf(Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()).unwrap();
        let b = tape.leaf(Tensor::from_rows(&[vec![2.0, 3.0], vec![4.0, 5.0]]).unwrap()).unwrap();
        let p = tape.matmul(i, b).unwrap();
        assert_eq!(tape.value(p).values(), &[2.0, 3.0, 4.0, 5.0]);

        let a = tape.leaf(Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap()).unwrap();
        let c = tape.leaf(Tensor::from_rows(&[vec![3.0], vec![4.0]]).unwrap()).unwrap();
        let p = tape.matmul(a, c).unwrap();
        assert_eq!(tape.value(p).values(), &[11.0]);

        assert!(matches!(tape.matmul(a, a), Err(Error::Dimension { .. })));
    }

    #[test]
    fn matmul_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inputs = vec![random(&[5, 4], &mut rng), random(&[4, 3], &mut rng)];
        check(
            inputs,
            &|t, v| {
                let p = t.matmul(v[0], v[1]).unwrap();
                probe(t, p, 9)
            },
            1e-6,
        );
    }

    #[test]
    fn masked_softmax_examples() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::zeros(&[1, 4])).unwrap();
        let p = tape.masked_softmax_rows(x, &[true; 4]).unwrap();
        assert_eq!(tape.value(p).values(), &[0.25; 4]);

        let x = tape.leaf(Tensor::filled(&[1, 4], 5.0)).unwrap();
        let p = tape.masked_softmax_rows(x, &[true, true, false, false]).unwrap();
        assert_eq!(tape.value(p).values(), &[0.5, 0.5, 0.0, 0.0]);

        let err = tape.masked_softmax_rows(x, &[false; 4]).unwrap_err();
        assert!(matches!(err, Error::DegenerateMask { row: 0 }));
    }

    #[test]
    fn masked_softmax_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(&[6, 6], &mut rng);
        let mut mask = vec![false; 36];
        for r in 0..6 {
            for c in [0, 2, 3, 5] {
                mask[r * 6 + ((c + r) % 6)] = true;
            }
        }
        let mut tape = Tape::new();
        let xv = tape.leaf(x.clone()).unwrap();
        let p = tape.masked_softmax_rows(xv, &mask).unwrap();
        for r in 0..6 {
            let z: f64 = (0..6).filter(|&c| mask[r * 6 + c]).map(|c| x.at2(r, c).exp()).sum();
            for c in 0..6 {
                let expect = if mask[r * 6 + c] { x.at2(r, c).exp() / z } else { 0.0 };
                assert!((tape.value(p).at2(r, c) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn masked_softmax_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mask: Vec<bool> = (0..36).map(|i| i % 3 != 1 || i % 7 == 0).collect();
        check(
            vec![random(&[6, 6], &mut rng)],
            &move |t, v| {
                let p = t.masked_softmax_rows(v[0], &mask).unwrap();
                probe(t, p, 5)
            },
            1e-6,
        );
    }

    #[test]
    fn layer_norm_examples() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::filled(&[1, 4], 1.0)).unwrap();
        let g = tape.leaf(Tensor::filled(&[4], 1.0)).unwrap();
        let b = tape.leaf(Tensor::zeros(&[4])).unwrap();
        let y = tape.layer_norm(x, g, b, 1e-5).unwrap();
        assert!(tape.value(y).values().iter().all(|v| v.abs() < 1e-12));

        let x = tape.leaf(Tensor::from_rows(&[vec![-1.0, 1.0]]).unwrap()).unwrap();
        let g = tape.leaf(Tensor::filled(&[2], 1.0)).unwrap();
        let b = tape.leaf(Tensor::zeros(&[2])).unwrap();
        let y = tape.layer_norm(x, g, b, 1e-5).unwrap();
        let v = tape.value(y).values();
        assert!((v[0] + 1.0).abs() < 1e-5 && (v[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn layer_norm_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let inputs = vec![
            random(&[6, 64], &mut rng),
            random(&[64], &mut rng),
            random(&[64], &mut rng),
        ];
        check(
            inputs,
            &|t, v| {
                let y = t.layer_norm(v[0], v[1], v[2], 1e-5).unwrap();
                probe(t, y, 7)
            },
            1e-5,
        );
    }

    #[test]
    fn layer_norm_tokens_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let inputs = vec![
            random(&[2, 6, 8], &mut rng),
            random(&[8], &mut rng),
            random(&[8], &mut rng),
        ];
        check(
            inputs,
            &|t, v| {
                let y = t.layer_norm_tokens(v[0], v[1], v[2], 1e-5).unwrap();
                probe(t, y, 17)
            },
            1e-5,
        );
    }

    #[test]
    fn cross_entropy_examples() {
        let mut tape = Tape::new();
        let l = tape.leaf(Tensor::zeros(&[3, 4])).unwrap();
        let loss = tape.cross_entropy(l, &[0, 1, 3]).unwrap();
        assert!((tape.value(loss).values()[0] - 4f64.ln()).abs() < 1e-12);

        let l = tape.leaf(Tensor::from_rows(&[vec![10.0, 0.0, 0.0, 0.0]]).unwrap()).unwrap();
        let loss = tape.cross_entropy(l, &[0]).unwrap();
        // ln(1 + 3e^-10)
        let expect = (1.0 + 3.0 * (-10f64).exp()).ln();
        assert!((tape.value(loss).values()[0] - expect).abs() < 1e-15);
        assert!((expect - 1.36e-4).abs() < 1e-6);

        assert!(matches!(
            tape.cross_entropy(l, &[4]),
            Err(Error::Label { label: 4, classes: 4 })
        ));
    }

    #[test]
    fn cross_entropy_gradient() {
        let inputs = vec![Tensor::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap()];
        check(inputs, &|t, v| t.cross_entropy(v[0], &[2]).unwrap(), 1e-6);
    }

    #[test]
    fn gelu_and_group_mean() {
        assert_eq!(gelu_scalar(0.0), 0.0);
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_rows(&[vec![1.0, 3.0], vec![3.0, 5.0]]).unwrap()).unwrap();
        let m = tape.group_mean(x, true).unwrap();
        assert_eq!(tape.value(m).values(), &[2.0, 4.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        check(
            vec![random(&[3, 5], &mut rng)],
            &|t, v| {
                let g = t.gelu(v[0]).unwrap();
                probe(t, g, 1)
            },
            1e-6,
        );
        check(
            vec![random(&[2, 6, 4], &mut rng)],
            &|t, v| {
                let g = t.group_mean(v[0], false).unwrap();
                probe(t, g, 2)
            },
            1e-6,
        );
    }

    #[test]
    fn scores_and_attend_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let inputs = vec![
            random(&[2, 6, 5], &mut rng),
            random(&[2, 6, 5], &mut rng),
            random(&[2, 6, 5], &mut rng),
        ];
        let mask: Vec<bool> = (0..36).map(|i| (i / 6 + i % 6) % 3 != 2).collect();
        for canonical in [false, true] {
            let mask = mask.clone();
            check(
                inputs.clone(),
                &move |t, v| {
                    let s = t.scores(v[0], v[1], 0.5).unwrap();
                    let p = t.masked_softmax_rows(s, &mask).unwrap();
                    let h = t.attend(p, v[2], canonical).unwrap();
                    probe(t, h, 3)
                },
                1e-6,
            );
        }
    }

    #[test]
    fn backward_is_repeatable() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut tape = Tape::new();
        let a = tape.leaf(random(&[3, 4], &mut rng)).unwrap();
        let b = tape.leaf(random(&[4, 2], &mut rng)).unwrap();
        let p = tape.matmul(a, b).unwrap();
        let loss = tape.cross_entropy(p, &[0, 1, 1]).unwrap();
        let g1 = tape.backward(loss).unwrap();
        let g2 = tape.backward(loss).unwrap();
        assert_eq!(g1.get(a), g2.get(a));
        assert_eq!(g1.get(b), g2.get(b));
    }

    #[test]
    fn non_finite_is_an_error() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::filled(&[1, 2], 1e308)).unwrap();
        assert!(matches!(tape.scale(x, 10.0), Err(Error::NonFinite { .. })));
    }
}
