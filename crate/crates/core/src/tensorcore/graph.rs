//! Tape-based reverse-mode differentiation.
//!
//! Every operation appends a node holding its output value; `backward`
//! walks the tape from the loss towards the leaves. Leaf gradients
//! accumulate across `backward` calls until `zero_grad`; interior gradients
//! are recomputed on every call.

use super::kernels::{self, ConvGeometry};
use super::params::ParamSet;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Lower/upper clamp applied to probabilities before taking a log.
pub const LOG_CLAMP: f64 = 1e-7;

/// Triplet margin α.
pub const TRIPLET_MARGIN: f64 = 0.5;

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Conv2d {
        input: Var,
        kernels: Var,
        bias: Var,
        geom: ConvGeometry,
    },
    MaxPool {
        input: Var,
        argmax: Vec<usize>,
    },
    GlobalAvgPool {
        input: Var,
        pixels: usize,
    },
    Dense {
        input: Var,
        weights: Var,
        bias: Var,
    },
    Relu(Var),
    Sigmoid(Var),
    Softmax {
        input: Var,
        axis_len: usize,
    },
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    Sum(Var),
    Bce {
        pred: Var,
        label: f64,
    },
    CategoricalCe {
        pred: Var,
        label: usize,
    },
    TripletEuclidean {
        anchor: Var,
        positive: Var,
        negative: Var,
        dim: usize,
        hinge: bool,
    },
    TripletCosine {
        anchor: Var,
        positive: Var,
        negative: Var,
        dim: usize,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    bindings: Vec<(Var, String)>,
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

    /// Input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Input that receives a gradient.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Copies a named parameter onto the tape and remembers the binding so
    /// [`Graph::accumulate_into`] can hand the gradient back.
    pub fn param(&mut self, params: &ParamSet, name: &str) -> Result<Var> {
        let source = params.get(name)?;
        let value = Tensor::from_parts(source.shape().to_vec(), source.values().to_vec());
        let var = self.push(value, Op::Leaf, true);
        self.bindings.push((var, name.to_string()));
        Ok(var)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].value.grad()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    pub fn conv2d(&mut self, input: Var, kernels: Var, bias: Var) -> Result<Var> {
        let (xs, ks, bs) = (
            self.value(input).shape(),
            self.value(kernels).shape(),
            self.value(bias).shape(),
        );
        if xs.len() != 3 {
            return Err(Error::shape(
                "conv2d",
                format!("input must be H×W×C, got {xs:?}"),
            ));
        }
        if ks.len() != 4 {
            return Err(Error::shape(
                "conv2d",
                format!("kernels must be kh×kw×C×F, got {ks:?}"),
            ));
        }
        if ks[2] != xs[2] {
            return Err(Error::shape(
                "conv2d",
                format!(
                    "input channels {} do not match kernel channels {}",
                    xs[2], ks[2]
                ),
            ));
        }
        if bs != [ks[3]] {
            return Err(Error::shape(
                "conv2d",
                format!("bias length {bs:?} does not match filter count {}", ks[3]),
            ));
        }
        if xs[0] < ks[0] {
            return Err(Error::shape(
                "conv2d",
                format!(
                    "input height {} is smaller than kernel height {}",
                    xs[0], ks[0]
                ),
            ));
        }
        if xs[1] < ks[1] {
            return Err(Error::shape(
                "conv2d",
                format!(
                    "input width {} is smaller than kernel width {}",
                    xs[1], ks[1]
                ),
            ));
        }
        let geom = ConvGeometry {
            height: xs[0],
            width: xs[1],
            in_channels: xs[2],
            kernel_h: ks[0],
            kernel_w: ks[1],
            filters: ks[3],
        };
        let out = kernels::conv2d_forward(
            &geom,
            self.value(input).values(),
            self.value(kernels).values(),
            self.value(bias).values(),
        );
        let shape = vec![geom.out_height(), geom.out_width(), geom.filters];
        let rg = self.needs(&[input, kernels, bias]);
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::Conv2d {
                input,
                kernels,
                bias,
                geom,
            },
            rg,
        ))
    }

    pub fn maxpool2d(&mut self, input: Var) -> Result<Var> {
        let s = self.value(input).shape();
        if s.len() != 3 {
            return Err(Error::shape(
                "maxpool2d",
                format!("input must be H×W×C, got {s:?}"),
            ));
        }
        if s[0] < 2 || s[1] < 2 {
            return Err(Error::shape(
                "maxpool2d",
                format!("height and width must be at least 2, got {}×{}", s[0], s[1]),
            ));
        }
        let (h, w, c) = (s[0], s[1], s[2]);
        let (out, argmax) = kernels::maxpool2x2_forward(self.value(input).values(), h, w, c);
        let rg = self.needs(&[input]);
        Ok(self.push(
            Tensor::from_parts(vec![h / 2, w / 2, c], out),
            Op::MaxPool { input, argmax },
            rg,
        ))
    }

    pub fn global_avg_pool(&mut self, input: Var) -> Result<Var> {
        let s = self.value(input).shape();
        if s.len() != 3 {
            return Err(Error::shape(
                "global_avg_pool",
                format!("input must be H×W×C, got {s:?}"),
            ));
        }
        let (pixels, c) = (s[0] * s[1], s[2]);
        let mut out = vec![0.0; c];
        for px in self.value(input).values().chunks_exact(c) {
            for (o, v) in out.iter_mut().zip(px) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o /= pixels as f64);
        let rg = self.needs(&[input]);
        Ok(self.push(
            Tensor::from_parts(vec![c], out),
            Op::GlobalAvgPool { input, pixels },
            rg,
        ))
    }

    /// Affine map of the flattened input: `x · W + b` with `W` of shape n×m.
    pub fn dense(&mut self, input: Var, weights: Var, bias: Var) -> Result<Var> {
        let n = self.value(input).numel();
        let ws = self.value(weights).shape();
        let m = self.value(bias).numel();
        if ws.len() != 2 || ws[0] != n || ws[1] != m {
            return Err(Error::shape(
                "dense",
                format!("input length {n} and bias length {m} require weights {n}×{m}, got {ws:?}"),
            ));
        }
        let out = kernels::dense_forward(
            self.value(input).values(),
            self.value(weights).values(),
            self.value(bias).values(),
        );
        let rg = self.needs(&[input, weights, bias]);
        Ok(self.push(
            Tensor::from_parts(vec![m], out),
            Op::Dense {
                input,
                weights,
                bias,
            },
            rg,
        ))
    }

    fn map(&mut self, input: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let x = self.value(input);
        let out = Tensor::from_parts(
            x.shape().to_vec(),
            x.values().iter().map(|&v| f(v)).collect(),
        );
        let rg = self.needs(&[input]);
        self.push(out, op, rg)
    }

    pub fn relu(&mut self, input: Var) -> Var {
        self.map(input, Op::Relu(input), |v| v.max(0.0))
    }

    pub fn sigmoid(&mut self, input: Var) -> Var {
        self.map(input, Op::Sigmoid(input), sigmoid)
    }

    /// Softmax over the last axis, stabilized by subtracting the row maximum.
    pub fn softmax(&mut self, input: Var) -> Var {
        let x = self.value(input);
        let axis_len = *x.shape().last().unwrap();
        let mut out = x.values().to_vec();
        for row in out.chunks_exact_mut(axis_len) {
            softmax_in_place(row);
        }
        let out = Tensor::from_parts(x.shape().to_vec(), out);
        let rg = self.needs(&[input]);
        self.push(out, Op::Softmax { input, axis_len }, rg)
    }

    fn binary(
        &mut self,
        a: Var,
        b: Var,
        name: &'static str,
        op: Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(Error::shape(
                name,
                format!("operands have shapes {:?} and {:?}", x.shape(), y.shape()),
            ));
        }
        let out = Tensor::from_parts(
            x.shape().to_vec(),
            x.values()
                .iter()
                .zip(y.values())
                .map(|(&p, &q)| f(p, q))
                .collect(),
        );
        let rg = self.needs(&[a, b]);
        Ok(self.push(out, op, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "add", Op::Add(a, b), |p, q| p + q)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "sub", Op::Sub(a, b), |p, q| p - q)
    }

    pub fn scale(&mut self, input: Var, factor: f64) -> Var {
        self.map(input, Op::Scale(input, factor), |v| v * factor)
    }

    pub fn sum(&mut self, input: Var) -> Var {
        let s: f64 = self.value(input).values().iter().sum();
        let rg = self.needs(&[input]);
        self.push(Tensor::scalar(s), Op::Sum(input), rg)
    }

    /// Binary cross-entropy of a single probability against a 0/1 label.
    pub fn bce_loss(&mut self, pred: Var, label: f64) -> Result<Var> {
        let p = self
            .value(pred)
            .item()
            .ok_or_else(|| Error::shape("bce_loss", "prediction must be a single value"))?;
        if label != 0.0 && label != 1.0 {
            return Err(Error::invalid(format!(
                "bce label must be 0 or 1, got {label}"
            )));
        }
        let pc = p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
        let loss = -(label * pc.ln() + (1.0 - label) * (1.0 - pc).ln());
        let rg = self.needs(&[pred]);
        Ok(self.push(Tensor::scalar(loss), Op::Bce { pred, label }, rg))
    }

    /// `-ln(pred[label])` for an already-normalized probability vector.
    pub fn categorical_ce_loss(&mut self, pred: Var, label: usize) -> Result<Var> {
        let p = self.value(pred);
        if p.rank() != 1 {
            return Err(Error::shape(
                "categorical_ce_loss",
                format!("prediction must be a vector, got {:?}", p.shape()),
            ));
        }
        if label >= p.numel() {
            return Err(Error::invalid(format!(
                "class label {label} outside [0, {})",
                p.numel()
            )));
        }
        let pc = p.values()[label].clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
        let rg = self.needs(&[pred]);
        Ok(self.push(
            Tensor::scalar(-pc.ln()),
            Op::CategoricalCe { pred, label },
            rg,
        ))
    }

    fn triplet_dims(&self, name: &'static str, a: Var, p: Var, n: Var) -> Result<usize> {
        let sa = self.value(a).shape();
        for other in [p, n] {
            if self.value(other).shape() != sa {
                return Err(Error::shape(
                    name,
                    format!(
                        "embeddings have shapes {:?} and {:?}",
                        sa,
                        self.value(other).shape()
                    ),
                ));
            }
        }
        if sa.len() > 2 {
            return Err(Error::shape(
                name,
                format!("expected [d] or [N, d], got {sa:?}"),
            ));
        }
        Ok(*sa.last().unwrap())
    }

    /// Mean over rows of `max(‖a−p‖² − ‖a−n‖² + α, 0)`; with `hinge` off the
    /// bracket is used as-is.
    pub fn triplet_euclidean_loss(
        &mut self,
        anchor: Var,
        positive: Var,
        negative: Var,
        hinge: bool,
    ) -> Result<Var> {
        let dim = self.triplet_dims("triplet_euclidean_loss", anchor, positive, negative)?;
        let (a, p, n) = (
            self.value(anchor).values(),
            self.value(positive).values(),
            self.value(negative).values(),
        );
        let rows = a.len() / dim;
        let total: f64 = (0..rows)
            .map(|r| {
                let s = r * dim..(r + 1) * dim;
                let z = squared_distance(&a[s.clone()], &p[s.clone()])
                    - squared_distance(&a[s.clone()], &n[s])
                    + TRIPLET_MARGIN;
                if hinge {
                    z.max(0.0)
                } else {
                    z
                }
            })
            .sum();
        let rg = self.needs(&[anchor, positive, negative]);
        Ok(self.push(
            Tensor::scalar(total / rows as f64),
            Op::TripletEuclidean {
                anchor,
                positive,
                negative,
                dim,
                hinge,
            },
            rg,
        ))
    }

    /// Mean over rows of `max(cos(a,p) − cos(a,n) + α, 0)`.
    pub fn triplet_cosine_loss(
        &mut self,
        anchor: Var,
        positive: Var,
        negative: Var,
    ) -> Result<Var> {
        let dim = self.triplet_dims("triplet_cosine_loss", anchor, positive, negative)?;
        let (a, p, n) = (
            self.value(anchor).values(),
            self.value(positive).values(),
            self.value(negative).values(),
        );
        let rows = a.len() / dim;
        let total: f64 = (0..rows)
            .map(|r| {
                let s = r * dim..(r + 1) * dim;
                (cosine_similarity(&a[s.clone()], &p[s.clone()])
                    - cosine_similarity(&a[s.clone()], &n[s])
                    + TRIPLET_MARGIN)
                    .max(0.0)
            })
            .sum();
        let rg = self.needs(&[anchor, positive, negative]);
        Ok(self.push(
            Tensor::scalar(total / rows as f64),
            Op::TripletCosine {
                anchor,
                positive,
                negative,
                dim,
            },
            rg,
        ))
    }

    /// Zeroes every gradient on the tape, leaves included.
    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.value.set_grad(None);
        }
    }

    /// Reverse sweep from a single-valued `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).numel() != 1 {
            return Err(Error::shape(
                "backward",
                format!(
                    "loss must be a single value, got shape {:?}",
                    self.value(loss).shape()
                ),
            ));
        }
        for node in &mut self.nodes {
            if !matches!(node.op, Op::Leaf) {
                node.value.set_grad(None);
            }
        }
        self.nodes[loss.0].value.accumulate_grad(&[1.0]);
        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad || matches!(self.nodes[idx].op, Op::Leaf) {
                continue;
            }
            let Some(grad) = self.nodes[idx].value.take_grad() else {
                continue;
            };
            self.propagate(idx, &grad);
            self.nodes[idx].value.set_grad(Some(grad));
        }
        Ok(())
    }

    fn propagate(&mut self, idx: usize, g: &[f64]) {
        // Split so the producing node can be read while inputs are written.
        let (before, rest) = self.nodes.split_at_mut(idx);
        let node = &rest[0];
        let out = node.value.values();
        match &node.op {
            Op::Leaf => {}
            Op::Conv2d {
                input,
                kernels,
                bias,
                geom,
            } => {
                let mut dk = vec![0.0; before[kernels.0].value.numel()];
                let mut db = vec![0.0; geom.filters];
                let mut dx = before[input.0]
                    .requires_grad
                    .then(|| vec![0.0; before[input.0].value.numel()]);
                kernels::conv2d_backward(
                    geom,
                    before[input.0].value.values(),
                    before[kernels.0].value.values(),
                    g,
                    dx.as_deref_mut(),
                    &mut dk,
                    &mut db,
                );
                let (input, kernels, bias) = (*input, *kernels, *bias);
                if let Some(dx) = dx {
                    before[input.0].value.accumulate_grad_owned(dx);
                }
                accumulate_owned(before, kernels, dk);
                accumulate_owned(before, bias, db);
            }
            Op::MaxPool { input, argmax } => {
                let mut dx = vec![0.0; before[input.0].value.numel()];
                for (&src, &d) in argmax.iter().zip(g) {
                    dx[src] += d;
                }
                accumulate_owned(before, *input, dx);
            }
            Op::GlobalAvgPool { input, pixels } => {
                let n = before[input.0].value.numel();
                let scale = 1.0 / *pixels as f64;
                let dx: Vec<f64> = (0..n).map(|i| g[i % g.len()] * scale).collect();
                accumulate_owned(before, *input, dx);
            }
            Op::Dense {
                input,
                weights,
                bias,
            } => {
                let m = g.len();
                if before[input.0].requires_grad {
                    let w = before[weights.0].value.values();
                    let dx: Vec<f64> = w
                        .chunks_exact(m)
                        .map(|row| row.iter().zip(g).map(|(a, b)| a * b).sum())
                        .collect();
                    before[input.0].value.accumulate_grad_owned(dx);
                }
                if before[weights.0].requires_grad {
                    let x = before[input.0].value.values().to_vec();
                    let dw = before[weights.0].value.grad_mut();
                    for (&xi, row) in x.iter().zip(dw.chunks_exact_mut(m)) {
                        for (d, &gj) in row.iter_mut().zip(g) {
                            *d += xi * gj;
                        }
                    }
                }
                accumulate(before, *bias, g);
            }
            Op::Relu(input) => {
                let dx: Vec<f64> = out
                    .iter()
                    .zip(g)
                    .map(|(&y, &d)| if y > 0.0 { d } else { 0.0 })
                    .collect();
                accumulate_owned(before, *input, dx);
            }
            Op::Sigmoid(input) => {
                let dx: Vec<f64> = out
                    .iter()
                    .zip(g)
                    .map(|(&y, &d)| d * y * (1.0 - y))
                    .collect();
                accumulate_owned(before, *input, dx);
            }
            Op::Softmax { input, axis_len } => {
                let mut dx = Vec::with_capacity(out.len());
                for (y, d) in out.chunks_exact(*axis_len).zip(g.chunks_exact(*axis_len)) {
                    let s: f64 = y.iter().zip(d).map(|(a, b)| a * b).sum();
                    dx.extend(y.iter().zip(d).map(|(&yi, &di)| yi * (di - s)));
                }
                accumulate_owned(before, *input, dx);
            }
            Op::Add(a, b) => {
                accumulate(before, *a, g);
                accumulate(before, *b, g);
            }
            Op::Sub(a, b) => {
                accumulate(before, *a, g);
                let neg: Vec<f64> = g.iter().map(|d| -d).collect();
                accumulate_owned(before, *b, neg);
            }
            Op::Scale(input, factor) => {
                let dx: Vec<f64> = g.iter().map(|d| d * factor).collect();
                accumulate_owned(before, *input, dx);
            }
            Op::Sum(input) => {
                let dx = vec![g[0]; before[input.0].value.numel()];
                accumulate_owned(before, *input, dx);
            }
            Op::Bce { pred, label } => {
                let p = before[pred.0].value.values()[0];
                let d = if !(LOG_CLAMP..=1.0 - LOG_CLAMP).contains(&p) {
                    0.0
                } else {
                    -label / p + (1.0 - label) / (1.0 - p)
                };
                accumulate(before, *pred, &[g[0] * d]);
            }
            Op::CategoricalCe { pred, label } => {
                let p = before[pred.0].value.values();
                let mut dx = vec![0.0; p.len()];
                let pl = p[*label];
                if (LOG_CLAMP..=1.0 - LOG_CLAMP).contains(&pl) {
                    dx[*label] = -g[0] / pl;
                }
                accumulate_owned(before, *pred, dx);
            }
            Op::TripletEuclidean {
                anchor,
                positive,
                negative,
                dim,
                hinge,
            } => {
                let (a, p, n) = (
                    before[anchor.0].value.values(),
                    before[positive.0].value.values(),
                    before[negative.0].value.values(),
                );
                let rows = a.len() / dim;
                let scale = g[0] / rows as f64;
                let mut da = vec![0.0; a.len()];
                let mut dp = vec![0.0; a.len()];
                let mut dn = vec![0.0; a.len()];
                for r in 0..rows {
                    let s = r * dim..(r + 1) * dim;
                    let z = squared_distance(&a[s.clone()], &p[s.clone()])
                        - squared_distance(&a[s.clone()], &n[s.clone()])
                        + TRIPLET_MARGIN;
                    if *hinge && z <= 0.0 {
                        continue;
                    }
                    for i in s {
                        // d/da (‖a−p‖² − ‖a−n‖²) = 2(n − p)
                        da[i] += scale * 2.0 * (n[i] - p[i]);
                        dp[i] += scale * -2.0 * (a[i] - p[i]);
                        dn[i] += scale * 2.0 * (a[i] - n[i]);
                    }
                }
                let (anchor, positive, negative) = (*anchor, *positive, *negative);
                accumulate_owned(before, anchor, da);
                accumulate_owned(before, positive, dp);
                accumulate_owned(before, negative, dn);
            }
            Op::TripletCosine {
                anchor,
                positive,
                negative,
                dim,
            } => {
                let (a, p, n) = (
                    before[anchor.0].value.values(),
                    before[positive.0].value.values(),
                    before[negative.0].value.values(),
                );
                let rows = a.len() / dim;
                let scale = g[0] / rows as f64;
                let mut da = vec![0.0; a.len()];
                let mut dp = vec![0.0; a.len()];
                let mut dn = vec![0.0; a.len()];
                for r in 0..rows {
                    let s = r * dim..(r + 1) * dim;
                    let (ar, pr, nr) = (&a[s.clone()], &p[s.clone()], &n[s.clone()]);
                    let z = cosine_similarity(ar, pr) - cosine_similarity(ar, nr) + TRIPLET_MARGIN;
                    if z <= 0.0 {
                        continue;
                    }
                    let (ga_p, gp) = cosine_grads(ar, pr);
                    let (ga_n, gn) = cosine_grads(ar, nr);
                    for (k, i) in s.enumerate() {
                        da[i] += scale * (ga_p[k] - ga_n[k]);
                        dp[i] += scale * gp[k];
                        dn[i] -= scale * gn[k];
                    }
                }
                let (anchor, positive, negative) = (*anchor, *positive, *negative);
                accumulate_owned(before, anchor, da);
                accumulate_owned(before, positive, dp);
                accumulate_owned(before, negative, dn);
            }
        }
    }

    /// Adds the gradient of every parameter bound with [`Graph::param`] to
    /// the matching tensor in `params`.
    pub fn accumulate_into(&self, params: &mut ParamSet) -> Result<()> {
        for (var, name) in &self.bindings {
            if let Some(g) = self.grad(*var) {
                params.get_mut(name)?.accumulate_grad(g);
            }
        }
        Ok(())
    }
}

fn accumulate(nodes: &mut [Node], v: Var, delta: &[f64]) {
    let node = &mut nodes[v.0];
    if node.requires_grad {
        node.value.accumulate_grad(delta);
    }
}

fn accumulate_owned(nodes: &mut [Node], v: Var, delta: Vec<f64>) {
    let node = &mut nodes[v.0];
    if node.requires_grad {
        node.value.accumulate_grad_owned(delta);
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
}

/// Partial derivatives of cos(a, b) with respect to `a` and `b`.
fn cosine_grads(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return (vec![0.0; a.len()], vec![0.0; b.len()]);
    }
    let c = cosine_similarity(a, b);
    let ga = a
        .iter()
        .zip(b)
        .map(|(x, y)| y / (na * nb) - c * x / (na * na))
        .collect();
    let gb = a
        .iter()
        .zip(b)
        .map(|(x, y)| x / (na * nb) - c * y / (nb * nb))
        .collect();
    (ga, gb)
}
