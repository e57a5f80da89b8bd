//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Every operation on a [`Var`] appends one node to its [`Tape`]. Node ids
//! grow monotonically, so iterating ids in decreasing order is a reverse
//! topological order of the recorded DAG and each node is visited once.

use std::cell::RefCell;
use std::rc::Rc;

use super::dense::{split_axis, Tensor};
use crate::error::{Error, Result};

/// Probability clamp used by every log-based loss.
pub const PROB_CLIP: f64 = 1e-7;

/// Weighted neighbour-sum pattern: for every arc `a`, row `receivers[a]` of
/// the output accumulates `norm[a] * coef[a] * h[senders[a]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MessagePlan {
    pub num_nodes: usize,
    pub receivers: Vec<usize>,
    pub senders: Vec<usize>,
    pub norm: Vec<f64>,
}

impl MessagePlan {
    pub fn num_arcs(&self) -> usize {
        self.receivers.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BinaryKind {
    Add,
    Sub,
    Mul,
}

/// How the right operand of a binary op maps onto the left operand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Broadcast {
    Same,
    /// rhs is `[c]` or `[1, c]` against lhs `[n, c]`
    Row(usize),
    /// rhs is `[n, 1]` against lhs `[n, c]`
    Col(usize),
    Scalar,
}

impl Broadcast {
    fn resolve(lhs: &[usize], rhs: &[usize]) -> Result<Self> {
        if lhs == rhs {
            return Ok(Broadcast::Same);
        }
        let rhs_len: usize = rhs.iter().product();
        if rhs_len == 1 {
            return Ok(Broadcast::Scalar);
        }
        if let [n, c] = *lhs {
            if rhs == [c] || rhs == [1, c] {
                return Ok(Broadcast::Row(c));
            }
            if rhs == [n, 1] {
                return Ok(Broadcast::Col(c));
            }
        }
        Err(Error::shape(format!(
            "cannot combine shapes {lhs:?} and {rhs:?}"
        )))
    }

    #[inline]
    fn index(self, k: usize) -> usize {
        match self {
            Broadcast::Same => k,
            Broadcast::Row(c) => k % c,
            Broadcast::Col(c) => k / c,
            Broadcast::Scalar => 0,
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul,
    Transpose,
    Binary(BinaryKind, Broadcast),
    Scale(f64),
    Sigmoid,
    Relu,
    LeakyRelu(f64),
    Exp,
    Log,
    Reduce { mean: bool, axis: Option<usize> },
    Concat { axis: usize, widths: Vec<usize> },
    Slice { axis: usize, start: usize },
    Reshape,
    Softmax { axis: usize },
    GatherRows(Rc<[usize]>),
    Propagate { plan: Rc<MessagePlan>, weighted: bool },
    Bce { target: Vec<f64> },
    CrossEntropy { targets: Vec<usize> },
    Nll { targets: Vec<usize> },
    L1 { target: Vec<f64> },
}

struct Node {
    value: Tensor,
    op: Op,
    inputs: Vec<usize>,
    tracked: bool,
}

/// Record of the operations performed during one forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var")
            .field("id", &self.id)
            .field("shape", &self.shape())
            .finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records `tensor` as an input. Gradients flow into it only if
    /// `tensor.requires_grad()` is set.
    pub fn leaf(&self, tensor: Tensor) -> Var<'_> {
        let tracked = tensor.requires_grad();
        let value = Tensor::new(tensor.shape().to_vec(), tensor.into_data())
            .expect("tensor invariants hold");
        self.push_raw(value, Op::Leaf, Vec::new(), tracked)
    }

    /// Records a trainable input.
    pub fn param(&self, tensor: Tensor) -> Var<'_> {
        self.leaf(tensor.with_requires_grad(true))
    }

    /// Records a constant input.
    pub fn constant(&self, tensor: Tensor) -> Var<'_> {
        self.leaf(tensor.with_requires_grad(false))
    }

    fn push_raw(&self, value: Tensor, op: Op, inputs: Vec<usize>, tracked: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            inputs,
            tracked,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn push(&self, value: Tensor, op: Op, inputs: Vec<usize>) -> Var<'_> {
        let tracked = {
            let nodes = self.nodes.borrow();
            inputs.iter().any(|&i| nodes[i].tracked)
        };
        self.push_raw(value, op, inputs, tracked)
    }

    fn check_owner(&self, v: Var<'_>) {
        assert!(
            std::ptr::eq(self, v.tape),
            "Var belongs to a different tape"
        );
    }

    /// Concatenates `parts` along `axis`.
    pub fn concat<'t>(&'t self, parts: &[Var<'t>], axis: usize) -> Result<Var<'t>> {
        if parts.is_empty() {
            return Err(Error::shape("concat of zero tensors"));
        }
        for p in parts {
            self.check_owner(*p);
        }
        let (value, widths) = {
            let nodes = self.nodes.borrow();
            let first = nodes[parts[0].id].value.shape().to_vec();
            split_axis(&first, axis)?;
            let mut widths = Vec::with_capacity(parts.len());
            for p in parts {
                let s = nodes[p.id].value.shape();
                let same_rank = s.len() == first.len();
                let others_agree = same_rank
                    && s.iter()
                        .zip(&first)
                        .enumerate()
                        .all(|(d, (a, b))| d == axis || a == b);
                if !others_agree {
                    return Err(Error::shape(format!(
                        "concat along axis {axis}: shape {s:?} does not match {first:?}"
                    )));
                }
                widths.push(s[axis]);
            }
            let total: usize = widths.iter().sum();
            let mut shape = first.clone();
            shape[axis] = total;
            let (outer, _, inner) = split_axis(&shape, axis)?;
            let mut data = vec![0.0; outer * total * inner];
            let mut offset = 0;
            for (p, &w) in parts.iter().zip(&widths) {
                let src = nodes[p.id].value.data();
                for o in 0..outer {
                    let dst_start = (o * total + offset) * inner;
                    let src_start = o * w * inner;
                    data[dst_start..dst_start + w * inner]
                        .copy_from_slice(&src[src_start..src_start + w * inner]);
                }
                offset += w;
            }
            (Tensor::new(shape, data)?, widths)
        };
        Ok(self.push(
            value,
            Op::Concat { axis, widths },
            parts.iter().map(|p| p.id).collect(),
        ))
    }

    /// Runs reverse-mode differentiation from a scalar `loss`.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients> {
        self.check_owner(loss);
        let nodes = self.nodes.borrow();
        if nodes[loss.id].value.len() != 1 {
            return Err(Error::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                nodes[loss.id].value.shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.id + 1];
        grads[loss.id] = Some(vec![1.0]);
        for id in (0..=loss.id).rev() {
            let node = &nodes[id];
            if !node.tracked || node.inputs.is_empty() {
                continue;
            }
            let Some(g) = grads[id].take() else {
                continue;
            };
            backprop_node(&nodes, node, &g, &mut grads);
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

/// Gradient buffers produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`, or `None` when no path
    /// connects them.
    pub fn get(&self, v: Var<'_>) -> Option<&[f64]> {
        self.grads.get(v.id).and_then(|g| g.as_deref())
    }

    /// Gradient with respect to `v` as a tensor of `v`'s shape; zeros when
    /// `v` does not influence the loss.
    pub fn wrt(&self, v: Var<'_>) -> Tensor {
        let shape = v.shape();
        match self.get(v) {
            Some(g) => Tensor::new(shape, g.to_vec()).expect("gradient matches value shape"),
            None => Tensor::zeros(&shape),
        }
    }
}

fn slot<'a>(grads: &'a mut [Option<Vec<f64>>], id: usize, len: usize) -> &'a mut [f64] {
    grads[id].get_or_insert_with(|| vec![0.0; len])
}

fn backprop_node(nodes: &[Node], node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
    let input = |k: usize| &nodes[node.inputs[k]];
    let wants = |k: usize| nodes[node.inputs[k]].tracked;
    let y = node.value.data();

    match &node.op {
        Op::Leaf => {}
        Op::MatMul => {
            let a = &input(0).value;
            let b = &input(1).value;
            let (m, k) = a.dims2().expect("matmul lhs is a matrix");
            let n = b.dims2().expect("matmul rhs is a matrix").1;
            let (ad, bd) = (a.data(), b.data());
            if wants(0) {
                let ga = slot(grads, node.inputs[0], m * k);
                for i in 0..m {
                    let grow = &g[i * n..(i + 1) * n];
                    for p in 0..k {
                        let brow = &bd[p * n..(p + 1) * n];
                        ga[i * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                    }
                }
            }
            if wants(1) {
                let gb = slot(grads, node.inputs[1], k * n);
                for i in 0..m {
                    let grow = &g[i * n..(i + 1) * n];
                    for p in 0..k {
                        let aip = ad[i * k + p];
                        if aip == 0.0 {
                            continue;
                        }
                        for (dst, gv) in gb[p * n..(p + 1) * n].iter_mut().zip(grow) {
                            *dst += aip * gv;
                        }
                    }
                }
            }
        }
        Op::Transpose => {
            let (r, c) = input(0).value.dims2().expect("transpose of a matrix");
            let gx = slot(grads, node.inputs[0], r * c);
            for i in 0..r {
                for j in 0..c {
                    gx[i * c + j] += g[j * r + i];
                }
            }
        }
        Op::Binary(kind, bc) => {
            let a = input(0).value.data();
            let b = input(1).value.data();
            if wants(0) {
                let ga = slot(grads, node.inputs[0], a.len());
                match kind {
                    BinaryKind::Add | BinaryKind::Sub => {
                        ga.iter_mut().zip(g).for_each(|(d, gv)| *d += gv);
                    }
                    BinaryKind::Mul => {
                        for (k, d) in ga.iter_mut().enumerate() {
                            *d += g[k] * b[bc.index(k)];
                        }
                    }
                }
            }
            if wants(1) {
                let gb = slot(grads, node.inputs[1], b.len());
                for k in 0..a.len() {
                    let contrib = match kind {
                        BinaryKind::Add => g[k],
                        BinaryKind::Sub => -g[k],
                        BinaryKind::Mul => g[k] * a[k],
                    };
                    gb[bc.index(k)] += contrib;
                }
            }
        }
        Op::Scale(s) => {
            let gx = slot(grads, node.inputs[0], g.len());
            gx.iter_mut().zip(g).for_each(|(d, gv)| *d += s * gv);
        }
        Op::Sigmoid => {
            let gx = slot(grads, node.inputs[0], g.len());
            for k in 0..g.len() {
                gx[k] += g[k] * y[k] * (1.0 - y[k]);
            }
        }
        Op::Relu | Op::LeakyRelu(_) => {
            let slope = match node.op {
                Op::LeakyRelu(s) => s,
                _ => 0.0,
            };
            let x = input(0).value.data();
            let gx = slot(grads, node.inputs[0], g.len());
            for k in 0..g.len() {
                gx[k] += if x[k] > 0.0 { g[k] } else { slope * g[k] };
            }
        }
        Op::Exp => {
            let gx = slot(grads, node.inputs[0], g.len());
            for k in 0..g.len() {
                gx[k] += g[k] * y[k];
            }
        }
        Op::Log => {
            let x = input(0).value.data();
            let gx = slot(grads, node.inputs[0], g.len());
            for k in 0..g.len() {
                gx[k] += g[k] / x[k];
            }
        }
        Op::Reduce { mean, axis } => {
            let xshape = input(0).value.shape();
            let n_in = input(0).value.len();
            let gx = slot(grads, node.inputs[0], n_in);
            match axis {
                None => {
                    let f = if *mean { g[0] / n_in as f64 } else { g[0] };
                    gx.iter_mut().for_each(|d| *d += f);
                }
                Some(axis) => {
                    let (outer, len, inner) = split_axis(xshape, *axis).expect("validated axis");
                    let f = if *mean { 1.0 / len as f64 } else { 1.0 };
                    for o in 0..outer {
                        for a in 0..len {
                            for i in 0..inner {
                                gx[(o * len + a) * inner + i] += f * g[o * inner + i];
                            }
                        }
                    }
                }
            }
        }
        Op::Concat { axis, widths } => {
            let total: usize = widths.iter().sum();
            let (outer, _, inner) = split_axis(node.value.shape(), *axis).expect("validated axis");
            let mut offset = 0;
            for (k, &w) in widths.iter().enumerate() {
                if wants(k) {
                    let gx = slot(grads, node.inputs[k], outer * w * inner);
                    for o in 0..outer {
                        let src = (o * total + offset) * inner;
                        let dst = o * w * inner;
                        for t in 0..w * inner {
                            gx[dst + t] += g[src + t];
                        }
                    }
                }
                offset += w;
            }
        }
        Op::Slice { axis, start } => {
            let xshape = input(0).value.shape();
            let (outer, total, inner) = split_axis(xshape, *axis).expect("validated axis");
            let w = node.value.shape()[*axis];
            let gx = slot(grads, node.inputs[0], outer * total * inner);
            for o in 0..outer {
                let dst = (o * total + start) * inner;
                let src = o * w * inner;
                for t in 0..w * inner {
                    gx[dst + t] += g[src + t];
                }
            }
        }
        Op::Reshape => {
            let gx = slot(grads, node.inputs[0], g.len());
            gx.iter_mut().zip(g).for_each(|(d, gv)| *d += gv);
        }
        Op::Softmax { axis } => {
            let (outer, len, inner) = split_axis(node.value.shape(), *axis).expect("validated axis");
            let gx = slot(grads, node.inputs[0], g.len());
            for o in 0..outer {
                for i in 0..inner {
                    let idx = |a: usize| (o * len + a) * inner + i;
                    let dot: f64 = (0..len).map(|a| g[idx(a)] * y[idx(a)]).sum();
                    for a in 0..len {
                        gx[idx(a)] += y[idx(a)] * (g[idx(a)] - dot);
                    }
                }
            }
        }
        Op::GatherRows(rows) => {
            let x = &input(0).value;
            let (_, c) = x.dims2().expect("gather from a matrix");
            let gx = slot(grads, node.inputs[0], x.len());
            for (r, &src) in rows.iter().enumerate() {
                for j in 0..c {
                    gx[src * c + j] += g[r * c + j];
                }
            }
        }
        Op::Propagate { plan, weighted } => {
            let h = &input(0).value;
            let (_, f) = h.dims2().expect("propagate over a matrix");
            let hd = h.data();
            let coef = weighted.then(|| input(1).value.data());
            let weight = |a: usize| plan.norm[a] * coef.map_or(1.0, |c| c[a]);
            if wants(0) {
                let gh = slot(grads, node.inputs[0], h.len());
                for a in 0..plan.num_arcs() {
                    let (i, j) = (plan.receivers[a], plan.senders[a]);
                    let w = weight(a);
                    for t in 0..f {
                        gh[j * f + t] += w * g[i * f + t];
                    }
                }
            }
            if *weighted && wants(1) {
                let gc = slot(grads, node.inputs[1], plan.num_arcs());
                for a in 0..plan.num_arcs() {
                    let (i, j) = (plan.receivers[a], plan.senders[a]);
                    let dot: f64 = (0..f).map(|t| g[i * f + t] * hd[j * f + t]).sum();
                    gc[a] += plan.norm[a] * dot;
                }
            }
        }
        Op::Bce { target } => {
            let p = input(0).value.data();
            let n = p.len() as f64;
            let gx = slot(grads, node.inputs[0], p.len());
            for k in 0..p.len() {
                if p[k] > PROB_CLIP && p[k] < 1.0 - PROB_CLIP {
                    let t = target[k];
                    gx[k] += g[0] * (-t / p[k] + (1.0 - t) / (1.0 - p[k])) / n;
                }
            }
        }
        Op::CrossEntropy { targets } => {
            let x = &input(0).value;
            let (rows, cols) = x.dims2().expect("logits are a matrix");
            let gx = slot(grads, node.inputs[0], x.len());
            let scale = g[0] / rows as f64;
            for (r, &t) in targets.iter().enumerate() {
                let probs = softmax_slice(x.row(r));
                for c in 0..cols {
                    let onehot = if c == t { 1.0 } else { 0.0 };
                    gx[r * cols + c] += scale * (probs[c] - onehot);
                }
            }
        }
        Op::Nll { targets } => {
            let x = &input(0).value;
            let (rows, cols) = x.dims2().expect("probabilities are a matrix");
            let gx = slot(grads, node.inputs[0], x.len());
            for (r, &t) in targets.iter().enumerate() {
                let p = x.data()[r * cols + t];
                if p > PROB_CLIP && p < 1.0 - PROB_CLIP {
                    gx[r * cols + t] -= g[0] / (rows as f64 * p);
                }
            }
        }
        Op::L1 { target } => {
            let p = input(0).value.data();
            let n = p.len() as f64;
            let gx = slot(grads, node.inputs[0], p.len());
            for k in 0..p.len() {
                let d = p[k] - target[k];
                let s = if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                gx[k] += g[0] * s / n;
            }
        }
    }
}

fn softmax_slice(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Logistic function, kept inside the open interval (0, 1) under rounding.
pub fn sigmoid(x: f64) -> f64 {
    let y = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    /// Copy of the recorded forward value.
    pub fn value(&self) -> Tensor {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape().to_vec()
    }

    pub fn item(&self) -> f64 {
        self.tape.nodes.borrow()[self.id].value.item()
    }

    pub fn data(&self) -> Vec<f64> {
        self.tape.nodes.borrow()[self.id].value.data().to_vec()
    }

    fn with_value<R>(&self, f: impl FnOnce(&Tensor) -> R) -> R {
        f(&self.tape.nodes.borrow()[self.id].value)
    }

    fn unary(self, op: Op, f: impl Fn(f64) -> f64) -> Var<'t> {
        let value = self.with_value(|x| {
            let data = x.data().iter().map(|&v| f(v)).collect();
            Tensor::new(x.shape().to_vec(), data).expect("same shape")
        });
        self.tape.push(value, op, vec![self.id])
    }

    fn binary(self, rhs: Var<'t>, kind: BinaryKind) -> Result<Var<'t>> {
        self.tape.check_owner(rhs);
        let value = {
            let nodes = self.tape.nodes.borrow();
            let a = &nodes[self.id].value;
            let b = &nodes[rhs.id].value;
            let bc = Broadcast::resolve(a.shape(), b.shape())?;
            let (ad, bd) = (a.data(), b.data());
            let data = (0..ad.len())
                .map(|k| {
                    let (x, y) = (ad[k], bd[bc.index(k)]);
                    match kind {
                        BinaryKind::Add => x + y,
                        BinaryKind::Sub => x - y,
                        BinaryKind::Mul => x * y,
                    }
                })
                .collect();
            (Tensor::new(a.shape().to_vec(), data)?, bc)
        };
        Ok(self
            .tape
            .push(value.0, Op::Binary(kind, value.1), vec![self.id, rhs.id]))
    }

    pub fn matmul(self, rhs: Var<'t>) -> Result<Var<'t>> {
        self.tape.check_owner(rhs);
        let value = {
            let nodes = self.tape.nodes.borrow();
            let a = &nodes[self.id].value;
            let b = &nodes[rhs.id].value;
            let (m, k) = a.dims2()?;
            let (k2, n) = b.dims2()?;
            if k != k2 {
                return Err(Error::shape(format!(
                    "matmul inner dimensions differ: [{m}, {k}] x [{k2}, {n}]"
                )));
            }
            let (ad, bd) = (a.data(), b.data());
            let mut out = vec![0.0; m * n];
            for i in 0..m {
                let orow = &mut out[i * n..(i + 1) * n];
                for p in 0..k {
                    let aip = ad[i * k + p];
                    if aip == 0.0 {
                        continue;
                    }
                    for (o, bv) in orow.iter_mut().zip(&bd[p * n..(p + 1) * n]) {
                        *o += aip * bv;
                    }
                }
            }
            Tensor::matrix(m, n, out)?
        };
        Ok(self.tape.push(value, Op::MatMul, vec![self.id, rhs.id]))
    }

    pub fn transpose(self) -> Result<Var<'t>> {
        let value = self.with_value(|x| -> Result<Tensor> {
            let (r, c) = x.dims2()?;
            let d = x.data();
            let mut out = vec![0.0; r * c];
            for i in 0..r {
                for j in 0..c {
                    out[j * r + i] = d[i * c + j];
                }
            }
            Tensor::matrix(c, r, out)
        })?;
        Ok(self.tape.push(value, Op::Transpose, vec![self.id]))
    }

    pub fn add(self, rhs: Var<'t>) -> Result<Var<'t>> {
        self.binary(rhs, BinaryKind::Add)
    }

    pub fn sub(self, rhs: Var<'t>) -> Result<Var<'t>> {
        self.binary(rhs, BinaryKind::Sub)
    }

    pub fn mul(self, rhs: Var<'t>) -> Result<Var<'t>> {
        self.binary(rhs, BinaryKind::Mul)
    }

    pub fn scale(self, factor: f64) -> Var<'t> {
        self.unary(Op::Scale(factor), |v| factor * v)
    }

    pub fn sigmoid(self) -> Var<'t> {
        self.unary(Op::Sigmoid, sigmoid)
    }

    pub fn relu(self) -> Var<'t> {
        self.unary(Op::Relu, |v| v.max(0.0))
    }

    pub fn leaky_relu(self, slope: f64) -> Var<'t> {
        self.unary(Op::LeakyRelu(slope), move |v| if v > 0.0 { v } else { slope * v })
    }

    pub fn exp(self) -> Var<'t> {
        self.unary(Op::Exp, f64::exp)
    }

    pub fn log(self) -> Result<Var<'t>> {
        let bad = self.with_value(|x| x.data().iter().copied().find(|v| !(*v > 0.0)));
        if let Some(v) = bad {
            return Err(Error::Domain(format!("log of non-positive value {v}")));
        }
        Ok(self.unary(Op::Log, f64::ln))
    }

    fn reduce(self, mean: bool, axis: Option<usize>) -> Result<Var<'t>> {
        let value = self.with_value(|x| -> Result<Tensor> {
            match axis {
                None => {
                    if mean && x.is_empty() {
                        return Err(Error::shape("mean of an empty tensor"));
                    }
                    let s: f64 = x.data().iter().sum();
                    Ok(Tensor::scalar(if mean { s / x.len() as f64 } else { s }))
                }
                Some(axis) => {
                    let (outer, len, inner) = split_axis(x.shape(), axis)?;
                    if mean && len == 0 {
                        return Err(Error::shape("mean over an empty axis"));
                    }
                    let d = x.data();
                    let mut out = vec![0.0; outer * inner];
                    for o in 0..outer {
                        for a in 0..len {
                            for i in 0..inner {
                                out[o * inner + i] += d[(o * len + a) * inner + i];
                            }
                        }
                    }
                    if mean {
                        out.iter_mut().for_each(|v| *v /= len as f64);
                    }
                    let mut shape = x.shape().to_vec();
                    shape.remove(axis);
                    Tensor::new(shape, out)
                }
            }
        })?;
        Ok(self.tape.push(value, Op::Reduce { mean, axis }, vec![self.id]))
    }

    /// Sum of all elements.
    pub fn sum(self) -> Result<Var<'t>> {
        self.reduce(false, None)
    }

    /// Mean of all elements.
    pub fn mean(self) -> Result<Var<'t>> {
        self.reduce(true, None)
    }

    /// Sum along `axis`, removing it from the shape.
    pub fn sum_axis(self, axis: usize) -> Result<Var<'t>> {
        self.reduce(false, Some(axis))
    }

    /// Mean along `axis`, removing it from the shape.
    pub fn mean_axis(self, axis: usize) -> Result<Var<'t>> {
        self.reduce(true, Some(axis))
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Var<'t>> {
        let value = self.with_value(|x| x.clone().reshape(shape))?;
        Ok(self.tape.push(value, Op::Reshape, vec![self.id]))
    }

    /// Contiguous range `[start, start + len)` along `axis`.
    pub fn slice(self, axis: usize, start: usize, len: usize) -> Result<Var<'t>> {
        let value = self.with_value(|x| -> Result<Tensor> {
            let (outer, total, inner) = split_axis(x.shape(), axis)?;
            if start + len > total {
                return Err(Error::shape(format!(
                    "slice {start}..{} exceeds axis {axis} of length {total}",
                    start + len
                )));
            }
            let d = x.data();
            let mut out = Vec::with_capacity(outer * len * inner);
            for o in 0..outer {
                let from = (o * total + start) * inner;
                out.extend_from_slice(&d[from..from + len * inner]);
            }
            let mut shape = x.shape().to_vec();
            shape[axis] = len;
            Tensor::new(shape, out)
        })?;
        Ok(self.tape.push(value, Op::Slice { axis, start }, vec![self.id]))
    }

    /// Softmax along `axis`, computed with max-subtraction.
    pub fn softmax(self, axis: usize) -> Result<Var<'t>> {
        let value = self.with_value(|x| -> Result<Tensor> {
            let (outer, len, inner) = split_axis(x.shape(), axis)?;
            let d = x.data();
            let mut out = vec![0.0; d.len()];
            let mut lane = vec![0.0; len];
            for o in 0..outer {
                for i in 0..inner {
                    for a in 0..len {
                        lane[a] = d[(o * len + a) * inner + i];
                    }
                    let probs = softmax_slice(&lane);
                    for a in 0..len {
                        out[(o * len + a) * inner + i] = probs[a];
                    }
                }
            }
            Tensor::new(x.shape().to_vec(), out)
        })?;
        Ok(self.tape.push(value, Op::Softmax { axis }, vec![self.id]))
    }

    /// Selects rows of a matrix; indices may repeat.
    pub fn gather_rows(self, rows: Rc<[usize]>) -> Result<Var<'t>> {
        let value = self.with_value(|x| -> Result<Tensor> {
            let (n, c) = x.dims2()?;
            let mut out = Vec::with_capacity(rows.len() * c);
            for &r in rows.iter() {
                if r >= n {
                    return Err(Error::shape(format!("row {r} out of range for {n} rows")));
                }
                out.extend_from_slice(x.row(r));
            }
            Tensor::matrix(rows.len(), c, out)
        })?;
        Ok(self.tape.push(value, Op::GatherRows(rows), vec![self.id]))
    }

    /// Weighted neighbour sum over `plan`. `coef`, when given, holds one
    /// multiplier per arc (shape `[m]` or `[m, 1]`).
    pub fn propagate(self, plan: Rc<MessagePlan>, coef: Option<Var<'t>>) -> Result<Var<'t>> {
        if let Some(c) = coef {
            self.tape.check_owner(c);
        }
        let value = {
            let nodes = self.tape.nodes.borrow();
            let h = &nodes[self.id].value;
            let (n, f) = h.dims2()?;
            if n != plan.num_nodes {
                return Err(Error::shape(format!(
                    "features have {n} rows, graph has {} nodes",
                    plan.num_nodes
                )));
            }
            let m = plan.num_arcs();
            let coef_data = match coef {
                Some(c) => {
                    let cv = &nodes[c.id].value;
                    if cv.len() != m {
                        return Err(Error::shape(format!(
                            "{} coefficients for {m} arcs",
                            cv.len()
                        )));
                    }
                    Some(cv.data())
                }
                None => None,
            };
            let hd = h.data();
            let mut out = vec![0.0; n * f];
            for a in 0..m {
                let (i, j) = (plan.receivers[a], plan.senders[a]);
                let w = plan.norm[a] * coef_data.map_or(1.0, |c| c[a]);
                for t in 0..f {
                    out[i * f + t] += w * hd[j * f + t];
                }
            }
            Tensor::matrix(n, f, out)?
        };
        let mut inputs = vec![self.id];
        if let Some(c) = coef {
            inputs.push(c.id);
        }
        Ok(self.tape.push(
            value,
            Op::Propagate {
                plan,
                weighted: coef.is_some(),
            },
            inputs,
        ))
    }

    /// Mean binary cross-entropy of probabilities against 0/1 targets.
    pub fn bce(self, target: &[f64]) -> Result<Var<'t>> {
        let value = self.with_value(|p| -> Result<f64> {
            if p.len() != target.len() {
                return Err(Error::shape(format!(
                    "{} predictions for {} targets",
                    p.len(),
                    target.len()
                )));
            }
            if p.is_empty() {
                return Err(Error::input("empty prediction"));
            }
            let mut total = 0.0;
            for (&pv, &t) in p.data().iter().zip(target) {
                if t != 0.0 && t != 1.0 {
                    return Err(Error::input(format!("binary target {t} is not 0 or 1")));
                }
                if !(0.0..=1.0).contains(&pv) {
                    return Err(Error::input(format!("probability {pv} outside [0, 1]")));
                }
                let q = pv.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
                total -= t * q.ln() + (1.0 - t) * (1.0 - q).ln();
            }
            Ok(total / p.len() as f64)
        })?;
        Ok(self.tape.push(
            Tensor::scalar(value),
            Op::Bce {
                target: target.to_vec(),
            },
            vec![self.id],
        ))
    }

    /// Mean softmax cross-entropy of logits rows against class indices.
    pub fn cross_entropy(self, targets: &[usize]) -> Result<Var<'t>> {
        let value = self.with_value(|x| -> Result<f64> {
            let (rows, cols) = x.dims2()?;
            check_class_targets(rows, cols, targets)?;
            let mut total = 0.0;
            for (r, &t) in targets.iter().enumerate() {
                let row = x.row(r);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                total += lse - row[t];
            }
            Ok(total / rows as f64)
        })?;
        Ok(self.tape.push(
            Tensor::scalar(value),
            Op::CrossEntropy {
                targets: targets.to_vec(),
            },
            vec![self.id],
        ))
    }

    /// Mean negative log-likelihood of probability rows against class indices.
    pub fn nll(self, targets: &[usize]) -> Result<Var<'t>> {
        let value = self.with_value(|x| -> Result<f64> {
            let (rows, cols) = x.dims2()?;
            check_class_targets(rows, cols, targets)?;
            let total: f64 = targets
                .iter()
                .enumerate()
                .map(|(r, &t)| -x.at(r, t).clamp(PROB_CLIP, 1.0 - PROB_CLIP).ln())
                .sum();
            Ok(total / rows as f64)
        })?;
        Ok(self.tape.push(
            Tensor::scalar(value),
            Op::Nll {
                targets: targets.to_vec(),
            },
            vec![self.id],
        ))
    }

    /// Mean absolute error.
    pub fn l1(self, target: &[f64]) -> Result<Var<'t>> {
        let value = self.with_value(|p| -> Result<f64> {
            if p.len() != target.len() {
                return Err(Error::shape(format!(
                    "{} predictions for {} targets",
                    p.len(),
                    target.len()
                )));
            }
            if p.is_empty() {
                return Err(Error::input("empty prediction"));
            }
            let total: f64 = p.data().iter().zip(target).map(|(a, b)| (a - b).abs()).sum();
            Ok(total / p.len() as f64)
        })?;
        Ok(self.tape.push(
            Tensor::scalar(value),
            Op::L1 {
                target: target.to_vec(),
            },
            vec![self.id],
        ))
    }
}

fn check_class_targets(rows: usize, cols: usize, targets: &[usize]) -> Result<()> {
    if targets.len() != rows {
        return Err(Error::shape(format!(
            "{rows} rows of scores for {} targets",
            targets.len()
        )));
    }
    if rows == 0 {
        return Err(Error::input("no samples"));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= cols) {
        return Err(Error::input(format!(
            "class {t} out of range for {cols} classes"
        )));
    }
    Ok(())
}
