//! Reverse-mode automatic differentiation over [`Tensor`] values.
//!
//! A [`Graph`] is an arena of compute nodes. Operations evaluate eagerly
//! and record the parent links plus a local gradient rule; since an
//! operation can only reference nodes that already exist, the graph is
//! acyclic by construction and node order is a topological order.
//! [`Graph::backward`] walks that order in reverse from a scalar root,
//! accumulating gradients across multiple paths.
//!
//! ```
//! use relata::graph::Graph;
//! use relata::tensor::Tensor;
//!
//! let mut g = Graph::new();
//! let x = g.leaf(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
//! let y = g.dot(x, x).unwrap(); // y = x·x
//! g.backward(y).unwrap();
//! assert_eq!(g.grad(x).data(), &[2.0, 4.0]); // ∇(x·x) = 2x
//! ```

use crate::error::{Error, Result};
use crate::tensor::{self, Tensor};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op {
    Leaf,
    MatMul,
    Add,
    Sub,
    Mul,
    /// matrix (B×F) plus a length-F bias vector broadcast over rows
    AddBias,
    Tanh,
    Sigmoid,
    LogSigmoid,
    Scale(f64),
    Concat {
        axis: usize,
    },
    Slice {
        axis: usize,
        start: usize,
    },
    Reshape,
    Dot,
    Sum,
    AddN,
    /// Batch normalization with batch statistics; parents [x, gamma, beta].
    /// `xhat` and `inv_std` are saved from the forward pass.
    BatchNormTrain {
        xhat: Tensor,
        inv_std: Vec<f64>,
    },
    /// Batch normalization with fixed (running) statistics.
    BatchNormInf {
        mean: Vec<f64>,
        inv_std: Vec<f64>,
    },
}

struct NodeMeta {
    parents: Vec<usize>,
    op: Op,
}

#[derive(Default)]
pub struct Graph {
    values: Vec<Tensor>,
    grads: Vec<Option<Tensor>>,
    nodes: Vec<NodeMeta>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, parents: Vec<usize>, op: Op) -> NodeId {
        debug_assert!(parents.iter().all(|&p| p < self.nodes.len()));
        self.values.push(value);
        self.grads.push(None);
        self.nodes.push(NodeMeta { parents, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(value, vec![], Op::Leaf)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.values[id.0]
    }

    /// Gradient of the last `backward` root with respect to `id`; zeros for
    /// nodes not on any path to the root.
    pub fn grad(&self, id: NodeId) -> Tensor {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(self.values[id.0].shape().to_vec()),
        }
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = tensor::matmul(&self.values[a.0], &self.values[b.0])?;
        Ok(self.push(v, vec![a.0, b.0], Op::MatMul))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = tensor::add(&self.values[a.0], &self.values[b.0])?;
        Ok(self.push(v, vec![a.0, b.0], Op::Add))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = tensor::sub(&self.values[a.0], &self.values[b.0])?;
        Ok(self.push(v, vec![a.0, b.0], Op::Sub))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = tensor::mul(&self.values[a.0], &self.values[b.0])?;
        Ok(self.push(v, vec![a.0, b.0], Op::Mul))
    }

    pub fn add_bias(&mut self, m: NodeId, bias: NodeId) -> Result<NodeId> {
        let (rows, cols) = self.values[m.0].dims2()?;
        let b = &self.values[bias.0];
        if b.numel() != cols {
            return Err(Error::Dimension(format!(
                "bias of {} features cannot broadcast over {:?}",
                b.numel(),
                self.values[m.0].shape()
            )));
        }
        let mut data = self.values[m.0].data().to_vec();
        for r in 0..rows {
            for c in 0..cols {
                data[r * cols + c] += b.data()[c];
            }
        }
        let v = Tensor::new(vec![rows, cols], data)?;
        Ok(self.push(v, vec![m.0, bias.0], Op::AddBias))
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId> {
        let v = tensor::tanh(&self.values[x.0])?;
        Ok(self.push(v, vec![x.0], Op::Tanh))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        let v = tensor::sigmoid(&self.values[x.0])?;
        Ok(self.push(v, vec![x.0], Op::Sigmoid))
    }

    pub fn log_sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        let v = tensor::log_sigmoid(&self.values[x.0])?;
        Ok(self.push(v, vec![x.0], Op::LogSigmoid))
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> Result<NodeId> {
        let v = tensor::scale(&self.values[x.0], c)?;
        Ok(self.push(v, vec![x.0], Op::Scale(c)))
    }

    pub fn concat(&mut self, parts: &[NodeId], axis: usize) -> Result<NodeId> {
        let tensors: Vec<&Tensor> = parts.iter().map(|p| &self.values[p.0]).collect();
        let v = tensor::concat(&tensors, axis)?;
        Ok(self.push(
            v,
            parts.iter().map(|p| p.0).collect(),
            Op::Concat { axis },
        ))
    }

    pub fn slice(&mut self, x: NodeId, axis: usize, start: usize, end: usize) -> Result<NodeId> {
        let v = tensor::slice(&self.values[x.0], axis, start, end)?;
        Ok(self.push(v, vec![x.0], Op::Slice { axis, start }))
    }

    pub fn reshape(&mut self, x: NodeId, shape: Vec<usize>) -> Result<NodeId> {
        let v = self.values[x.0].reshaped(shape)?;
        Ok(self.push(v, vec![x.0], Op::Reshape))
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = tensor::dot(&self.values[a.0], &self.values[b.0])?;
        Ok(self.push(Tensor::scalar(v)?, vec![a.0, b.0], Op::Dot))
    }

    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        let v: f64 = self.values[x.0].data().iter().sum();
        Ok(self.push(Tensor::scalar(v)?, vec![x.0], Op::Sum))
    }

    /// Sum of equally shaped tensors; keeps wide reductions one node deep.
    pub fn add_n(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Argument("add_n of zero nodes".into()));
        }
        let shape = self.values[parts[0].0].shape().to_vec();
        let mut data = vec![0.0; self.values[parts[0].0].numel()];
        for p in parts {
            let t = &self.values[p.0];
            if t.shape() != shape.as_slice() {
                return Err(Error::Dimension(format!(
                    "add_n parts disagree: {:?} vs {:?}",
                    t.shape(),
                    shape
                )));
            }
            for (d, &v) in data.iter_mut().zip(t.data()) {
                *d += v;
            }
        }
        let v = Tensor::new(shape, data)?;
        Ok(self.push(v, parts.iter().map(|p| p.0).collect(), Op::AddN))
    }

    pub(crate) fn batch_norm_train(
        &mut self,
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        out: Tensor,
        xhat: Tensor,
        inv_std: Vec<f64>,
    ) -> NodeId {
        self.push(
            out,
            vec![x.0, gamma.0, beta.0],
            Op::BatchNormTrain { xhat, inv_std },
        )
    }

    pub(crate) fn batch_norm_inf(
        &mut self,
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        out: Tensor,
        mean: Vec<f64>,
        inv_std: Vec<f64>,
    ) -> NodeId {
        self.push(
            out,
            vec![x.0, gamma.0, beta.0],
            Op::BatchNormInf { mean, inv_std },
        )
    }

    /// Populate gradients of `root` with respect to every reachable node.
    pub fn backward(&mut self, root: NodeId) -> Result<()> {
        if !self.values[root.0].is_scalar() {
            return Err(Error::Argument(format!(
                "backward root must be scalar, found shape {:?}",
                self.values[root.0].shape()
            )));
        }
        for g in &mut self.grads {
            *g = None;
        }
        self.grads[root.0] = Some(Tensor::filled(
            self.values[root.0].shape().to_vec(),
            1.0,
        )?);

        let values = &self.values;
        let nodes = &self.nodes;
        for idx in (0..=root.0).rev() {
            if self.grads[idx].is_none() || matches!(nodes[idx].op, Op::Leaf) {
                continue;
            }
            let (lower, upper) = self.grads.split_at_mut(idx);
            let gout = upper[0].as_ref().expect("grad checked above");
            let meta = &nodes[idx];
            for (ordinal, &p) in meta.parents.iter().enumerate() {
                let target = lower[p]
                    .get_or_insert_with(|| Tensor::zeros(values[p].shape().to_vec()));
                backprop(&meta.op, ordinal, &meta.parents, values, idx, gout, target)?;
            }
        }
        Ok(())
    }
}

/// Add the local-gradient contribution of `op`'s `ordinal`-th parent into
/// `target`.
#[allow(clippy::needless_range_loop)] // index loops read clearer over row/col pairs
fn backprop(
    op: &Op,
    ordinal: usize,
    parents: &[usize],
    values: &[Tensor],
    out_idx: usize,
    gout: &Tensor,
    target: &mut Tensor,
) -> Result<()> {
    match op {
        Op::Leaf => {}
        Op::MatMul => {
            let contribution = if ordinal == 0 {
                // dA = G · Bᵀ
                tensor::matmul(gout, &tensor::transpose(&values[parents[1]])?)?
            } else {
                // dB = Aᵀ · G
                tensor::matmul(&tensor::transpose(&values[parents[0]])?, gout)?
            };
            add_into(target, contribution.data(), 1.0);
        }
        Op::Add => add_into(target, gout.data(), 1.0),
        Op::Sub => add_into(target, gout.data(), if ordinal == 0 { 1.0 } else { -1.0 }),
        Op::Mul => {
            let other = &values[parents[1 - ordinal]];
            for ((t, &g), &o) in target
                .data_mut()
                .iter_mut()
                .zip(gout.data())
                .zip(other.data())
            {
                *t += g * o;
            }
        }
        Op::AddBias => {
            if ordinal == 0 {
                add_into(target, gout.data(), 1.0);
            } else {
                let (rows, cols) = gout.dims2()?;
                for r in 0..rows {
                    for c in 0..cols {
                        target.data_mut()[c] += gout.data()[r * cols + c];
                    }
                }
            }
        }
        Op::Tanh => {
            let y = &values[out_idx];
            for ((t, &g), &yv) in target
                .data_mut()
                .iter_mut()
                .zip(gout.data())
                .zip(y.data())
            {
                *t += g * (1.0 - yv * yv);
            }
        }
        Op::Sigmoid => {
            let y = &values[out_idx];
            for ((t, &g), &yv) in target
                .data_mut()
                .iter_mut()
                .zip(gout.data())
                .zip(y.data())
            {
                *t += g * yv * (1.0 - yv);
            }
        }
        Op::LogSigmoid => {
            // d log σ(x) / dx = σ(−x)
            let x = &values[parents[0]];
            for ((t, &g), &xv) in target
                .data_mut()
                .iter_mut()
                .zip(gout.data())
                .zip(x.data())
            {
                *t += g * tensor::sigmoid_scalar(-xv);
            }
        }
        Op::Scale(c) => add_into(target, gout.data(), *c),
        Op::Concat { axis } => {
            let axis = *axis;
            let inner: usize = values[out_idx].shape()[axis + 1..].iter().product();
            let outer: usize = values[out_idx].shape()[..axis].iter().product();
            let out_axis = values[out_idx].shape()[axis];
            let offset: usize = parents[..ordinal]
                .iter()
                .map(|&p| values[p].shape()[axis])
                .sum();
            let part_axis = values[parents[ordinal]].shape()[axis];
            let chunk = part_axis * inner;
            for o in 0..outer {
                let src = o * out_axis * inner + offset * inner;
                let dst = o * chunk;
                for i in 0..chunk {
                    target.data_mut()[dst + i] += gout.data()[src + i];
                }
            }
        }
        Op::Slice { axis, start } => {
            let axis = *axis;
            let parent = &values[parents[0]];
            let inner: usize = parent.shape()[axis + 1..].iter().product();
            let outer: usize = parent.shape()[..axis].iter().product();
            let parent_axis = parent.shape()[axis];
            let out_axis = values[out_idx].shape()[axis];
            let chunk = out_axis * inner;
            for o in 0..outer {
                let dst = o * parent_axis * inner + start * inner;
                let src = o * chunk;
                for i in 0..chunk {
                    target.data_mut()[dst + i] += gout.data()[src + i];
                }
            }
        }
        Op::Reshape => add_into(target, gout.data(), 1.0),
        Op::Dot => {
            let g = gout.data()[0];
            let other = &values[parents[1 - ordinal]];
            add_into(target, other.data(), g);
        }
        Op::Sum => {
            let g = gout.data()[0];
            for t in target.data_mut() {
                *t += g;
            }
        }
        Op::AddN => add_into(target, gout.data(), 1.0),
        Op::BatchNormTrain { xhat, inv_std } => {
            let (rows, cols) = gout.dims2()?;
            let gamma = &values[parents[1]];
            match ordinal {
                0 => {
                    // dx = γ·inv_std/N · (N·dŷ − Σ_r dŷ − x̂ ⊙ Σ_r (dŷ⊙x̂))
                    // with dŷ = gout (per feature, over the batch axis).
                    let n = rows as f64;
                    for c in 0..cols {
                        let gm = gamma.data()[c];
                        let mut sum_g = 0.0;
                        let mut sum_gx = 0.0;
                        for r in 0..rows {
                            let g = gout.data()[r * cols + c];
                            sum_g += g;
                            sum_gx += g * xhat.data()[r * cols + c];
                        }
                        for r in 0..rows {
                            let g = gout.data()[r * cols + c];
                            let xh = xhat.data()[r * cols + c];
                            target.data_mut()[r * cols + c] +=
                                gm * inv_std[c] / n * (n * g - sum_g - xh * sum_gx);
                        }
                    }
                }
                1 => {
                    for c in 0..cols {
                        let mut s = 0.0;
                        for r in 0..rows {
                            s += gout.data()[r * cols + c] * xhat.data()[r * cols + c];
                        }
                        target.data_mut()[c] += s;
                    }
                }
                _ => {
                    for c in 0..cols {
                        let mut s = 0.0;
                        for r in 0..rows {
                            s += gout.data()[r * cols + c];
                        }
                        target.data_mut()[c] += s;
                    }
                }
            }
        }
        Op::BatchNormInf { mean, inv_std } => {
            let (rows, cols) = gout.dims2()?;
            let gamma = &values[parents[1]];
            let x = &values[parents[0]];
            match ordinal {
                0 => {
                    for r in 0..rows {
                        for c in 0..cols {
                            target.data_mut()[r * cols + c] +=
                                gout.data()[r * cols + c] * gamma.data()[c] * inv_std[c];
                        }
                    }
                }
                1 => {
                    for c in 0..cols {
                        let mut s = 0.0;
                        for r in 0..rows {
                            let xh = (x.data()[r * cols + c] - mean[c]) * inv_std[c];
                            s += gout.data()[r * cols + c] * xh;
                        }
                        target.data_mut()[c] += s;
                    }
                }
                _ => {
                    for c in 0..cols {
                        let mut s = 0.0;
                        for r in 0..rows {
                            s += gout.data()[r * cols + c];
                        }
                        target.data_mut()[c] += s;
                    }
                }
            }
        }
    }
    Ok(())
}

fn add_into(target: &mut Tensor, src: &[f64], factor: f64) {
    for (t, &s) in target.data_mut().iter_mut().zip(src) {
        *t += s * factor;
    }
}
