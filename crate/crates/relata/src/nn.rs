//! Layers and optimizer state: affine maps, batch normalization, an LSTM
//! cell, and AdaGrad.
//!
//! Layers own plain parameter tensors. A forward pass binds them as leaves
//! on a [`Graph`] and returns the node handles so a training loop can read
//! gradients back after `backward` and apply updates.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;

pub const DEFAULT_BN_EPSILON: f64 = 1e-5;
pub const DEFAULT_BN_MOMENTUM: f64 = 0.1;
pub const DEFAULT_ADAGRAD_EPSILON: f64 = 1e-8;

/// Uniform init in ±sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Tensor::new(vec![rows, cols], data).expect("finite init")
}

pub struct Affine {
    pub weight: Tensor, // d_in × d_out
    pub bias: Tensor,   // d_out
}

impl Affine {
    pub fn new(rng: &mut impl Rng, d_in: usize, d_out: usize) -> Self {
        Affine {
            weight: glorot_uniform(rng, d_in, d_out),
            bias: Tensor::zeros(vec![d_out]),
        }
    }

    /// Bind parameters as graph leaves: `(weight, bias)` node ids.
    pub fn bind(&self, g: &mut Graph) -> (NodeId, NodeId) {
        (g.leaf(self.weight.clone()), g.leaf(self.bias.clone()))
    }

    pub fn forward(g: &mut Graph, x: NodeId, weight: NodeId, bias: NodeId) -> Result<NodeId> {
        let h = g.matmul(x, weight)?;
        g.add_bias(h, bias)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BnMode {
    Training,
    Inference,
}

pub struct BatchNormLayer {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub momentum: f64,
    pub eps: f64,
    pub mode: BnMode,
}

/// Handles produced by a training-mode batch-norm forward pass.
pub struct BnBound {
    pub out: NodeId,
    pub gamma: NodeId,
    pub beta: NodeId,
}

impl BatchNormLayer {
    pub fn new(features: usize) -> Self {
        BatchNormLayer {
            gamma: Tensor::filled(vec![features], 1.0).expect("finite"),
            beta: Tensor::zeros(vec![features]),
            running_mean: Tensor::zeros(vec![features]),
            running_var: Tensor::filled(vec![features], 1.0).expect("finite"),
            momentum: DEFAULT_BN_MOMENTUM,
            eps: DEFAULT_BN_EPSILON,
            mode: BnMode::Training,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.numel()
    }

    /// Training-mode forward: normalize by batch statistics, update running
    /// statistics. Requires a batch of at least two rows.
    pub fn forward_train(&mut self, g: &mut Graph, x: NodeId) -> Result<BnBound> {
        let (rows, cols) = g.value(x).dims2()?;
        if cols != self.features() {
            return Err(Error::Dimension(format!(
                "batch norm over {} features applied to {:?}",
                self.features(),
                g.value(x).shape()
            )));
        }
        if rows < 2 {
            return Err(Error::Numeric(
                "degenerate batch: training-mode batch normalization needs at least 2 rows".into(),
            ));
        }
        let data = g.value(x).data().to_vec();
        let n = rows as f64;
        let mut mean = vec![0.0; cols];
        let mut var = vec![0.0; cols];
        for c in 0..cols {
            let mut s = 0.0;
            for r in 0..rows {
                s += data[r * cols + c];
            }
            mean[c] = s / n;
            let mut v = 0.0;
            for r in 0..rows {
                let d = data[r * cols + c] - mean[c];
                v += d * d;
            }
            var[c] = v / n;
        }
        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + self.eps).sqrt()).collect();
        let mut xhat = vec![0.0; rows * cols];
        let mut out = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let xh = (data[r * cols + c] - mean[c]) * inv_std[c];
                xhat[r * cols + c] = xh;
                out[r * cols + c] = self.gamma.data()[c] * xh + self.beta.data()[c];
            }
        }
        // Running statistics track the unbiased batch variance.
        let unbias = n / (n - 1.0);
        for c in 0..cols {
            let rm = self.running_mean.data()[c];
            self.running_mean.data_mut()[c] = (1.0 - self.momentum) * rm + self.momentum * mean[c];
            let rv = self.running_var.data()[c];
            self.running_var.data_mut()[c] =
                (1.0 - self.momentum) * rv + self.momentum * var[c] * unbias;
        }
        let gamma = g.leaf(self.gamma.clone());
        let beta = g.leaf(self.beta.clone());
        let out = Tensor::new(vec![rows, cols], out)?;
        let xhat = Tensor::new(vec![rows, cols], xhat)?;
        let id = g.batch_norm_train(x, gamma, beta, out, xhat, inv_std);
        Ok(BnBound {
            out: id,
            gamma,
            beta,
        })
    }

    /// Inference-mode forward: normalize by running statistics. Defined for
    /// any batch size, deterministic, and does not mutate the layer.
    pub fn forward_infer(&self, g: &mut Graph, x: NodeId) -> Result<NodeId> {
        let (rows, cols) = g.value(x).dims2()?;
        if cols != self.features() {
            return Err(Error::Dimension(format!(
                "batch norm over {} features applied to {:?}",
                self.features(),
                g.value(x).shape()
            )));
        }
        let mean = self.running_mean.data().to_vec();
        let inv_std: Vec<f64> = self
            .running_var
            .data()
            .iter()
            .map(|&v| 1.0 / (v + self.eps).sqrt())
            .collect();
        let data = g.value(x).data();
        let mut out = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let xh = (data[r * cols + c] - mean[c]) * inv_std[c];
                out[r * cols + c] = self.gamma.data()[c] * xh + self.beta.data()[c];
            }
        }
        let gamma = g.leaf(self.gamma.clone());
        let beta = g.leaf(self.beta.clone());
        let out = Tensor::new(vec![rows, cols], out)?;
        Ok(g.batch_norm_inf(x, gamma, beta, out, mean, inv_std))
    }
}

/// Mode-dispatching batch normalization of a `batch × features` node.
pub fn batch_norm(g: &mut Graph, x: NodeId, layer: &mut BatchNormLayer) -> Result<NodeId> {
    match layer.mode {
        BnMode::Training => Ok(layer.forward_train(g, x)?.out),
        BnMode::Inference => layer.forward_infer(g, x),
    }
}

/// LSTM cell parameters. Gate blocks are laid out `[input, forget,
/// candidate, output]` along the 4h axis; the forget-gate bias starts at 1.
pub struct LstmParams {
    pub w_input: Tensor,  // d × 4h
    pub w_hidden: Tensor, // h × 4h
    pub bias: Tensor,     // 4h
    pub input_dim: usize,
    pub hidden_dim: usize,
}

pub struct LstmNodes {
    pub w_input: NodeId,
    pub w_hidden: NodeId,
    pub bias: NodeId,
}

impl LstmParams {
    pub fn new(rng: &mut impl Rng, input_dim: usize, hidden_dim: usize) -> Self {
        let mut bias = Tensor::zeros(vec![4 * hidden_dim]);
        for v in &mut bias.data_mut()[hidden_dim..2 * hidden_dim] {
            *v = 1.0;
        }
        LstmParams {
            w_input: glorot_uniform(rng, input_dim, 4 * hidden_dim),
            w_hidden: glorot_uniform(rng, hidden_dim, 4 * hidden_dim),
            bias,
            input_dim,
            hidden_dim,
        }
    }

    pub fn zeroed(input_dim: usize, hidden_dim: usize) -> Self {
        LstmParams {
            w_input: Tensor::zeros(vec![input_dim, 4 * hidden_dim]),
            w_hidden: Tensor::zeros(vec![hidden_dim, 4 * hidden_dim]),
            bias: Tensor::zeros(vec![4 * hidden_dim]),
            input_dim,
            hidden_dim,
        }
    }

    pub fn bind(&self, g: &mut Graph) -> LstmNodes {
        LstmNodes {
            w_input: g.leaf(self.w_input.clone()),
            w_hidden: g.leaf(self.w_hidden.clone()),
            bias: g.leaf(self.bias.clone()),
        }
    }

    /// One cell step on bound parameters. `x` is 1×d, `h_prev`/`c_prev` are
    /// 1×h; returns the new `(h, c)` nodes.
    pub fn step(
        &self,
        g: &mut Graph,
        x: NodeId,
        h_prev: NodeId,
        c_prev: NodeId,
        nodes: &LstmNodes,
    ) -> Result<(NodeId, NodeId)> {
        let h = self.hidden_dim;
        self.check_step_shapes(g, x, h_prev, c_prev)?;
        let from_x = g.matmul(x, nodes.w_input)?;
        let from_h = g.matmul(h_prev, nodes.w_hidden)?;
        let pre = g.add(from_x, from_h)?;
        let pre = g.add_bias(pre, nodes.bias)?;
        let i_gate = g.slice(pre, 1, 0, h)?;
        let f_gate = g.slice(pre, 1, h, 2 * h)?;
        let cand = g.slice(pre, 1, 2 * h, 3 * h)?;
        let o_gate = g.slice(pre, 1, 3 * h, 4 * h)?;
        let i_gate = g.sigmoid(i_gate)?;
        let f_gate = g.sigmoid(f_gate)?;
        let cand = g.tanh(cand)?;
        let o_gate = g.sigmoid(o_gate)?;
        let keep = g.mul(f_gate, c_prev)?;
        let write = g.mul(i_gate, cand)?;
        let c = g.add(keep, write)?;
        let c_act = g.tanh(c)?;
        let h_out = g.mul(o_gate, c_act)?;
        Ok((h_out, c))
    }

    fn check_step_shapes(
        &self,
        g: &Graph,
        x: NodeId,
        h_prev: NodeId,
        c_prev: NodeId,
    ) -> Result<()> {
        let want_x = [1, self.input_dim];
        let want_h = [1, self.hidden_dim];
        if g.value(x).shape() != want_x {
            return Err(Error::Dimension(format!(
                "lstm input width mismatch: expected {:?}, found {:?}",
                want_x,
                g.value(x).shape()
            )));
        }
        for (name, id) in [("hidden", h_prev), ("cell", c_prev)] {
            if g.value(id).shape() != want_h {
                return Err(Error::Dimension(format!(
                    "lstm {name} state width mismatch: expected {:?}, found {:?}",
                    want_h,
                    g.value(id).shape()
                )));
            }
        }
        Ok(())
    }

    /// Run the cell over a token sequence from zero states and return the
    /// final hidden-state node (1×h).
    pub fn encode(&self, g: &mut Graph, tokens: &[NodeId], nodes: &LstmNodes) -> Result<NodeId> {
        if tokens.is_empty() {
            return Err(Error::Argument("cannot encode an empty sequence".into()));
        }
        let mut h = g.leaf(Tensor::zeros(vec![1, self.hidden_dim]));
        let mut c = g.leaf(Tensor::zeros(vec![1, self.hidden_dim]));
        for &x in tokens {
            let (nh, nc) = self.step(g, x, h, c, nodes)?;
            h = nh;
            c = nc;
        }
        Ok(h)
    }
}

/// One LSTM cell step binding `params` as fresh leaves.
pub fn lstm_step(
    g: &mut Graph,
    x: NodeId,
    h_prev: NodeId,
    c_prev: NodeId,
    params: &LstmParams,
) -> Result<(NodeId, NodeId)> {
    let nodes = params.bind(g);
    params.step(g, x, h_prev, c_prev, &nodes)
}

pub struct AdaGradState {
    accum: Tensor,
    pub learning_rate: f64,
    pub epsilon: f64,
}

impl AdaGradState {
    pub fn new(shape: Vec<usize>, learning_rate: f64, epsilon: f64) -> Result<Self> {
        if learning_rate <= 0.0 || !learning_rate.is_finite() {
            return Err(Error::Argument("learning rate must be positive".into()));
        }
        if epsilon <= 0.0 || !epsilon.is_finite() {
            return Err(Error::Argument("epsilon must be positive".into()));
        }
        Ok(AdaGradState {
            accum: Tensor::zeros(shape),
            learning_rate,
            epsilon,
        })
    }

    pub fn accumulator(&self) -> &Tensor {
        &self.accum
    }

    /// Raw accumulator values, for row-sliced sparse updates.
    pub fn accumulator_mut(&mut self) -> &mut [f64] {
        self.accum.data_mut()
    }
}

/// accum += grad²; param −= lr · grad / (sqrt(accum) + eps).
pub fn adagrad_update(param: &mut Tensor, grad: &Tensor, state: &mut AdaGradState) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != state.accum.shape() {
        return Err(Error::Dimension(format!(
            "adagrad shapes disagree: param {:?}, grad {:?}, accum {:?}",
            param.shape(),
            grad.shape(),
            state.accum.shape()
        )));
    }
    adagrad_update_slice(
        param.data_mut(),
        state.accum.data_mut(),
        grad.data(),
        state.learning_rate,
        state.epsilon,
    )
}

/// Row-level AdaGrad update used for sparse embedding rows.
pub fn adagrad_update_slice(
    param: &mut [f64],
    accum: &mut [f64],
    grad: &[f64],
    learning_rate: f64,
    epsilon: f64,
) -> Result<()> {
    if param.len() != grad.len() || param.len() != accum.len() {
        return Err(Error::Dimension(format!(
            "adagrad slice lengths disagree: param {}, grad {}, accum {}",
            param.len(),
            grad.len(),
            accum.len()
        )));
    }
    for ((p, a), &g) in param.iter_mut().zip(accum.iter_mut()).zip(grad) {
        *a += g * g;
        *p -= learning_rate * g / (a.sqrt() + epsilon);
        if !p.is_finite() {
            return Err(Error::Numeric("non-finite parameter after update".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn adagrad_first_step_example() {
        let mut p = Tensor::scalar(1.0).unwrap();
        let g = Tensor::scalar(0.5).unwrap();
        let mut st = AdaGradState::new(vec![], 0.01, 1e-8).unwrap();
        adagrad_update(&mut p, &g, &mut st).unwrap();
        // 1.0 − 0.01·0.5/(√0.25 + 1e-8) ≈ 0.99
        assert!((p.data()[0] - 0.99).abs() < 1e-9, "{}", p.data()[0]);
        assert_eq!(st.accumulator().data()[0], 0.25);
    }

    #[test]
    fn adagrad_zero_gradient_is_a_no_op() {
        let mut p = Tensor::scalar(2.5).unwrap();
        let g = Tensor::scalar(0.0).unwrap();
        let mut st = AdaGradState::new(vec![], 0.01, 1e-8).unwrap();
        adagrad_update(&mut p, &g, &mut st).unwrap();
        assert_eq!(p.data()[0], 2.5);
        assert_eq!(st.accumulator().data()[0], 0.0);
    }

    #[test]
    fn adagrad_steps_shrink_under_repeated_gradients() {
        let mut p = Tensor::scalar(0.0).unwrap();
        let g = Tensor::scalar(1.0).unwrap();
        let mut st = AdaGradState::new(vec![], 0.1, 1e-8).unwrap();
        let mut prev = p.data()[0];
        let mut last_step = f64::INFINITY;
        for _ in 0..20 {
            adagrad_update(&mut p, &g, &mut st).unwrap();
            let step = (prev - p.data()[0]).abs();
            assert!(step <= last_step + 1e-15);
            last_step = step;
            prev = p.data()[0];
        }
    }

    #[test]
    fn adagrad_decreases_a_quadratic_monotonically() {
        // f(x) = x², ∇f = 2x, from x = 5.
        let mut x = Tensor::scalar(5.0).unwrap();
        let mut st = AdaGradState::new(vec![], 0.01, 1e-8).unwrap();
        let mut f_prev = 25.0;
        for _ in 0..200 {
            let g = Tensor::scalar(2.0 * x.data()[0]).unwrap();
            adagrad_update(&mut x, &g, &mut st).unwrap();
            let f = x.data()[0] * x.data()[0];
            assert!(f <= f_prev + 1e-12);
            f_prev = f;
        }
        assert!(f_prev < 25.0);
    }

    #[test]
    fn adagrad_shape_mismatch() {
        let mut p = Tensor::zeros(vec![2]);
        let g = Tensor::zeros(vec![3]);
        let mut st = AdaGradState::new(vec![2], 0.01, 1e-8).unwrap();
        assert!(matches!(
            adagrad_update(&mut p, &g, &mut st),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn batch_norm_training_normalizes_each_feature() {
        let mut layer = BatchNormLayer::new(2);
        let mut g = Graph::new();
        let x = g.leaf(
            Tensor::from_rows(&[
                vec![1.0, 10.0],
                vec![2.0, 20.0],
                vec![3.0, 30.0],
                vec![4.0, 40.0],
            ])
            .unwrap(),
        );
        let out = batch_norm(&mut g, x, &mut layer).unwrap();
        let v = g.value(out);
        let (rows, cols) = v.dims2().unwrap();
        for c in 0..cols {
            let mean: f64 = (0..rows).map(|r| v.get2(r, c)).sum::<f64>() / rows as f64;
            let var: f64 =
                (0..rows).map(|r| (v.get2(r, c) - mean).powi(2)).sum::<f64>() / rows as f64;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-3); // epsilon slightly shrinks it
        }
    }

    #[test]
    fn batch_norm_constant_column_yields_beta() {
        let mut layer = BatchNormLayer::new(1);
        layer.beta = Tensor::new(vec![1], vec![0.7]).unwrap();
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_rows(&[vec![3.0], vec![3.0], vec![3.0]]).unwrap());
        let out = batch_norm(&mut g, x, &mut layer).unwrap();
        for &v in g.value(out).data() {
            assert!((v - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_norm_rejects_batches_of_one_in_training() {
        let mut layer = BatchNormLayer::new(2);
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap());
        assert!(matches!(
            batch_norm(&mut g, x, &mut layer),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn batch_norm_inference_depends_only_on_running_stats() {
        let mut layer = BatchNormLayer::new(2);
        // Drive the running stats with a fixed stream.
        for _ in 0..10 {
            let mut g = Graph::new();
            let x = g.leaf(
                Tensor::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0], vec![5.0, 0.0]]).unwrap(),
            );
            layer.forward_train(&mut g, x).unwrap();
        }
        layer.mode = BnMode::Inference;
        let probe = Tensor::from_rows(&[vec![2.0, 2.0]]).unwrap();
        let mut first = None;
        for _ in 0..2 {
            let mut g = Graph::new();
            let x = g.leaf(probe.clone());
            let out = batch_norm(&mut g, x, &mut layer).unwrap();
            let v = g.value(out).clone();
            match &first {
                None => first = Some(v),
                Some(f) => assert_eq!(f, &v),
            }
        }
    }

    #[test]
    fn lstm_zero_parameters_give_zero_output() {
        let params = LstmParams::zeroed(3, 2);
        let mut g = Graph::new();
        let x = g.leaf(Tensor::new(vec![1, 3], vec![0.4, -1.2, 2.0]).unwrap());
        let h0 = g.leaf(Tensor::zeros(vec![1, 2]));
        let c0 = g.leaf(Tensor::zeros(vec![1, 2]));
        let (h, _) = lstm_step(&mut g, x, h0, c0, &params).unwrap();
        assert!(g.value(h).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lstm_hidden_state_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = LstmParams::new(&mut rng, 3, 4);
        let mut g = Graph::new();
        let mut h = g.leaf(Tensor::zeros(vec![1, 4]));
        let mut c = g.leaf(Tensor::zeros(vec![1, 4]));
        let nodes = params.bind(&mut g);
        for step in 0..6 {
            let x = g.leaf(
                Tensor::new(vec![1, 3], vec![step as f64, -3.0, 8.0]).unwrap(),
            );
            let (nh, nc) = params.step(&mut g, x, h, c, &nodes).unwrap();
            h = nh;
            c = nc;
            assert!(g.value(h).data().iter().all(|&v| v > -1.0 && v < 1.0));
        }
    }

    #[test]
    fn lstm_width_mismatch_is_a_dimension_error() {
        let params = LstmParams::zeroed(3, 2);
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(vec![1, 4]));
        let h0 = g.leaf(Tensor::zeros(vec![1, 2]));
        let c0 = g.leaf(Tensor::zeros(vec![1, 2]));
        assert!(matches!(
            lstm_step(&mut g, x, h0, c0, &params),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn forget_gate_bias_initialized_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = LstmParams::new(&mut rng, 2, 3);
        assert!(p.bias.data()[0..3].iter().all(|&v| v == 0.0));
        assert!(p.bias.data()[3..6].iter().all(|&v| v == 1.0));
        assert!(p.bias.data()[6..12].iter().all(|&v| v == 0.0));
    }
}
