//! Central finite-difference verification of analytic gradients.
//!
//! The checkers here are used by the test suites but are ordinary library
//! code: each builds a scalar-rooted graph, runs `backward`, and compares
//! every (or a sampled) partial derivative against (f(x+h) − f(x−h)) / 2h.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embeddings::{EmbeddingTable, Vocabulary};
use crate::graph::{Graph, NodeId};
use crate::nlra::{NlraTrainer, TrainSample, TrainingConfig};
use crate::nn::{BatchNormLayer, LstmParams};
use crate::tensor::Tensor;
use crate::Result;

pub const DEFAULT_STEP: f64 = 1e-4;
pub const DEFAULT_REL_TOL: f64 = 1e-3;

type CheckResult = std::result::Result<(), String>;

/// Central difference (f(x+h) − f(x−h)) / 2h of a scalar function.
pub fn central_diff<E>(
    mut f: impl FnMut(f64) -> std::result::Result<f64, E>,
    x: f64,
    step: f64,
) -> std::result::Result<f64, E> {
    let hi = f(x + step)?;
    let lo = f(x - step)?;
    Ok((hi - lo) / (2.0 * step))
}

/// Relative agreement between an analytic and a numeric derivative. Values
/// that are both tiny compare absolutely, since the relative scale is then
/// dominated by finite-difference noise.
pub fn grad_close(analytic: f64, numeric: f64, rel_tol: f64) -> bool {
    let diff = (analytic - numeric).abs();
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-3 {
        diff < 1e-6
    } else {
        diff / scale < rel_tol
    }
}

/// Central-difference check with step refinement: start at the default
/// step and, if the estimate disagrees, retry at smaller steps. High local
/// curvature (batch-norm variances near epsilon) can poison the default
/// step's truncation error even when the analytic gradient is exact; a
/// genuinely wrong gradient fails at every step.
pub fn check_derivative<E>(
    mut f: impl FnMut(f64) -> std::result::Result<f64, E>,
    x: f64,
    analytic: f64,
    rel_tol: f64,
) -> std::result::Result<bool, E> {
    for step in [DEFAULT_STEP, 1e-5, 1e-6] {
        let numeric = central_diff(&mut f, x, step)?;
        if grad_close(analytic, numeric, rel_tol) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Verify the analytic gradient of every entry of every input against
/// central differences. `build` must construct a scalar-rooted graph from
/// leaves standing in for `inputs`.
pub fn check_inputs(
    inputs: &[Tensor],
    rel_tol: f64,
    build: &dyn Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
) -> CheckResult {
    let mut g = Graph::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| g.leaf(t.clone())).collect();
    let root = build(&mut g, &ids).map_err(|e| format!("forward pass failed: {e}"))?;
    g.backward(root).map_err(|e| format!("backward pass failed: {e}"))?;
    let grads: Vec<Tensor> = ids.iter().map(|&i| g.grad(i)).collect();

    for (ti, t) in inputs.iter().enumerate() {
        for k in 0..t.numel() {
            let analytic = grads[ti].data()[k];
            let ok = check_derivative(
                |x| {
                    let mut probe: Vec<Tensor> = inputs.to_vec();
                    probe[ti].data_mut()[k] = x;
                    let mut g = Graph::new();
                    let ids: Vec<NodeId> = probe.iter().map(|p| g.leaf(p.clone())).collect();
                    let root = build(&mut g, &ids)?;
                    g.value(root).scalar_value()
                },
                t.data()[k],
                analytic,
                rel_tol,
            )
            .map_err(|e| format!("finite-difference eval failed: {e}"))?;
            if !ok {
                return Err(format!(
                    "input {ti} entry {k}: analytic {analytic} disagrees with finite differences"
                ));
            }
        }
    }
    Ok(())
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>) -> Tensor {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    Tensor::new(shape, data).expect("finite random tensor")
}

fn readout(g: &mut Graph, node: NodeId, weights: &Tensor) -> Result<NodeId> {
    let w = g.leaf(weights.clone());
    g.dot(node, w)
}

/// Randomized FD checks over the pure tensor operations (matmul,
/// elementwise, bias broadcast, concat/slice/reshape, dot/sum/add_n,
/// scale), `trials` trials per operation family.
pub fn check_core_ops(trials: usize, seed: u64, rel_tol: f64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..trials {
        let m = rng.random_range(1..=4);
        let k = rng.random_range(1..=4);
        let n = rng.random_range(1..=4);
        let a = random_tensor(&mut rng, vec![m, k]);
        let b = random_tensor(&mut rng, vec![k, n]);
        let r = random_tensor(&mut rng, vec![m, n]);
        check_inputs(&[a, b], rel_tol, &|g, ids| {
            let c = g.matmul(ids[0], ids[1])?;
            readout(g, c, &r)
        })
        .map_err(|e| format!("matmul: {e}"))?;
    }

    for trial in 0..trials {
        let n = rng.random_range(1..=8);
        let a = random_tensor(&mut rng, vec![n]);
        let b = random_tensor(&mut rng, vec![n]);
        let r = random_tensor(&mut rng, vec![n]);
        let which = trial % 3;
        check_inputs(&[a, b], rel_tol, &|g, ids| {
            let c = match which {
                0 => g.add(ids[0], ids[1])?,
                1 => g.sub(ids[0], ids[1])?,
                _ => g.mul(ids[0], ids[1])?,
            };
            readout(g, c, &r)
        })
        .map_err(|e| format!("binary elementwise {which}: {e}"))?;
    }

    for trial in 0..trials {
        let n = rng.random_range(1..=8);
        let x = random_tensor(&mut rng, vec![n]);
        let r = random_tensor(&mut rng, vec![n]);
        let which = trial % 4;
        check_inputs(&[x], rel_tol, &|g, ids| {
            let y = match which {
                0 => g.tanh(ids[0])?,
                1 => g.sigmoid(ids[0])?,
                2 => g.log_sigmoid(ids[0])?,
                _ => g.scale(ids[0], -1.37)?,
            };
            readout(g, y, &r)
        })
        .map_err(|e| format!("unary elementwise {which}: {e}"))?;
    }

    for _ in 0..trials {
        let b = rng.random_range(2..=5);
        let f = rng.random_range(1..=6);
        let m = random_tensor(&mut rng, vec![b, f]);
        let bias = random_tensor(&mut rng, vec![f]);
        let r = random_tensor(&mut rng, vec![b, f]);
        check_inputs(&[m, bias], rel_tol, &|g, ids| {
            let y = g.add_bias(ids[0], ids[1])?;
            readout(g, y, &r)
        })
        .map_err(|e| format!("add_bias: {e}"))?;
    }

    for trial in 0..trials {
        let rows = rng.random_range(1..=3);
        let c1 = rng.random_range(1..=4);
        let c2 = rng.random_range(1..=4);
        let a = random_tensor(&mut rng, vec![rows, c1]);
        let b = random_tensor(&mut rng, vec![rows, c2]);
        let r = random_tensor(&mut rng, vec![rows, c1 + c2]);
        let start = rng.random_range(0..c1);
        let end = rng.random_range(start + 1..=c1);
        let rs = random_tensor(&mut rng, vec![rows, end - start]);
        if trial % 2 == 0 {
            check_inputs(&[a, b], rel_tol, &|g, ids| {
                let y = g.concat(&[ids[0], ids[1]], 1)?;
                readout(g, y, &r)
            })
            .map_err(|e| format!("concat: {e}"))?;
        } else {
            check_inputs(&[a], rel_tol, &|g, ids| {
                let y = g.slice(ids[0], 1, start, end)?;
                let y = g.reshape(y, vec![rows * (end - start)])?;
                readout(g, y, &rs)
            })
            .map_err(|e| format!("slice/reshape: {e}"))?;
        }
    }

    for trial in 0..trials {
        let n = rng.random_range(1..=8);
        let a = random_tensor(&mut rng, vec![n]);
        let b = random_tensor(&mut rng, vec![n]);
        let c = random_tensor(&mut rng, vec![n]);
        let outcome = match trial % 3 {
            0 => check_inputs(&[a, b], rel_tol, &|g, ids| g.dot(ids[0], ids[1])),
            1 => check_inputs(&[a], rel_tol, &|g, ids| g.sum(ids[0])),
            _ => check_inputs(&[a, b, c], rel_tol, &|g, ids| {
                let s = g.add_n(&[ids[0], ids[1], ids[2], ids[0]])?;
                g.sum(s)
            }),
        };
        outcome.map_err(|e| format!("dot/sum/add_n: {e}"))?;
    }
    Ok(())
}

/// Randomized FD checks of training-mode batch normalization with respect
/// to the input, gamma, and beta.
pub fn check_batch_norm(trials: usize, seed: u64, rel_tol: f64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let b = rng.random_range(2..=6);
        let f = rng.random_range(1..=5);
        let x = random_tensor(&mut rng, vec![b, f]);
        let gamma = random_tensor(&mut rng, vec![f]);
        let beta = random_tensor(&mut rng, vec![f]);
        let r = random_tensor(&mut rng, vec![b, f]);

        let eval = |x: &Tensor,
                    gamma: &Tensor,
                    beta: &Tensor|
         -> Result<(f64, Tensor, Tensor, Tensor)> {
            let mut layer = BatchNormLayer::new(f);
            layer.gamma = gamma.clone();
            layer.beta = beta.clone();
            let mut g = Graph::new();
            let xid = g.leaf(x.clone());
            let bound = layer.forward_train(&mut g, xid)?;
            let root = readout(&mut g, bound.out, &r)?;
            g.backward(root)?;
            Ok((
                g.value(root).scalar_value()?,
                g.grad(xid),
                g.grad(bound.gamma),
                g.grad(bound.beta),
            ))
        };
        let (_, gx, gg, gb) = eval(&x, &gamma, &beta).map_err(|e| e.to_string())?;

        let check = |target: usize, k: usize, analytic: f64| -> CheckResult {
            let ok = check_derivative(
                |v| {
                    let mut xs = x.clone();
                    let mut gs = gamma.clone();
                    let mut bs = beta.clone();
                    match target {
                        0 => xs.data_mut()[k] = v,
                        1 => gs.data_mut()[k] = v,
                        _ => bs.data_mut()[k] = v,
                    }
                    eval(&xs, &gs, &bs).map(|(val, _, _, _)| val)
                },
                match target {
                    0 => x.data()[k],
                    1 => gamma.data()[k],
                    _ => beta.data()[k],
                },
                analytic,
                rel_tol,
            )
            .map_err(|e| e.to_string())?;
            if !ok {
                return Err(format!(
                    "batch norm trial {trial} target {target} entry {k}: analytic {analytic} disagrees with finite differences"
                ));
            }
            Ok(())
        };
        for k in 0..x.numel() {
            check(0, k, gx.data()[k])?;
        }
        for k in 0..f {
            check(1, k, gg.data()[k])?;
            check(2, k, gb.data()[k])?;
        }
    }
    Ok(())
}

/// Randomized FD checks of one LSTM cell step with respect to all weight
/// matrices, the bias, the input, and both carried states.
pub fn check_lstm_step(trials: usize, seed: u64, rel_tol: f64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let d = rng.random_range(1..=4);
        let h = rng.random_range(1..=4);
        let params = LstmParams::new(&mut rng, d, h);
        let x = random_tensor(&mut rng, vec![1, d]);
        let h0 = random_tensor(&mut rng, vec![1, h]);
        let c0 = random_tensor(&mut rng, vec![1, h]);
        let r = random_tensor(&mut rng, vec![1, h]);

        let eval = |tensors: &[Tensor; 6]| -> Result<(f64, Vec<Tensor>)> {
            let p = LstmParams {
                w_input: tensors[0].clone(),
                w_hidden: tensors[1].clone(),
                bias: tensors[2].clone(),
                input_dim: d,
                hidden_dim: h,
            };
            let mut g = Graph::new();
            let xid = g.leaf(tensors[3].clone());
            let hid = g.leaf(tensors[4].clone());
            let cid = g.leaf(tensors[5].clone());
            let nodes = p.bind(&mut g);
            let (hn, _) = p.step(&mut g, xid, hid, cid, &nodes)?;
            let root = readout(&mut g, hn, &r)?;
            g.backward(root)?;
            let grads = vec![
                g.grad(nodes.w_input),
                g.grad(nodes.w_hidden),
                g.grad(nodes.bias),
                g.grad(xid),
                g.grad(hid),
                g.grad(cid),
            ];
            Ok((g.value(root).scalar_value()?, grads))
        };

        let tensors = [
            params.w_input.clone(),
            params.w_hidden.clone(),
            params.bias.clone(),
            x,
            h0,
            c0,
        ];
        let (_, analytic) = eval(&tensors).map_err(|e| e.to_string())?;

        for ti in 0..6 {
            let numel = tensors[ti].numel();
            for _ in 0..3.min(numel) {
                let k = rng.random_range(0..numel);
                let a = analytic[ti].data()[k];
                let ok = check_derivative(
                    |v| {
                        let mut probe = tensors.clone();
                        probe[ti].data_mut()[k] = v;
                        eval(&probe).map(|(val, _)| val)
                    },
                    tensors[ti].data()[k],
                    a,
                    rel_tol,
                )
                .map_err(|e| e.to_string())?;
                if !ok {
                    return Err(format!(
                        "lstm trial {trial} operand {ti} entry {k}: analytic {a} disagrees with finite differences"
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Randomized FD checks of the full training objective at toy widths:
/// every parameter group (embeddings, MLP weights, batch-norm gamma/beta,
/// LSTM weights) is spot-checked each trial.
pub fn check_nlra_loss(
    trials: usize,
    seed: u64,
    dim: usize,
    hidden: usize,
    rel_tol: f64,
) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let words = 6;
        let mut vocab = Vocabulary::new();
        for i in 0..words {
            vocab.intern(&format!("w{i}"));
        }
        let data: Vec<f64> = (0..words * dim)
            .map(|_| rng.random_range(-0.8..0.8))
            .collect();
        let table = EmbeddingTable::new(
            vocab,
            Tensor::new(vec![words, dim], data).expect("finite"),
            true,
        )
        .expect("table");
        let config = TrainingConfig {
            epochs: 1,
            learning_rate: 0.01,
            negatives: 2,
            batch_size: 4,
            seed: trial as u64,
            hidden,
            neg_smoothing: 1.0,
            replicate_cap: 100,
        };
        let mut trainer = NlraTrainer::new(&table, &config).map_err(|e| e.to_string())?;

        let n_samples = rng.random_range(2..=3);
        let patterns: Vec<Vec<usize>> = (0..3)
            .map(|_| {
                let len = rng.random_range(1..=3);
                (0..len).map(|_| rng.random_range(0..=words)).collect()
            })
            .collect();
        let samples: Vec<TrainSample> = (0..n_samples)
            .map(|_| {
                let left = rng.random_range(0..words);
                let mut right = rng.random_range(0..words);
                if right == left {
                    right = (right + 1) % words;
                }
                TrainSample {
                    left,
                    right,
                    pattern: patterns[rng.random_range(0..3)].clone(),
                    negatives: (0..2)
                        .map(|_| patterns[rng.random_range(0..3)].clone())
                        .collect(),
                }
            })
            .collect();

        let grads = trainer.batch_gradients(&samples).map_err(|e| e.to_string())?;
        for name in trainer.param_names() {
            let numel = trainer
                .param_mut(&name)
                .expect("named parameter exists")
                .numel();
            let k = rng.random_range(0..numel);
            let analytic = grads[&name].data()[k];
            let base = trainer.param_mut(&name).unwrap().data()[k];
            let ok = check_derivative(
                |v| {
                    trainer.param_mut(&name).unwrap().data_mut()[k] = v;
                    let out = trainer.batch_objective(&samples);
                    trainer.param_mut(&name).unwrap().data_mut()[k] = base;
                    out
                },
                base,
                analytic,
                rel_tol,
            )
            .map_err(|e| e.to_string())?;
            if !ok {
                return Err(format!(
                    "trial {trial} parameter {name} entry {k}: analytic {analytic} disagrees with finite differences"
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_diff_of_square() {
        let d: f64 = central_diff(|x| Ok::<_, ()>(x * x), 3.0, 1e-5).unwrap();
        assert!((d - 6.0).abs() < 1e-8);
    }

    #[test]
    fn closeness_policy() {
        assert!(grad_close(1.0, 1.0005, 1e-3));
        assert!(!grad_close(1.0, 1.01, 1e-3));
        assert!(grad_close(0.0, 1e-8, 1e-3));
        assert!(!grad_close(0.0, 1e-4, 1e-3));
    }
}
