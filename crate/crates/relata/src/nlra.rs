//! Neural latent relational analysis: a word pair (a, b) is encoded by an
//! MLP over [v_a; v_b; v_b − v_a], a pattern by the final hidden state of
//! an LSTM over its token embeddings, and both are trained jointly so that
//! observed pair–pattern co-occurrences get high inner products while
//! sampled negative patterns get low ones.
//!
//! Because the pair encoder maps out of word-embedding space, any
//! in-vocabulary pair has a representation — including pairs that never
//! co-occur with a pattern in the corpus. The final pair representation is
//! the concatenation [h_(a,b); h_(b,a)].
//!
//! Training is single-threaded and fully deterministic under a fixed seed:
//! parameter init, epoch shuffles, and negative sampling each draw from
//! their own seeded stream.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binio::{open_reader, open_writer};
use crate::corpus::{Pattern, TripleStore};
use crate::embeddings::{EmbeddingTable, Vocabulary};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::nn::{
    adagrad_update, adagrad_update_slice, AdaGradState, Affine, BatchNormLayer, BnMode,
    LstmParams, DEFAULT_ADAGRAD_EPSILON,
};
use crate::tensor::Tensor;

const MAGIC: &[u8] = b"RELATA-NLRA";
const VERSION: u32 = 1;

const SHUFFLE_SALT: u64 = 0x9E37_79B9_7F4A_7C15;
const SAMPLER_SALT: u64 = 0xD1B5_4A32_D192_ED03;

/// How many attempts the sampler makes to avoid drawing the positive
/// pattern before it gives the slot up.
const REJECTION_ATTEMPTS: usize = 10;

#[derive(Clone, Debug)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub negatives: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub hidden: usize,
    /// Exponent applied to pattern frequencies in the negative-sampling
    /// distribution (1.0 = proportional to raw frequency).
    pub neg_smoothing: f64,
    /// A triple with count c enters each epoch min(c, replicate_cap) times.
    pub replicate_cap: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 50,
            learning_rate: 0.01,
            negatives: 10,
            batch_size: 128,
            seed: 42,
            hidden: 300,
            neg_smoothing: 1.0,
            replicate_cap: 100,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::Argument(
                "epochs, batch size, and hidden width must be positive".into(),
            ));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Argument("learning rate must be positive".into()));
        }
        if self.neg_smoothing <= 0.0 || !self.neg_smoothing.is_finite() {
            return Err(Error::Argument("smoothing exponent must be positive".into()));
        }
        if self.replicate_cap == 0 {
            return Err(Error::Argument("replicate cap must be positive".into()));
        }
        Ok(())
    }
}

/// Draws negative patterns with probability proportional to
/// frequency^smoothing, from a seeded stream.
pub struct NegativeSampler {
    patterns: Vec<Vec<usize>>,
    cumulative: Vec<f64>,
    total: f64,
    rng: ChaCha8Rng,
    dropped: u64,
}

impl NegativeSampler {
    /// `patterns` are (token-id sequence, frequency) entries; order defines
    /// the sampling table, so pass them in a canonical order.
    pub fn new(patterns: Vec<(Vec<usize>, u64)>, smoothing: f64, seed: u64) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::TrainingData("no patterns to sample from".into()));
        }
        let mut cumulative = Vec::with_capacity(patterns.len());
        let mut total = 0.0;
        for (tokens, freq) in &patterns {
            if tokens.is_empty() {
                return Err(Error::Argument("empty pattern in sampler".into()));
            }
            if *freq == 0 {
                return Err(Error::Argument("zero-frequency pattern in sampler".into()));
            }
            total += (*freq as f64).powf(smoothing);
            cumulative.push(total);
        }
        Ok(NegativeSampler {
            patterns: patterns.into_iter().map(|(t, _)| t).collect(),
            cumulative,
            total,
            rng: ChaCha8Rng::seed_from_u64(seed),
            dropped: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Negative slots abandoned after repeated collisions with the positive.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn sample(&mut self) -> &[usize] {
        let r: f64 = self.rng.random::<f64>() * self.total;
        let idx = self
            .cumulative
            .partition_point(|&c| c <= r)
            .min(self.patterns.len() - 1);
        &self.patterns[idx]
    }

    /// Draw `count` negatives for one positive occurrence. A draw equal to
    /// the positive pattern is rejected and resampled; after
    /// [`REJECTION_ATTEMPTS`] collisions the slot is dropped, so a corpus
    /// with a single pattern trains on the positive term alone.
    pub fn sample_negatives(&mut self, positive: &[usize], count: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(count);
        'slots: for _ in 0..count {
            for _ in 0..REJECTION_ATTEMPTS {
                let cand = self.sample().to_vec();
                if cand != positive {
                    out.push(cand);
                    continue 'slots;
                }
            }
            self.dropped += 1;
            if self.dropped == 1 || self.dropped.is_power_of_two() {
                log::warn!(
                    "negative sampling dropped {} slot(s): the positive pattern dominates the distribution",
                    self.dropped
                );
            }
        }
        out
    }
}

/// One training example in vocabulary-index form.
#[derive(Clone, Debug)]
pub struct TrainSample {
    pub left: usize,
    pub right: usize,
    pub pattern: Vec<usize>,
    pub negatives: Vec<Vec<usize>>,
}

/// Trained NLRA parameters: the shared (trainable) embedding table with a
/// dedicated UNK row for out-of-vocabulary pattern tokens, the MLP pair
/// encoder, and the LSTM pattern encoder.
pub struct NlraModel {
    vocab: Vocabulary,
    emb: Tensor, // (|V|+1) × d, last row is UNK
    dim: usize,
    hidden: usize,
    mlp: Vec<Affine>,
    bns: Vec<BatchNormLayer>,
    lstm: LstmParams,
    config: TrainingConfig,
}

impl NlraModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn unk_index(&self) -> usize {
        self.vocab.len()
    }

    fn word_id(&self, word: &str) -> Result<usize> {
        self.vocab
            .get(word)
            .ok_or_else(|| Error::Oov(word.to_string()))
    }

    fn token_id(&self, token: &str) -> usize {
        self.vocab.get(token).unwrap_or(self.vocab.len())
    }

    fn row_leaf(&self, g: &mut Graph, index: usize) -> NodeId {
        let t = Tensor::new(vec![1, self.dim], self.emb.row(index).to_vec())
            .expect("embedding rows are finite");
        g.leaf(t)
    }

    /// MLP pair encoding h_(a,b) as a graph node (inference-mode batch
    /// normalization, so single pairs are well-defined).
    fn encode_pair_node(&self, g: &mut Graph, a: usize, b: usize) -> Result<NodeId> {
        let va = self.row_leaf(g, a);
        let vb = self.row_leaf(g, b);
        let diff = g.sub(vb, va)?;
        let mut x = g.concat(&[va, vb, diff], 1)?;
        for (layer, bn) in self.mlp.iter().zip(&self.bns) {
            let (w, bias) = layer.bind(g);
            x = Affine::forward(g, x, w, bias)?;
            x = bn.forward_infer(g, x)?;
            x = g.tanh(x)?;
        }
        Ok(x)
    }

    /// h_(a,b): deterministic pair encoding of width `hidden`.
    pub fn encode_pair(&self, a: &str, b: &str) -> Result<Tensor> {
        let ai = self.word_id(a)?;
        let bi = self.word_id(b)?;
        let mut g = Graph::new();
        let node = self.encode_pair_node(&mut g, ai, bi)?;
        Tensor::new(vec![self.hidden], g.value(node).data().to_vec())
    }

    /// v_p: the LSTM's final hidden state after consuming the pattern
    /// tokens in order. Out-of-vocabulary tokens use the learned UNK row.
    pub fn encode_pattern(&self, p: &Pattern) -> Result<Tensor> {
        if p.is_empty() {
            return Err(Error::Argument("cannot encode an empty pattern".into()));
        }
        let mut g = Graph::new();
        let tokens: Vec<NodeId> = p
            .tokens()
            .iter()
            .map(|t| self.row_leaf(&mut g, self.token_id(t)))
            .collect();
        let nodes = self.lstm.bind(&mut g);
        let h = self.lstm.encode(&mut g, &tokens, &nodes)?;
        Tensor::new(vec![self.hidden], g.value(h).data().to_vec())
    }

    /// The pair representation [h_(a,b); h_(b,a)], width 2·hidden. Defined
    /// for every in-vocabulary pair whether or not it co-occurs with any
    /// pattern.
    pub fn pair_representation(&self, a: &str, b: &str) -> Result<Tensor> {
        let fwd = self.encode_pair(a, b)?;
        let bwd = self.encode_pair(b, a)?;
        let mut data = fwd.data().to_vec();
        data.extend_from_slice(bwd.data());
        Tensor::new(vec![2 * self.hidden], data)
    }

    pub fn save(&self, path: impl AsRef<Path>, meta: &str) -> Result<()> {
        let path = path.as_ref();
        let mut w = open_writer(path)?;
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.string(meta)?;
        w.u32(self.dim as u32)?;
        w.u32(self.hidden as u32)?;
        w.u64(self.config.epochs as u64)?;
        w.f64(self.config.learning_rate)?;
        w.u64(self.config.negatives as u64)?;
        w.u64(self.config.batch_size as u64)?;
        w.u64(self.config.seed)?;
        w.f64(self.config.neg_smoothing)?;
        w.u64(self.config.replicate_cap)?;
        w.u64(self.vocab.len() as u64)?;
        for word in self.vocab.words() {
            w.string(word)?;
        }
        w.tensor_f64(&self.emb)?;
        for (layer, bn) in self.mlp.iter().zip(&self.bns) {
            w.tensor_f64(&layer.weight)?;
            w.tensor_f64(&layer.bias)?;
            w.tensor_f64(&bn.gamma)?;
            w.tensor_f64(&bn.beta)?;
            w.tensor_f64(&bn.running_mean)?;
            w.tensor_f64(&bn.running_var)?;
            w.f64(bn.momentum)?;
            w.f64(bn.eps)?;
        }
        w.tensor_f64(&self.lstm.w_input)?;
        w.tensor_f64(&self.lstm.w_hidden)?;
        w.tensor_f64(&self.lstm.bias)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(NlraModel, String)> {
        let path = path.as_ref();
        let mut r = open_reader(path)?;
        r.expect_magic(MAGIC)?;
        r.expect_version(VERSION)?;
        let meta = r.string()?;
        let dim = r.u32()? as usize;
        let hidden = r.u32()? as usize;
        let config = TrainingConfig {
            epochs: r.u64()? as usize,
            learning_rate: r.f64()?,
            negatives: r.u64()? as usize,
            batch_size: r.u64()? as usize,
            seed: r.u64()?,
            hidden,
            neg_smoothing: r.f64()?,
            replicate_cap: r.u64()?,
        };
        let count = r.u64()? as usize;
        let mut vocab = Vocabulary::new();
        for _ in 0..count {
            let word = r.string()?;
            if vocab.get(&word).is_some() {
                return Err(r.fail(format!("duplicate vocabulary word {word:?}")));
            }
            vocab.intern(&word);
        }
        let emb = r.tensor_f64()?;
        if emb.shape() != [count + 1, dim] {
            return Err(r.fail("embedding matrix shape mismatch"));
        }
        let mut mlp = Vec::with_capacity(3);
        let mut bns = Vec::with_capacity(3);
        for _ in 0..3 {
            let weight = r.tensor_f64()?;
            let bias = r.tensor_f64()?;
            mlp.push(Affine { weight, bias });
            let gamma = r.tensor_f64()?;
            let beta = r.tensor_f64()?;
            let running_mean = r.tensor_f64()?;
            let running_var = r.tensor_f64()?;
            let momentum = r.f64()?;
            let eps = r.f64()?;
            bns.push(BatchNormLayer {
                gamma,
                beta,
                running_mean,
                running_var,
                momentum,
                eps,
                mode: BnMode::Inference,
            });
        }
        let w_input = r.tensor_f64()?;
        let w_hidden = r.tensor_f64()?;
        let bias = r.tensor_f64()?;
        r.expect_eof()?;
        if w_input.shape() != [dim, 4 * hidden]
            || w_hidden.shape() != [hidden, 4 * hidden]
            || bias.shape() != [4 * hidden]
        {
            return Err(Error::file(
                path.display().to_string(),
                "pattern-encoder parameter shapes inconsistent with header",
            ));
        }
        let lstm = LstmParams {
            w_input,
            w_hidden,
            bias,
            input_dim: dim,
            hidden_dim: hidden,
        };
        Ok((
            NlraModel {
                vocab,
                emb,
                dim,
                hidden,
                mlp,
                bns,
                lstm,
                config,
            },
            meta,
        ))
    }
}

struct BatchBindings {
    emb_rows: Vec<(usize, NodeId)>,
    mlp: Vec<(NodeId, NodeId)>,
    bns: Vec<(NodeId, NodeId)>,
    lstm_w_input: NodeId,
    lstm_w_hidden: NodeId,
    lstm_bias: NodeId,
}

struct BatchForward {
    objective_node: NodeId,
    loss_root: NodeId,
    objective: f64,
    bindings: BatchBindings,
}

/// Owns the model parameters and per-parameter AdaGrad state during
/// training.
pub struct NlraTrainer {
    model: NlraModel,
    trainable_emb: bool,
    emb_state: AdaGradState,
    mlp_states: Vec<(AdaGradState, AdaGradState)>,
    bn_states: Vec<(AdaGradState, AdaGradState)>,
    lstm_states: [AdaGradState; 3],
}

impl NlraTrainer {
    /// Initialize parameters from the pretrained table. The UNK row starts
    /// at zero. Initialization draws from a ChaCha stream seeded by
    /// `config.seed` in a fixed order, so construction is reproducible.
    pub fn new(table: &EmbeddingTable, config: &TrainingConfig) -> Result<Self> {
        config.validate()?;
        let d = table.dim();
        let h = config.hidden;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut mlp = Vec::with_capacity(3);
        let mut bns = Vec::with_capacity(3);
        for layer in 0..3 {
            let d_in = if layer == 0 { 3 * d } else { h };
            mlp.push(Affine::new(&mut rng, d_in, h));
            bns.push(BatchNormLayer::new(h));
        }
        let lstm = LstmParams::new(&mut rng, d, h);

        let mut emb_data = table.matrix().data().to_vec();
        emb_data.extend(std::iter::repeat_n(0.0, d)); // UNK row
        let emb = Tensor::new(vec![table.len() + 1, d], emb_data)?;

        let lr = config.learning_rate;
        let eps = DEFAULT_ADAGRAD_EPSILON;
        let emb_state = AdaGradState::new(emb.shape().to_vec(), lr, eps)?;
        let mut mlp_states = Vec::with_capacity(3);
        let mut bn_states = Vec::with_capacity(3);
        for (layer, bn) in mlp.iter().zip(&bns) {
            mlp_states.push((
                AdaGradState::new(layer.weight.shape().to_vec(), lr, eps)?,
                AdaGradState::new(layer.bias.shape().to_vec(), lr, eps)?,
            ));
            bn_states.push((
                AdaGradState::new(bn.gamma.shape().to_vec(), lr, eps)?,
                AdaGradState::new(bn.beta.shape().to_vec(), lr, eps)?,
            ));
        }
        let lstm_states = [
            AdaGradState::new(lstm.w_input.shape().to_vec(), lr, eps)?,
            AdaGradState::new(lstm.w_hidden.shape().to_vec(), lr, eps)?,
            AdaGradState::new(lstm.bias.shape().to_vec(), lr, eps)?,
        ];

        Ok(NlraTrainer {
            model: NlraModel {
                vocab: table.vocab().clone(),
                emb,
                dim: d,
                hidden: h,
                mlp,
                bns,
                lstm,
                config: config.clone(),
            },
            trainable_emb: table.trainable(),
            emb_state,
            mlp_states,
            bn_states,
            lstm_states,
        })
    }

    pub fn model(&self) -> &NlraModel {
        &self.model
    }

    /// Switch batch normalization to inference mode and release the model.
    pub fn into_model(mut self) -> NlraModel {
        for bn in &mut self.model.bns {
            bn.mode = BnMode::Inference;
        }
        self.model
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec!["embedding".to_string()];
        for i in 0..self.model.mlp.len() {
            names.push(format!("mlp{i}.weight"));
            names.push(format!("mlp{i}.bias"));
            names.push(format!("bn{i}.gamma"));
            names.push(format!("bn{i}.beta"));
        }
        names.extend(
            ["lstm.w_input", "lstm.w_hidden", "lstm.bias"]
                .iter()
                .map(|s| s.to_string()),
        );
        names
    }

    /// Mutable access to a named parameter tensor (for gradient checking).
    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        if name == "embedding" {
            return Some(&mut self.model.emb);
        }
        if let Some(rest) = name.strip_prefix("mlp") {
            let (idx, field) = rest.split_once('.')?;
            let i: usize = idx.parse().ok()?;
            let layer = self.model.mlp.get_mut(i)?;
            return match field {
                "weight" => Some(&mut layer.weight),
                "bias" => Some(&mut layer.bias),
                _ => None,
            };
        }
        if let Some(rest) = name.strip_prefix("bn") {
            let (idx, field) = rest.split_once('.')?;
            let i: usize = idx.parse().ok()?;
            let bn = self.model.bns.get_mut(i)?;
            return match field {
                "gamma" => Some(&mut bn.gamma),
                "beta" => Some(&mut bn.beta),
                _ => None,
            };
        }
        match name {
            "lstm.w_input" => Some(&mut self.model.lstm.w_input),
            "lstm.w_hidden" => Some(&mut self.model.lstm.w_hidden),
            "lstm.bias" => Some(&mut self.model.lstm.bias),
            _ => None,
        }
    }

    fn forward_batch(&mut self, g: &mut Graph, samples: &[TrainSample]) -> Result<BatchForward> {
        if samples.is_empty() {
            return Err(Error::Argument("empty training batch".into()));
        }
        let d = self.model.dim;
        let negatives = self.model.config.negatives;

        let mut row_nodes: HashMap<usize, NodeId> = HashMap::new();
        let mut row_order: Vec<(usize, NodeId)> = Vec::new();
        let emb = &self.model.emb;
        let mut row_node = |g: &mut Graph, idx: usize| -> NodeId {
            if let Some(&n) = row_nodes.get(&idx) {
                return n;
            }
            let t = Tensor::new(vec![1, d], emb.row(idx).to_vec()).expect("finite row");
            let n = g.leaf(t);
            row_nodes.insert(idx, n);
            row_order.push((idx, n));
            n
        };

        // Pair inputs: one row [v_a; v_b; v_b − v_a] per sample.
        let mut inputs = Vec::with_capacity(samples.len());
        for s in samples {
            let va = row_node(g, s.left);
            let vb = row_node(g, s.right);
            let diff = g.sub(vb, va)?;
            inputs.push(g.concat(&[va, vb, diff], 1)?);
        }
        let mut x = if inputs.len() == 1 {
            inputs[0]
        } else {
            g.concat(&inputs, 0)?
        };

        let mut mlp_bind = Vec::with_capacity(3);
        let mut bn_bind = Vec::with_capacity(3);
        for (layer, bn) in self.model.mlp.iter().zip(self.model.bns.iter_mut()) {
            let (w, b) = layer.bind(g);
            x = Affine::forward(g, x, w, b)?;
            let bound = bn.forward_train(g, x)?;
            x = g.tanh(bound.out)?;
            mlp_bind.push((w, b));
            bn_bind.push((bound.gamma, bound.beta));
        }
        let pair_mat = x; // batch × hidden

        // Encode each distinct pattern in the batch once; gradient
        // accumulation handles reuse across samples.
        let lstm_nodes = self.model.lstm.bind(g);
        let lstm = &self.model.lstm;
        let mut pattern_nodes: HashMap<Vec<usize>, NodeId> = HashMap::new();
        let mut terms = Vec::with_capacity(samples.len() * (1 + negatives));
        for (i, s) in samples.iter().enumerate() {
            let hi = g.slice(pair_mat, 0, i, i + 1)?;
            let mut encode = |g: &mut Graph, tokens: &[usize]| -> Result<NodeId> {
                if let Some(&n) = pattern_nodes.get(tokens) {
                    return Ok(n);
                }
                let leaves: Vec<NodeId> = tokens.iter().map(|&t| row_node(g, t)).collect();
                let n = lstm.encode(g, &leaves, &lstm_nodes)?;
                pattern_nodes.insert(tokens.to_vec(), n);
                Ok(n)
            };
            let pos = encode(g, &s.pattern)?;
            let dpos = g.dot(hi, pos)?;
            terms.push(g.log_sigmoid(dpos)?);
            for neg in &s.negatives {
                let nn = encode(g, neg)?;
                let dneg = g.dot(hi, nn)?;
                let flipped = g.scale(dneg, -1.0)?;
                terms.push(g.log_sigmoid(flipped)?);
            }
        }
        let objective_node = g.add_n(&terms)?;
        let loss_root = g.scale(objective_node, -1.0)?;
        let objective = g.value(objective_node).scalar_value()?;
        Ok(BatchForward {
            objective_node,
            loss_root,
            objective,
            bindings: BatchBindings {
                emb_rows: row_order,
                mlp: mlp_bind,
                bns: bn_bind,
                lstm_w_input: lstm_nodes.w_input,
                lstm_w_hidden: lstm_nodes.w_hidden,
                lstm_bias: lstm_nodes.bias,
            },
        })
    }

    /// The batch objective L = Σ log σ(v_p · h) + Σ log σ(−v_p′ · h);
    /// always ≤ 0. The trainer maximizes this value.
    pub fn batch_objective(&mut self, samples: &[TrainSample]) -> Result<f64> {
        let mut g = Graph::new();
        Ok(self.forward_batch(&mut g, samples)?.objective)
    }

    /// Convert count-form triples into samples with freshly drawn negatives
    /// and return the batch objective.
    pub fn batch_loss(
        &mut self,
        positives: &[(String, String, Pattern)],
        sampler: &mut NegativeSampler,
    ) -> Result<f64> {
        if positives.is_empty() {
            return Err(Error::Argument("empty training batch".into()));
        }
        let negatives = self.model.config.negatives;
        let samples = positives
            .iter()
            .map(|(a, b, p)| {
                let left = self.model.word_id(a)?;
                let right = self.model.word_id(b)?;
                let pattern: Vec<usize> =
                    p.tokens().iter().map(|t| self.model.token_id(t)).collect();
                let negatives = sampler.sample_negatives(&pattern, negatives);
                Ok(TrainSample {
                    left,
                    right,
                    pattern,
                    negatives,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.batch_objective(&samples)
    }

    /// Gradients of the batch objective with respect to every parameter
    /// group, keyed by [`NlraTrainer::param_names`].
    pub fn batch_gradients(&mut self, samples: &[TrainSample]) -> Result<BTreeMap<String, Tensor>> {
        let mut g = Graph::new();
        let fwd = self.forward_batch(&mut g, samples)?;
        g.backward(fwd.objective_node)?;
        let mut out = BTreeMap::new();
        let mut emb_grad = Tensor::zeros(self.model.emb.shape().to_vec());
        let d = self.model.dim;
        for &(row, node) in &fwd.bindings.emb_rows {
            let grad = g.grad(node);
            emb_grad.data_mut()[row * d..(row + 1) * d].copy_from_slice(grad.data());
        }
        out.insert("embedding".to_string(), emb_grad);
        for (i, (w, b)) in fwd.bindings.mlp.iter().enumerate() {
            out.insert(format!("mlp{i}.weight"), g.grad(*w));
            out.insert(format!("mlp{i}.bias"), g.grad(*b));
        }
        for (i, (gamma, beta)) in fwd.bindings.bns.iter().enumerate() {
            out.insert(format!("bn{i}.gamma"), g.grad(*gamma));
            out.insert(format!("bn{i}.beta"), g.grad(*beta));
        }
        out.insert("lstm.w_input".to_string(), g.grad(fwd.bindings.lstm_w_input));
        out.insert(
            "lstm.w_hidden".to_string(),
            g.grad(fwd.bindings.lstm_w_hidden),
        );
        out.insert("lstm.bias".to_string(), g.grad(fwd.bindings.lstm_bias));
        Ok(out)
    }

    /// One AdaGrad ascent step on the batch objective. Returns the
    /// objective value before the update.
    pub fn batch_step(&mut self, samples: &[TrainSample]) -> Result<f64> {
        let mut g = Graph::new();
        let fwd = self.forward_batch(&mut g, samples)?;
        g.backward(fwd.loss_root)?;

        if self.trainable_emb {
            let d = self.model.dim;
            let mut rows: Vec<(usize, NodeId)> = fwd.bindings.emb_rows.clone();
            rows.sort_by_key(|&(row, _)| row);
            for (row, node) in rows {
                let grad = g.grad(node);
                adagrad_update_slice(
                    &mut self.model.emb.data_mut()[row * d..(row + 1) * d],
                    &mut self.emb_state.accumulator_mut()[row * d..(row + 1) * d],
                    grad.data(),
                    self.model.config.learning_rate,
                    DEFAULT_ADAGRAD_EPSILON,
                )?;
            }
        }
        for ((layer, (ws, bs)), (w, b)) in self
            .model
            .mlp
            .iter_mut()
            .zip(self.mlp_states.iter_mut())
            .zip(&fwd.bindings.mlp)
        {
            adagrad_update(&mut layer.weight, &g.grad(*w), ws)?;
            adagrad_update(&mut layer.bias, &g.grad(*b), bs)?;
        }
        for ((bn, (gs, bs)), (gamma, beta)) in self
            .model
            .bns
            .iter_mut()
            .zip(self.bn_states.iter_mut())
            .zip(&fwd.bindings.bns)
        {
            adagrad_update(&mut bn.gamma, &g.grad(*gamma), gs)?;
            adagrad_update(&mut bn.beta, &g.grad(*beta), bs)?;
        }
        adagrad_update(
            &mut self.model.lstm.w_input,
            &g.grad(fwd.bindings.lstm_w_input),
            &mut self.lstm_states[0],
        )?;
        adagrad_update(
            &mut self.model.lstm.w_hidden,
            &g.grad(fwd.bindings.lstm_w_hidden),
            &mut self.lstm_states[1],
        )?;
        adagrad_update(
            &mut self.model.lstm.bias,
            &g.grad(fwd.bindings.lstm_bias),
            &mut self.lstm_states[2],
        )?;
        Ok(fwd.objective)
    }
}

pub struct TrainOutcome {
    pub model: NlraModel,
    /// Mean −L per positive, one entry per epoch.
    pub epoch_losses: Vec<f64>,
    /// Triples skipped because an endpoint word is out of vocabulary.
    pub filtered_triples: usize,
    pub positives_per_epoch: usize,
}

/// Full training loop: filter the store to in-vocabulary pairs, replicate
/// triples by count (capped), and run seeded shuffled minibatch AdaGrad
/// ascent for the configured epochs.
pub fn train_full(
    store: &TripleStore,
    table: &EmbeddingTable,
    config: &TrainingConfig,
) -> Result<TrainOutcome> {
    let mut trainer = NlraTrainer::new(table, config)?;
    let vocab = trainer.model.vocab.clone();
    let unk = trainer.model.unk_index();

    struct Usable {
        left: usize,
        right: usize,
        pattern: Vec<usize>,
        count: u64,
    }
    let mut usable = Vec::new();
    let mut filtered = 0usize;
    for t in store.entries() {
        match (vocab.get(&t.left), vocab.get(&t.right)) {
            (Some(l), Some(r)) => usable.push(Usable {
                left: l,
                right: r,
                pattern: t
                    .pattern
                    .tokens()
                    .iter()
                    .map(|tok| vocab.get(tok).unwrap_or(unk))
                    .collect(),
                count: t.count,
            }),
            _ => filtered += 1,
        }
    }
    if filtered > 0 {
        log::warn!("{filtered} triples dropped: endpoint word out of vocabulary");
    }
    if usable.is_empty() {
        return Err(Error::TrainingData(
            "no usable training triples: every pair has an out-of-vocabulary word".into(),
        ));
    }

    let mut freq: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for u in &usable {
        *freq.entry(u.pattern.clone()).or_insert(0) += u.count;
    }
    let mut sampler = NegativeSampler::new(
        freq.into_iter().collect(),
        config.neg_smoothing,
        config.seed ^ SAMPLER_SALT,
    )?;

    let mut templates: Vec<usize> = Vec::new();
    for (i, u) in usable.iter().enumerate() {
        for _ in 0..u.count.min(config.replicate_cap) {
            templates.push(i);
        }
    }
    if templates.len() == 1 {
        // Batch statistics need at least two rows; an identical twin keeps
        // single-triple stores trainable without changing the gradient
        // direction.
        templates.push(templates[0]);
        log::info!("single positive occurrence duplicated to satisfy batch statistics");
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SALT);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        templates.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut positives = 0usize;
        for (start, end) in plan_batches(templates.len(), config.batch_size) {
            let samples: Vec<TrainSample> = templates[start..end]
                .iter()
                .map(|&ti| {
                    let u = &usable[ti];
                    TrainSample {
                        left: u.left,
                        right: u.right,
                        pattern: u.pattern.clone(),
                        negatives: sampler.sample_negatives(&u.pattern, config.negatives),
                    }
                })
                .collect();
            let objective = trainer.batch_step(&samples)?;
            loss_sum += -objective;
            positives += samples.len();
        }
        let mean = loss_sum / positives as f64;
        epoch_losses.push(mean);
        log::info!("epoch {}/{}: loss {mean:.6}", epoch + 1, config.epochs);
    }

    Ok(TrainOutcome {
        model: trainer.into_model(),
        epoch_losses,
        filtered_triples: filtered,
        positives_per_epoch: templates.len(),
    })
}

/// Train and return only the model.
pub fn train(
    store: &TripleStore,
    table: &EmbeddingTable,
    config: &TrainingConfig,
) -> Result<NlraModel> {
    Ok(train_full(store, table, config)?.model)
}

/// Contiguous batch ranges; a trailing remainder of one sample is folded
/// into the previous batch so batch statistics stay defined.
fn plan_batches(total: usize, batch_size: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < total {
        let end = (start + batch_size).min(total);
        out.push((start, end));
        start = end;
    }
    if out.len() >= 2 {
        let last = out[out.len() - 1];
        if last.1 - last.0 == 1 {
            out.pop();
            let prev = out.last_mut().expect("len >= 2");
            prev.1 = last.1;
        }
    }
    out
}
