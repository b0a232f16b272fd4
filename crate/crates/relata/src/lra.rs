//! Latent relational analysis: wildcard pattern generalization, feature
//! selection, the 2n×2m pair–pattern count matrix, PPMI weighting, SVD
//! reduction, and cosine scoring of pair vectors.
//!
//! Rows 0..n−1 of the matrix are the target pairs (a_i, b_i) and rows
//! n..2n−1 the reversed pairs (b_i, a_i); columns 0..m−1 hold "X p Y"
//! features and columns m..2m−1 the swapped "Y p X" features. A pair whose
//! forward and reversed rows are entirely zero is flagged "no pattern" and
//! scores 0, so evaluation over full relation lists stays total.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::binio::{open_reader, open_writer};
use crate::corpus::{Pattern, TargetPairSet, TripleStore};
use crate::error::{Error, Result};
use crate::svd::truncated_svd;
use crate::tensor::{cosine_slices, Tensor};

const MAGIC: &[u8] = b"RELATA-LRA";
const VERSION: u32 = 1;

pub const WILDCARD: &str = "*";
pub const DEFAULT_DIM: usize = 300;
pub const DEFAULT_CAP_MULTIPLIER: usize = 20;

/// A pattern with any subset of its positions replaced by the wildcard.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GeneralizedPattern {
    tokens: Vec<String>,
}

impl GeneralizedPattern {
    pub fn from_words(words: &[&str]) -> Self {
        GeneralizedPattern {
            tokens: words.iter().map(|w| w.to_string()).collect(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }

    /// Column label for the forward slot order, e.g. `X is a Y`.
    pub fn label_forward(&self) -> String {
        format!("X {} Y", self.joined())
    }

    /// Column label for the swapped slot order, e.g. `Y is a X`.
    pub fn label_swapped(&self) -> String {
        format!("Y {} X", self.joined())
    }
}

/// All 2^k variants of `p` obtained by independently wildcarding each
/// position (including none and all), sorted and deduplicated.
pub fn generalize(p: &Pattern) -> Vec<GeneralizedPattern> {
    let k = p.len();
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << k) {
        let tokens: Vec<String> = p
            .tokens()
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if mask & (1 << i) != 0 {
                    WILDCARD.to_string()
                } else {
                    t.clone()
                }
            })
            .collect();
        out.insert(GeneralizedPattern { tokens });
    }
    out.into_iter().collect()
}

/// The ordered feature pattern set C with its column-index map.
#[derive(Clone, Debug)]
pub struct FeatureSet {
    patterns: Vec<GeneralizedPattern>,
    index: HashMap<Vec<String>, usize>,
}

impl FeatureSet {
    pub fn from_patterns(patterns: Vec<GeneralizedPattern>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, p) in patterns.iter().enumerate() {
            if index.insert(p.tokens.clone(), i).is_some() {
                return Err(Error::Argument(format!(
                    "duplicate feature pattern {:?}",
                    p.joined()
                )));
            }
        }
        Ok(FeatureSet { patterns, index })
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[GeneralizedPattern] {
        &self.patterns
    }

    pub fn index_of(&self, p: &GeneralizedPattern) -> Option<usize> {
        self.index.get(&p.tokens).copied()
    }
}

/// How candidate feature patterns are ranked.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum FeatureScoring {
    /// Number of distinct unordered target pairs producing the pattern.
    #[default]
    DistinctPairs,
    /// Total co-occurrence count of the pattern.
    Frequency,
}

/// Score every generalized pattern (by distinct pairs by default) and keep
/// the top `cap`, ties broken by lexicographic pattern order. `cap`
/// defaults to 20·|W|.
pub fn select_features(
    store: &TripleStore,
    targets: &TargetPairSet,
    cap: Option<usize>,
) -> Result<FeatureSet> {
    select_features_by(store, targets, cap, FeatureScoring::DistinctPairs)
}

pub fn select_features_by(
    store: &TripleStore,
    targets: &TargetPairSet,
    cap: Option<usize>,
    scoring: FeatureScoring,
) -> Result<FeatureSet> {
    if store.is_empty() {
        return Err(Error::TrainingData(
            "cannot select features from an empty triple store".into(),
        ));
    }
    let cap = cap.unwrap_or(DEFAULT_CAP_MULTIPLIER * targets.len());
    let mut pair_sets: HashMap<Vec<String>, BTreeSet<(String, String)>> = HashMap::new();
    let mut frequencies: HashMap<Vec<String>, u64> = HashMap::new();
    for t in store.entries() {
        let unordered = if t.left <= t.right {
            (t.left.clone(), t.right.clone())
        } else {
            (t.right.clone(), t.left.clone())
        };
        for g in generalize(&t.pattern) {
            match scoring {
                FeatureScoring::DistinctPairs => {
                    pair_sets
                        .entry(g.tokens)
                        .or_default()
                        .insert(unordered.clone());
                }
                FeatureScoring::Frequency => {
                    *frequencies.entry(g.tokens).or_insert(0) += t.count;
                }
            }
        }
    }
    let mut scored: Vec<(u64, GeneralizedPattern)> = match scoring {
        FeatureScoring::DistinctPairs => pair_sets
            .into_iter()
            .map(|(tokens, pairs)| (pairs.len() as u64, GeneralizedPattern { tokens }))
            .collect(),
        FeatureScoring::Frequency => frequencies
            .into_iter()
            .map(|(tokens, count)| (count, GeneralizedPattern { tokens }))
            .collect(),
    };
    scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    scored.truncate(cap);
    FeatureSet::from_patterns(scored.into_iter().map(|(_, p)| p).collect())
}

/// The dense 2n×2m pair–pattern matrix together with its row/column maps.
#[derive(Clone, Debug)]
pub struct PairPatternMatrix {
    values: Tensor,
    pairs: Vec<(String, String)>,
    features: FeatureSet,
}

impl PairPatternMatrix {
    /// Wrap an existing 2n×2m value matrix with its row/column maps.
    pub fn from_parts(
        values: Tensor,
        pairs: Vec<(String, String)>,
        features: FeatureSet,
    ) -> Result<Self> {
        let (rows, cols) = values.dims2()?;
        if rows != 2 * pairs.len() || cols != 2 * features.len() {
            return Err(Error::Dimension(format!(
                "matrix {rows}x{cols} does not match {} pairs and {} features",
                pairs.len(),
                features.len()
            )));
        }
        Ok(PairPatternMatrix {
            values,
            pairs,
            features,
        })
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn features(&self) -> &FeatureSet {
        &self.features
    }

    /// Row index of an ordered pair: forward pairs occupy rows 0..n−1 and
    /// reversed pairs rows n..2n−1.
    pub fn row_of(&self, left: &str, right: &str) -> Option<usize> {
        let n = self.pairs.len();
        self.pairs
            .iter()
            .position(|(a, b)| (a == left && b == right) || (a == right && b == left))
            .map(|i| if self.pairs[i].0 == left { i } else { i + n })
    }

    /// Ordered pair labelling a row.
    pub fn pair_of_row(&self, row: usize) -> (String, String) {
        let n = self.pairs.len();
        if row < n {
            self.pairs[row].clone()
        } else {
            let (a, b) = &self.pairs[row - n];
            (b.clone(), a.clone())
        }
    }

    /// Column label: `X p Y` for columns 0..m−1, `Y p X` for m..2m−1.
    pub fn column_label(&self, col: usize) -> String {
        let m = self.features.len();
        if col < m {
            self.features.patterns()[col].label_forward()
        } else {
            self.features.patterns()[col - m].label_swapped()
        }
    }
}

/// Fill the matrix: a triple (x, y, p′) adds its count to
/// (row (x,y), column "X p Y") and (row (y,x), column "Y p X") for every
/// feature pattern p generalizing p′.
pub fn build_matrix(
    store: &TripleStore,
    features: &FeatureSet,
    targets: &TargetPairSet,
) -> Result<PairPatternMatrix> {
    let n = targets.len();
    let m = features.len();
    if m == 0 {
        return Err(Error::Argument("empty feature set".into()));
    }
    let mut sparse: HashMap<(usize, usize), f64> = HashMap::new();
    let mut skipped = 0u64;
    for t in store.entries() {
        let Some(hit) = targets.lookup(&t.left, &t.right) else {
            skipped += 1;
            continue;
        };
        let row = if hit.forward { hit.pair } else { hit.pair + n };
        let swapped_row = if hit.forward { hit.pair + n } else { hit.pair };
        for g in generalize(&t.pattern) {
            if let Some(j) = features.index_of(&g) {
                *sparse.entry((row, j)).or_insert(0.0) += t.count as f64;
                *sparse.entry((swapped_row, m + j)).or_insert(0.0) += t.count as f64;
            }
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} triples referenced pairs outside the target set and were skipped");
    }
    let mut values = Tensor::zeros(vec![2 * n, 2 * m]);
    for ((r, c), v) in sparse {
        values.set2(r, c, v);
    }
    Ok(PairPatternMatrix {
        values,
        pairs: targets.pairs().to_vec(),
        features: features.clone(),
    })
}

/// Positive pointwise mutual information:
/// entry ← max(0, ln(entry · total / (row_sum · col_sum))).
pub fn ppmi(m: &PairPatternMatrix) -> Result<PairPatternMatrix> {
    let (rows, cols) = m.values.dims2()?;
    let data = m.values.data();
    let total: f64 = data.iter().sum();
    if total <= 0.0 {
        return Err(Error::TrainingData(
            "degenerate pair-pattern matrix: all counts are zero".into(),
        ));
    }
    let mut row_sums = vec![0.0; rows];
    let mut col_sums = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            let v = data[r * cols + c];
            row_sums[r] += v;
            col_sums[c] += v;
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let v = data[r * cols + c];
            if v > 0.0 {
                let pmi = (v * total / (row_sums[r] * col_sums[c])).ln();
                out[r * cols + c] = pmi.max(0.0);
            }
        }
    }
    Ok(PairPatternMatrix {
        values: Tensor::new(vec![rows, cols], out)?,
        pairs: m.pairs.clone(),
        features: m.features.clone(),
    })
}

/// Pair vectors from the SVD of a (weighted) pair–pattern matrix. The
/// forward vector of pair i is row i of U_k·diag(S_k) and the reversed
/// vector row n+i.
#[derive(Debug)]
pub struct LraModel {
    dim: usize,
    pairs: Vec<(String, String)>,
    forward: Vec<Vec<f64>>,
    reversed: Vec<Vec<f64>>,
    no_pattern: Vec<bool>,
    index: HashMap<(String, String), usize>,
}

/// SVD-reduce the matrix to `k` dimensions (clamped to min(2n, 2m) with a
/// warning). Returns the model and whether clamping occurred.
pub fn reduce(m: &PairPatternMatrix, k: usize) -> Result<(LraModel, bool)> {
    let (rows, cols) = m.values.dims2()?;
    let n = m.n_pairs();
    let limit = rows.min(cols);
    let clamped = k > limit;
    let k_eff = k.min(limit).max(1);
    if clamped {
        log::warn!("svd rank {k} exceeds matrix limit {limit}; clamped to {k_eff}");
    }
    let (u, s, _v) = truncated_svd(&m.values, k_eff)?;
    let mut forward = Vec::with_capacity(n);
    let mut reversed = Vec::with_capacity(n);
    let mut no_pattern = Vec::with_capacity(n);
    for i in 0..n {
        let fwd: Vec<f64> = (0..k_eff).map(|j| u.get2(i, j) * s.data()[j]).collect();
        let rev: Vec<f64> = (0..k_eff)
            .map(|j| u.get2(n + i, j) * s.data()[j])
            .collect();
        let fwd_zero = m.values.row(i).iter().all(|&x| x == 0.0);
        let rev_zero = m.values.row(n + i).iter().all(|&x| x == 0.0);
        forward.push(fwd);
        reversed.push(rev);
        no_pattern.push(fwd_zero && rev_zero);
    }
    let mut index = HashMap::new();
    for (i, (a, b)) in m.pairs.iter().enumerate() {
        index.insert((a.clone(), b.clone()), i);
    }
    Ok((
        LraModel {
            dim: k_eff,
            pairs: m.pairs.clone(),
            forward,
            reversed,
            no_pattern,
            index,
        },
        clamped,
    ))
}

impl LraModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn no_pattern_count(&self) -> usize {
        self.no_pattern.iter().filter(|&&f| f).count()
    }

    /// Whether the pair (in either order) is flagged "no pattern"; `None`
    /// for pairs outside the target set.
    pub fn flagged(&self, left: &str, right: &str) -> Option<bool> {
        self.pair_index(left, right)
            .map(|(i, _)| self.no_pattern[i])
    }

    fn pair_index(&self, left: &str, right: &str) -> Option<(usize, bool)> {
        if let Some(&i) = self.index.get(&(left.to_string(), right.to_string())) {
            return Some((i, true));
        }
        self.index
            .get(&(right.to_string(), left.to_string()))
            .map(|&i| (i, false))
    }

    /// The vector of an ordered pair: forward row for (a_i, b_i), reversed
    /// row for (b_i, a_i). Flagged pairs yield `None`.
    pub fn vector(&self, left: &str, right: &str) -> Option<&[f64]> {
        let (i, forward) = self.pair_index(left, right)?;
        if self.no_pattern[i] {
            return None;
        }
        Some(if forward {
            &self.forward[i]
        } else {
            &self.reversed[i]
        })
    }

    /// Cosine of two pair vectors; 0 when either pair is flagged "no
    /// pattern" or unknown.
    pub fn score(&self, x: (&str, &str), y: (&str, &str)) -> f64 {
        match (self.vector(x.0, x.1), self.vector(y.0, y.1)) {
            (Some(a), Some(b)) => cosine_slices(a, b),
            _ => 0.0,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>, meta: &str) -> Result<()> {
        let path = path.as_ref();
        let mut w = open_writer(path)?;
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.string(meta)?;
        w.u32(self.dim as u32)?;
        w.u64(self.pairs.len() as u64)?;
        for (a, b) in &self.pairs {
            w.string(a)?;
            w.string(b)?;
        }
        for &f in &self.no_pattern {
            w.u8(f as u8)?;
        }
        for row in self.forward.iter().chain(&self.reversed) {
            w.f32_values(row)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(LraModel, String)> {
        let path = path.as_ref();
        let mut r = open_reader(path)?;
        r.expect_magic(MAGIC)?;
        r.expect_version(VERSION)?;
        let meta = r.string()?;
        let dim = r.u32()? as usize;
        let n = r.u64()? as usize;
        let mut pairs = Vec::with_capacity(n);
        for _ in 0..n {
            let a = r.string()?;
            let b = r.string()?;
            pairs.push((a, b));
        }
        let mut no_pattern = Vec::with_capacity(n);
        for _ in 0..n {
            no_pattern.push(r.u8()? != 0);
        }
        let mut forward = Vec::with_capacity(n);
        for _ in 0..n {
            forward.push(r.f32_values(dim)?);
        }
        let mut reversed = Vec::with_capacity(n);
        for _ in 0..n {
            reversed.push(r.f32_values(dim)?);
        }
        r.expect_eof()?;
        let mut index = HashMap::new();
        for (i, (a, b)) in pairs.iter().enumerate() {
            index.insert((a.clone(), b.clone()), i);
        }
        Ok((
            LraModel {
                dim,
                pairs,
                forward,
                reversed,
                no_pattern,
                index,
            },
            meta,
        ))
    }
}

/// Convenience for [`LraModel::score`] matching the operation name.
pub fn lra_score(model: &LraModel, x: (&str, &str), y: (&str, &str)) -> f64 {
    model.score(x, y)
}

#[derive(Clone, Debug)]
pub struct LraTrainSummary {
    pub n_pairs: usize,
    pub n_features: usize,
    pub feature_cap: usize,
    pub dim: usize,
    pub clamped: bool,
    pub no_pattern_pairs: usize,
}

/// The full pipeline: select features, build the matrix, weight with PPMI,
/// and reduce with SVD.
pub fn train(
    store: &TripleStore,
    targets: &TargetPairSet,
    dim: usize,
    cap: Option<usize>,
) -> Result<(LraModel, LraTrainSummary)> {
    let features = select_features(store, targets, cap)?;
    let counts = build_matrix(store, &features, targets)?;
    let weighted = ppmi(&counts)?;
    let (model, clamped) = reduce(&weighted, dim)?;
    let summary = LraTrainSummary {
        n_pairs: targets.len(),
        n_features: features.len(),
        feature_cap: cap.unwrap_or(DEFAULT_CAP_MULTIPLIER * targets.len()),
        dim: model.dim(),
        clamped,
        no_pattern_pairs: model.no_pattern_count(),
    };
    Ok((model, summary))
}
