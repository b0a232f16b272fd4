//! Relational-similarity evaluation: dataset loading, prototype-averaged
//! cosine scoring under any model, MaxDiff accuracy, and Spearman
//! correlation, reported per relation, per major group, and overall.
//!
//! Scorers are total over the dataset: a target pair the model cannot
//! represent (out-of-vocabulary words, or no co-occurring pattern for LRA)
//! scores 0 and is counted in the report rather than failing the run.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::LemmaDict;
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::lra::LraModel;
use crate::nlra::NlraModel;
use crate::tensor::cosine_slices;

/// An ordered word pair; tuple ordering doubles as the lexicographic
/// tie-break order.
pub type PairKey = (String, String);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxDiffQuestion {
    pub candidates: [PairKey; 4],
    pub most: PairKey,
    pub least: PairKey,
}

#[derive(Clone, Debug)]
pub struct Relation {
    pub id: String,
    pub group: String,
    pub prototypes: Vec<PairKey>,
    /// Target pairs with their gold prototypicality ratings.
    pub targets: Vec<(PairKey, f64)>,
    pub questions: Vec<MaxDiffQuestion>,
}

#[derive(Clone, Debug, Default)]
pub struct RelationDataset {
    pub relations: Vec<Relation>,
}

fn normalize_word(word: &str, dict: &LemmaDict) -> String {
    dict.lemma(&word.to_lowercase()).to_string()
}

fn parse_pair(s: &str, dict: &LemmaDict, path: &str, line: usize) -> Result<PairKey> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::format(path, line, format!("expected `a:b`, found {s:?}")))?;
    let a = a.trim();
    let b = b.trim();
    if a.is_empty() || b.is_empty() {
        return Err(Error::format(path, line, "empty word in pair"));
    }
    Ok((normalize_word(a, dict), normalize_word(b, dict)))
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let pstr = path.display().to_string();
    let file = fs::File::open(path).map_err(|e| Error::io(pstr.clone(), e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(pstr.clone(), e))?;
        let trimmed = line.trim().to_string();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed));
    }
    Ok(out)
}

/// Load a dataset directory: `manifest.tsv` mapping relation id to major
/// group, and per relation `<id>/prototypes.txt`, `<id>/targets.txt`,
/// `<id>/maxdiff.txt`. All words are lowercased and lemmatized with `dict`.
pub fn load_dataset(root: impl AsRef<Path>, dict: &LemmaDict) -> Result<RelationDataset> {
    let root = root.as_ref();
    let manifest_path = root.join("manifest.tsv");
    let manifest_str = manifest_path.display().to_string();
    let mut relations = Vec::new();
    let mut seen_ids = HashSet::new();

    for (lineno, line) in read_lines(&manifest_path)? {
        let (id, group) = line.split_once('\t').ok_or_else(|| {
            Error::format(&manifest_str, lineno, "expected `relation<TAB>group`")
        })?;
        let id = id.trim().to_string();
        let group = group.trim().to_string();
        if id.is_empty() || group.is_empty() {
            return Err(Error::format(&manifest_str, lineno, "empty relation or group"));
        }
        if !seen_ids.insert(id.clone()) {
            return Err(Error::format(
                &manifest_str,
                lineno,
                format!("duplicate relation id {id:?}"),
            ));
        }
        relations.push(load_relation(root, &id, &group, dict)?);
    }
    if relations.is_empty() {
        return Err(Error::file(manifest_str, "no relations in manifest"));
    }
    relations.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(RelationDataset { relations })
}

fn load_relation(root: &Path, id: &str, group: &str, dict: &LemmaDict) -> Result<Relation> {
    let dir = root.join(id);

    let proto_path = dir.join("prototypes.txt");
    let proto_str = proto_path.display().to_string();
    let mut prototypes = Vec::new();
    for (lineno, line) in read_lines(&proto_path)? {
        prototypes.push(parse_pair(&line, dict, &proto_str, lineno)?);
    }
    if prototypes.is_empty() {
        return Err(Error::file(proto_str, "relation needs at least one prototype"));
    }

    let target_path = dir.join("targets.txt");
    let target_str = target_path.display().to_string();
    let mut targets: Vec<(PairKey, f64)> = Vec::new();
    let mut target_set = HashSet::new();
    for (lineno, line) in read_lines(&target_path)? {
        let (pair_s, rating_s) = line.split_once('\t').ok_or_else(|| {
            Error::format(&target_str, lineno, "expected `a:b<TAB>rating`")
        })?;
        let pair = parse_pair(pair_s, dict, &target_str, lineno)?;
        let rating: f64 = rating_s.trim().parse().map_err(|_| {
            Error::format(&target_str, lineno, format!("bad rating {rating_s:?}"))
        })?;
        if !rating.is_finite() {
            return Err(Error::format(&target_str, lineno, "non-finite rating"));
        }
        if !target_set.insert(pair.clone()) {
            return Err(Error::format(
                &target_str,
                lineno,
                format!("duplicate target pair {}:{}", pair.0, pair.1),
            ));
        }
        targets.push((pair, rating));
    }
    if targets.len() < 2 {
        return Err(Error::file(target_str, "relation needs at least two rated targets"));
    }

    let q_path = dir.join("maxdiff.txt");
    let q_str = q_path.display().to_string();
    let mut questions = Vec::new();
    for (lineno, line) in read_lines(&q_path)? {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::format(
                &q_str,
                lineno,
                "expected `p1|p2|p3|p4<TAB>most<TAB>least`",
            ));
        }
        let cand_strs: Vec<&str> = fields[0].split('|').collect();
        if cand_strs.len() != 4 {
            return Err(Error::format(&q_str, lineno, "expected exactly four candidates"));
        }
        let mut candidates = Vec::with_capacity(4);
        for c in cand_strs {
            let pair = parse_pair(c, dict, &q_str, lineno)?;
            if !target_set.contains(&pair) {
                return Err(Error::format(
                    &q_str,
                    lineno,
                    format!("candidate {}:{} is not a rated target pair", pair.0, pair.1),
                ));
            }
            if candidates.contains(&pair) {
                return Err(Error::format(
                    &q_str,
                    lineno,
                    format!("duplicate candidate {}:{}", pair.0, pair.1),
                ));
            }
            candidates.push(pair);
        }
        let most = parse_pair(fields[1], dict, &q_str, lineno)?;
        let least = parse_pair(fields[2], dict, &q_str, lineno)?;
        if !candidates.contains(&most) || !candidates.contains(&least) {
            return Err(Error::format(
                &q_str,
                lineno,
                "gold answers must be among the four candidates",
            ));
        }
        if most == least {
            return Err(Error::format(&q_str, lineno, "most and least must differ"));
        }
        let candidates: [PairKey; 4] = candidates.try_into().expect("length checked");
        questions.push(MaxDiffQuestion {
            candidates,
            most,
            least,
        });
    }

    Ok(Relation {
        id: id.to_string(),
        group: group.to_string(),
        prototypes,
        targets,
        questions,
    })
}

/// Why a pair received the fallback score of 0.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Fallback {
    Oov,
    NoPattern,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PairScore {
    pub value: f64,
    pub fallback: Option<Fallback>,
}

impl PairScore {
    pub fn value(v: f64) -> Self {
        PairScore {
            value: v,
            fallback: None,
        }
    }

    pub fn fallback(kind: Fallback) -> Self {
        PairScore {
            value: 0.0,
            fallback: Some(kind),
        }
    }
}

/// A deterministic (relation, pair) → score capability, total over the
/// dataset it was built for.
pub trait Scorer {
    fn name(&self) -> &str;
    fn score(&self, relation_id: &str, pair: &PairKey) -> PairScore;
}

/// Arithmetic mean of two scores.
pub fn combine(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

fn mean_cosine(target: &[f64], prototypes: &[Vec<f64>]) -> f64 {
    if prototypes.is_empty() {
        return 0.0;
    }
    let sum: f64 = prototypes.iter().map(|p| cosine_slices(target, p)).sum();
    sum / prototypes.len() as f64
}

fn vector_offset(table: &EmbeddingTable, pair: &PairKey) -> Option<Vec<f64>> {
    let a = table.lookup(&pair.0)?;
    let b = table.lookup(&pair.1)?;
    Some(b.iter().zip(a).map(|(x, y)| x - y).collect())
}

/// Vector-offset score of one pair against a relation's prototypes:
/// mean cosine between the target offset v_b − v_a and each prototype
/// offset. Out-of-vocabulary prototypes are skipped; an out-of-vocabulary
/// target scores 0.
pub fn vecoff_score(table: &EmbeddingTable, relation: &Relation, pair: &PairKey) -> f64 {
    let Some(target) = vector_offset(table, pair) else {
        return 0.0;
    };
    let protos: Vec<Vec<f64>> = relation
        .prototypes
        .iter()
        .filter_map(|p| vector_offset(table, p))
        .collect();
    mean_cosine(&target, &protos)
}

pub struct VecOffScorer<'a> {
    table: &'a EmbeddingTable,
    prototypes: HashMap<String, Vec<Vec<f64>>>,
    name: String,
}

impl<'a> VecOffScorer<'a> {
    pub fn new(table: &'a EmbeddingTable, dataset: &RelationDataset) -> Self {
        let mut prototypes = HashMap::new();
        for rel in &dataset.relations {
            let offs: Vec<Vec<f64>> = rel
                .prototypes
                .iter()
                .filter_map(|p| vector_offset(table, p))
                .collect();
            if offs.len() < rel.prototypes.len() {
                log::warn!(
                    "relation {}: {} prototype pair(s) dropped (out of vocabulary)",
                    rel.id,
                    rel.prototypes.len() - offs.len()
                );
            }
            prototypes.insert(rel.id.clone(), offs);
        }
        VecOffScorer {
            table,
            prototypes,
            name: "vecoff".to_string(),
        }
    }
}

impl Scorer for VecOffScorer<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, relation_id: &str, pair: &PairKey) -> PairScore {
        let Some(target) = vector_offset(self.table, pair) else {
            return PairScore::fallback(Fallback::Oov);
        };
        let protos = self
            .prototypes
            .get(relation_id)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        PairScore::value(mean_cosine(&target, protos))
    }
}

pub struct LraScorer<'a> {
    model: &'a LraModel,
    prototypes: HashMap<String, Vec<Vec<f64>>>,
    name: String,
}

impl<'a> LraScorer<'a> {
    pub fn new(model: &'a LraModel, dataset: &RelationDataset) -> Self {
        let mut prototypes = HashMap::new();
        for rel in &dataset.relations {
            let vecs: Vec<Vec<f64>> = rel
                .prototypes
                .iter()
                .filter_map(|p| model.vector(&p.0, &p.1).map(|v| v.to_vec()))
                .collect();
            if vecs.len() < rel.prototypes.len() {
                log::warn!(
                    "relation {}: {} prototype pair(s) have no pattern vector",
                    rel.id,
                    rel.prototypes.len() - vecs.len()
                );
            }
            prototypes.insert(rel.id.clone(), vecs);
        }
        LraScorer {
            model,
            prototypes,
            name: "lra".to_string(),
        }
    }
}

impl Scorer for LraScorer<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, relation_id: &str, pair: &PairKey) -> PairScore {
        let Some(target) = self.model.vector(&pair.0, &pair.1) else {
            return PairScore::fallback(Fallback::NoPattern);
        };
        let protos = self
            .prototypes
            .get(relation_id)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        PairScore::value(mean_cosine(target, protos))
    }
}

pub struct NlraScorer<'a> {
    model: &'a NlraModel,
    prototypes: HashMap<String, Vec<Vec<f64>>>,
    name: String,
}

impl<'a> NlraScorer<'a> {
    pub fn new(model: &'a NlraModel, dataset: &RelationDataset) -> Self {
        let mut prototypes = HashMap::new();
        for rel in &dataset.relations {
            let reps: Vec<Vec<f64>> = rel
                .prototypes
                .iter()
                .filter_map(|p| {
                    model
                        .pair_representation(&p.0, &p.1)
                        .ok()
                        .map(|t| t.data().to_vec())
                })
                .collect();
            if reps.len() < rel.prototypes.len() {
                log::warn!(
                    "relation {}: {} prototype pair(s) dropped (out of vocabulary)",
                    rel.id,
                    rel.prototypes.len() - reps.len()
                );
            }
            prototypes.insert(rel.id.clone(), reps);
        }
        NlraScorer {
            model,
            prototypes,
            name: "nlra".to_string(),
        }
    }
}

impl Scorer for NlraScorer<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, relation_id: &str, pair: &PairKey) -> PairScore {
        let Ok(target) = self.model.pair_representation(&pair.0, &pair.1) else {
            return PairScore::fallback(Fallback::Oov);
        };
        let protos = self
            .prototypes
            .get(relation_id)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        PairScore::value(mean_cosine(target.data(), protos))
    }
}

/// Unweighted mean of two scorers; the fallback flag is set only when both
/// components fell back (the combined score is then uninformative).
pub struct CombinedScorer<'a> {
    pub first: &'a dyn Scorer,
    pub second: &'a dyn Scorer,
    name: String,
}

impl<'a> CombinedScorer<'a> {
    pub fn new(first: &'a dyn Scorer, second: &'a dyn Scorer) -> Self {
        let name = format!("{}+{}", first.name(), second.name());
        CombinedScorer {
            first,
            second,
            name,
        }
    }
}

impl Scorer for CombinedScorer<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, relation_id: &str, pair: &PairKey) -> PairScore {
        let a = self.first.score(relation_id, pair);
        let b = self.second.score(relation_id, pair);
        PairScore {
            value: combine(a.value, b.value),
            fallback: match (a.fallback, b.fallback) {
                (Some(k), Some(_)) => Some(k),
                _ => None,
            },
        }
    }
}

/// MaxDiff accuracy over four-candidate questions: the predicted "most
/// illustrative" pair is the argmax of the scores (ties broken toward the
/// lexicographically smallest pair) and the predicted "least" the argmin
/// (ties toward the largest); each question contributes its two checks.
pub fn maxdiff_accuracy(
    scores: &BTreeMap<PairKey, f64>,
    questions: &[MaxDiffQuestion],
) -> Result<f64> {
    if questions.is_empty() {
        return Err(Error::Evaluation("no MaxDiff questions".into()));
    }
    let mut correct = 0usize;
    for q in questions {
        let mut most: Option<(&PairKey, f64)> = None;
        let mut least: Option<(&PairKey, f64)> = None;
        for cand in &q.candidates {
            let s = *scores.get(cand).ok_or_else(|| {
                Error::Evaluation(format!("no score for pair {}:{}", cand.0, cand.1))
            })?;
            most = Some(match most {
                None => (cand, s),
                Some((bp, bs)) => {
                    if s > bs || (s == bs && cand < bp) {
                        (cand, s)
                    } else {
                        (bp, bs)
                    }
                }
            });
            least = Some(match least {
                None => (cand, s),
                Some((bp, bs)) => {
                    if s < bs || (s == bs && cand > bp) {
                        (cand, s)
                    } else {
                        (bp, bs)
                    }
                }
            });
        }
        if *most.expect("four candidates").0 == q.most {
            correct += 1;
        }
        if *least.expect("four candidates").0 == q.least {
            correct += 1;
        }
    }
    Ok(correct as f64 / (2 * questions.len()) as f64)
}

/// Ranks with ties assigned the average of their positions (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite scores"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(scores: &[f64], gold: &[f64]) -> Result<f64> {
    if scores.len() != gold.len() {
        return Err(Error::Evaluation(format!(
            "score and gold lists differ in length: {} vs {}",
            scores.len(),
            gold.len()
        )));
    }
    if scores.len() < 2 {
        return Err(Error::Evaluation(
            "correlation undefined for fewer than two pairs".into(),
        ));
    }
    let rx = average_ranks(scores);
    let ry = average_ranks(gold);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Evaluation(
            "correlation undefined: zero rank variance".into(),
        ));
    }
    Ok(cov / (vx * vy).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationMetrics {
    pub id: String,
    pub group: String,
    pub accuracy: f64,
    pub spearman: f64,
    pub oov_pairs: usize,
    pub no_pattern_pairs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupMetrics {
    pub group: String,
    pub relations: usize,
    pub accuracy: f64,
    pub spearman: f64,
}

/// Per-relation, per-group, and overall metrics for one scorer. Group
/// means are unweighted over member relations; the overall mean is
/// unweighted over relations.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub scorer: String,
    pub relations: Vec<RelationMetrics>,
    pub groups: Vec<GroupMetrics>,
    pub accuracy: f64,
    pub spearman: f64,
    pub oov_pairs: usize,
    pub no_pattern_pairs: usize,
}

/// Score every target of every relation and aggregate the metrics.
pub fn evaluate(scorer: &dyn Scorer, dataset: &RelationDataset) -> Result<EvalReport> {
    let mut relations = Vec::with_capacity(dataset.relations.len());
    for rel in &dataset.relations {
        let mut scores: BTreeMap<PairKey, f64> = BTreeMap::new();
        let mut oov = 0usize;
        let mut no_pattern = 0usize;
        for (pair, _) in &rel.targets {
            let ps = scorer.score(&rel.id, pair);
            match ps.fallback {
                Some(Fallback::Oov) => oov += 1,
                Some(Fallback::NoPattern) => no_pattern += 1,
                None => {}
            }
            scores.insert(pair.clone(), ps.value);
        }
        let accuracy = maxdiff_accuracy(&scores, &rel.questions)
            .map_err(|e| Error::Evaluation(format!("relation {}: {e}", rel.id)))?;
        let preds: Vec<f64> = rel.targets.iter().map(|(p, _)| scores[p]).collect();
        let golds: Vec<f64> = rel.targets.iter().map(|(_, g)| *g).collect();
        let rho = spearman(&preds, &golds)
            .map_err(|e| Error::Evaluation(format!("relation {}: {e}", rel.id)))?;
        relations.push(RelationMetrics {
            id: rel.id.clone(),
            group: rel.group.clone(),
            accuracy,
            spearman: rho,
            oov_pairs: oov,
            no_pattern_pairs: no_pattern,
        });
    }
    relations.sort_by(|a, b| a.id.cmp(&b.id));

    let mut by_group: BTreeMap<&str, Vec<&RelationMetrics>> = BTreeMap::new();
    for r in &relations {
        by_group.entry(&r.group).or_default().push(r);
    }
    let groups: Vec<GroupMetrics> = by_group
        .into_iter()
        .map(|(group, members)| GroupMetrics {
            group: group.to_string(),
            relations: members.len(),
            accuracy: members.iter().map(|m| m.accuracy).sum::<f64>() / members.len() as f64,
            spearman: members.iter().map(|m| m.spearman).sum::<f64>() / members.len() as f64,
        })
        .collect();

    let n = relations.len() as f64;
    Ok(EvalReport {
        scorer: scorer.name().to_string(),
        accuracy: relations.iter().map(|r| r.accuracy).sum::<f64>() / n,
        spearman: relations.iter().map(|r| r.spearman).sum::<f64>() / n,
        oov_pairs: relations.iter().map(|r| r.oov_pairs).sum(),
        no_pattern_pairs: relations.iter().map(|r| r.no_pattern_pairs).sum(),
        relations,
        groups,
    })
}

impl EvalReport {
    /// Human-readable key: value blocks.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scorer: {}\n", self.scorer));
        for r in &self.relations {
            out.push_str(&format!("relation: {}\n", r.id));
            out.push_str(&format!("  group: {}\n", r.group));
            out.push_str(&format!("  maxdiff_accuracy: {:.4}\n", r.accuracy));
            out.push_str(&format!("  spearman: {:.4}\n", r.spearman));
            out.push_str(&format!("  oov_pairs: {}\n", r.oov_pairs));
            out.push_str(&format!("  no_pattern_pairs: {}\n", r.no_pattern_pairs));
        }
        for g in &self.groups {
            out.push_str(&format!("group: {}\n", g.group));
            out.push_str(&format!("  relations: {}\n", g.relations));
            out.push_str(&format!("  maxdiff_accuracy: {:.4}\n", g.accuracy));
            out.push_str(&format!("  spearman: {:.4}\n", g.spearman));
        }
        out.push_str("overall:\n");
        out.push_str(&format!("  maxdiff_accuracy: {:.4}\n", self.accuracy));
        out.push_str(&format!("  spearman: {:.4}\n", self.spearman));
        out.push_str(&format!("  oov_pairs: {}\n", self.oov_pairs));
        out.push_str(&format!("  no_pattern_pairs: {}\n", self.no_pattern_pairs));
        out
    }
}

/// Machine-readable TSV for a set of reports; parses back exactly.
pub fn write_tsv(reports: &[EvalReport]) -> String {
    let mut out = String::from(
        "# scorer\tkind\tname\tgroup\taccuracy\tspearman\toov_pairs\tno_pattern_pairs\trelations\n",
    );
    for rep in reports {
        for r in &rep.relations {
            out.push_str(&format!(
                "{}\trelation\t{}\t{}\t{}\t{}\t{}\t{}\t1\n",
                rep.scorer, r.id, r.group, r.accuracy, r.spearman, r.oov_pairs, r.no_pattern_pairs
            ));
        }
        for g in &rep.groups {
            out.push_str(&format!(
                "{}\tgroup\t{}\t{}\t{}\t{}\t0\t0\t{}\n",
                rep.scorer, g.group, g.group, g.accuracy, g.spearman, g.relations
            ));
        }
        out.push_str(&format!(
            "{}\toverall\toverall\t-\t{}\t{}\t{}\t{}\t{}\n",
            rep.scorer,
            rep.accuracy,
            rep.spearman,
            rep.oov_pairs,
            rep.no_pattern_pairs,
            rep.relations.len()
        ));
    }
    out
}

/// Parse the TSV produced by [`write_tsv`].
pub fn parse_tsv(text: &str) -> Result<Vec<EvalReport>> {
    let mut reports: Vec<EvalReport> = Vec::new();
    let fail = |line: usize, msg: &str| Error::format("<tsv>", line, msg);
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 9 {
            return Err(fail(lineno + 1, "expected 9 fields"));
        }
        let scorer = f[0].to_string();
        if reports.last().map(|r: &EvalReport| r.scorer.as_str()) != Some(f[0]) {
            reports.push(EvalReport {
                scorer: scorer.clone(),
                relations: Vec::new(),
                groups: Vec::new(),
                accuracy: 0.0,
                spearman: 0.0,
                oov_pairs: 0,
                no_pattern_pairs: 0,
            });
        }
        let rep = reports.last_mut().expect("pushed above");
        let accuracy: f64 = f[4].parse().map_err(|_| fail(lineno + 1, "bad accuracy"))?;
        let rho: f64 = f[5].parse().map_err(|_| fail(lineno + 1, "bad spearman"))?;
        let oov: usize = f[6].parse().map_err(|_| fail(lineno + 1, "bad oov count"))?;
        let nopat: usize = f[7].parse().map_err(|_| fail(lineno + 1, "bad pattern count"))?;
        let nrel: usize = f[8].parse().map_err(|_| fail(lineno + 1, "bad relation count"))?;
        match f[1] {
            "relation" => rep.relations.push(RelationMetrics {
                id: f[2].to_string(),
                group: f[3].to_string(),
                accuracy,
                spearman: rho,
                oov_pairs: oov,
                no_pattern_pairs: nopat,
            }),
            "group" => rep.groups.push(GroupMetrics {
                group: f[2].to_string(),
                relations: nrel,
                accuracy,
                spearman: rho,
            }),
            "overall" => {
                rep.accuracy = accuracy;
                rep.spearman = rho;
                rep.oov_pairs = oov;
                rep.no_pattern_pairs = nopat;
            }
            other => return Err(fail(lineno + 1, &format!("unknown row kind {other:?}"))),
        }
    }
    Ok(reports)
}
