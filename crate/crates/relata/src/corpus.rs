//! Corpus mining: sentence normalization, lemma lookup, and extraction of
//! (left word, right word, intervening pattern) co-occurrence triples for a
//! target pair set.
//!
//! One input line is one sentence; patterns never cross lines. Only the two
//! endpoint words are lemmatized — pattern-interior tokens keep their
//! (lowercased) surface form. Extraction over shards merges by commutative
//! count addition, so the stored result is independent of sharding.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::thread;

use crate::error::{Error, Result};

/// Split on Unicode whitespace and lowercase; empty tokens are dropped.
pub fn normalize_sentence(line: &str) -> Vec<String> {
    line.split_whitespace()
        .map(|t| t.to_lowercase())
        .collect()
}

/// Surface form → lemma map with identity fallback. Lemmas must be fixed
/// points of the map.
#[derive(Clone, Debug, Default)]
pub struct LemmaDict {
    map: HashMap<String, String>,
}

impl LemmaDict {
    /// The identity dictionary (every token is its own lemma).
    pub fn identity() -> Self {
        LemmaDict::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut map = HashMap::new();
        for (surface, lemma) in pairs {
            map.insert(surface.to_lowercase(), lemma.to_lowercase());
        }
        let dict = LemmaDict { map };
        for (surface, lemma) in &dict.map {
            if dict.lemma(lemma) != lemma {
                return Err(Error::Argument(format!(
                    "lemma {lemma:?} (for {surface:?}) is not a fixed point of the dictionary"
                )));
            }
        }
        Ok(dict)
    }

    /// Load a TSV of `surface<TAB>lemma` lines.
    pub fn from_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let pstr = path.display().to_string();
        let file = fs::File::open(path).map_err(|e| Error::io(pstr.clone(), e))?;
        let mut pairs = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(pstr.clone(), e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split('\t');
            let surface = fields.next().unwrap_or("");
            let lemma = fields.next().unwrap_or("");
            if surface.is_empty() || lemma.is_empty() || fields.next().is_some() {
                return Err(Error::format(
                    pstr.clone(),
                    lineno + 1,
                    "expected exactly two tab-separated fields",
                ));
            }
            pairs.push((surface.to_string(), lemma.to_string()));
        }
        LemmaDict::from_pairs(pairs).map_err(|e| match e {
            Error::Argument(msg) => Error::file(pstr.clone(), msg),
            other => other,
        })
    }

    pub fn lemma<'a>(&'a self, token: &'a str) -> &'a str {
        self.map.get(token).map(String::as_str).unwrap_or(token)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Whether a looked-up pair matched in its stored order or reversed.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct PairMatch {
    pub pair: usize,
    pub forward: bool,
}

/// The lemmatized target word pairs, with O(1) membership in either order.
#[derive(Clone, Debug)]
pub struct TargetPairSet {
    pairs: Vec<(String, String)>,
    index: HashMap<(String, String), PairMatch>,
}

impl TargetPairSet {
    /// Build from raw pairs: lowercases, lemmatizes, and rejects duplicates
    /// (in either order) and pairs that collapse to `x = x`.
    pub fn new(raw: &[(String, String)], dict: &LemmaDict) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Argument("empty target pair set".into()));
        }
        let mut pairs = Vec::with_capacity(raw.len());
        let mut index = HashMap::new();
        for (a, b) in raw {
            let a = dict.lemma(&a.to_lowercase()).to_string();
            let b = dict.lemma(&b.to_lowercase()).to_string();
            if a == b {
                return Err(Error::Argument(format!(
                    "pair {a:?}:{b:?} collapses to identical words"
                )));
            }
            if index.contains_key(&(a.clone(), b.clone())) {
                return Err(Error::Argument(format!(
                    "duplicate target pair {a:?}:{b:?} (order-insensitive)"
                )));
            }
            let id = pairs.len();
            index.insert(
                (a.clone(), b.clone()),
                PairMatch {
                    pair: id,
                    forward: true,
                },
            );
            index.insert(
                (b.clone(), a.clone()),
                PairMatch {
                    pair: id,
                    forward: false,
                },
            );
            pairs.push((a, b));
        }
        Ok(TargetPairSet { pairs, index })
    }

    /// Load a file of `a:b` lines (`#` comments and blank lines skipped).
    pub fn from_file(path: impl AsRef<Path>, dict: &LemmaDict) -> Result<Self> {
        let path = path.as_ref();
        let pstr = path.display().to_string();
        let file = fs::File::open(path).map_err(|e| Error::io(pstr.clone(), e))?;
        let mut raw = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(pstr.clone(), e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (a, b) = trimmed.split_once(':').ok_or_else(|| {
                Error::format(pstr.clone(), lineno + 1, "expected a `left:right` pair")
            })?;
            if a.trim().is_empty() || b.trim().is_empty() {
                return Err(Error::format(pstr.clone(), lineno + 1, "empty word in pair"));
            }
            raw.push((a.trim().to_string(), b.trim().to_string()));
        }
        if raw.is_empty() {
            return Err(Error::Argument("empty target pair set".into()));
        }
        TargetPairSet::new(&raw, dict)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn lookup(&self, left: &str, right: &str) -> Option<PairMatch> {
        self.index
            .get(&(left.to_string(), right.to_string()))
            .copied()
    }
}

/// A lexico-syntactic pattern: the nonempty token sequence between the two
/// endpoint words.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern {
    tokens: Vec<String>,
}

impl Pattern {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Argument("empty pattern".into()));
        }
        Ok(Pattern { tokens })
    }

    pub fn from_words(words: &[&str]) -> Self {
        Pattern {
            tokens: words.iter().map(|w| w.to_string()).collect(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// One observed co-occurrence: endpoint lemmas in textual order plus the
/// intervening pattern and a positive count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    pub left: String,
    pub right: String,
    pub pattern: Pattern,
    pub count: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct ExtractConfig {
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            min_len: 1,
            max_len: 3,
        }
    }
}

/// Scan every window `(i, j)` with `min_len ≤ j−i−1 ≤ max_len` over the
/// normalized tokens and emit a count-1 triple wherever the lemmatized
/// endpoints match a target pair in either order. Overlapping matches are
/// all emitted; pattern tokens stay unlemmatized.
pub fn extract_triples(
    tokens: &[String],
    targets: &TargetPairSet,
    dict: &LemmaDict,
    config: &ExtractConfig,
) -> Vec<Triple> {
    let mut out = Vec::new();
    if config.min_len == 0 || config.max_len < config.min_len {
        return out;
    }
    let lemmas: Vec<&str> = tokens.iter().map(|t| dict.lemma(t)).collect();
    for i in 0..tokens.len() {
        let j_lo = i + config.min_len + 1;
        let j_hi = (i + config.max_len + 1).min(tokens.len().saturating_sub(1));
        let mut j = j_lo;
        while j <= j_hi {
            if targets.lookup(lemmas[i], lemmas[j]).is_some() {
                out.push(Triple {
                    left: lemmas[i].to_string(),
                    right: lemmas[j].to_string(),
                    pattern: Pattern {
                        tokens: tokens[i + 1..j].to_vec(),
                    },
                    count: 1,
                });
            }
            j += 1;
        }
    }
    out
}

type TripleKey = (String, String, Vec<String>);

/// Count accumulator with an associative, commutative merge.
#[derive(Default)]
pub struct TripleStoreBuilder {
    counts: BTreeMap<TripleKey, u64>,
}

impl TripleStoreBuilder {
    pub fn new() -> Self {
        TripleStoreBuilder::default()
    }

    pub fn add(&mut self, t: Triple) {
        *self
            .counts
            .entry((t.left, t.right, t.pattern.tokens))
            .or_insert(0) += t.count;
    }

    pub fn merge(&mut self, other: TripleStoreBuilder) {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
    }

    pub fn build(self) -> TripleStore {
        let entries: Vec<Triple> = self
            .counts
            .into_iter()
            .map(|((left, right, tokens), count)| Triple {
                left,
                right,
                pattern: Pattern { tokens },
                count,
            })
            .collect();
        let total = entries.iter().map(|t| t.count).sum();
        TripleStore { entries, total }
    }
}

/// The aggregated triple multiset, canonically sorted by
/// (left, right, pattern tokens).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TripleStore {
    entries: Vec<Triple>,
    total: u64,
}

impl TripleStore {
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut b = TripleStoreBuilder::new();
        for t in triples {
            b.add(t);
        }
        b.build()
    }

    pub fn entries(&self) -> &[Triple] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of counts over all entries.
    pub fn total_count(&self) -> u64 {
        self.total
    }

    /// Distinct patterns with their summed counts, in canonical order.
    pub fn pattern_frequencies(&self) -> Vec<(Pattern, u64)> {
        let mut freq: BTreeMap<&Pattern, u64> = BTreeMap::new();
        for t in &self.entries {
            *freq.entry(&t.pattern).or_insert(0) += t.count;
        }
        freq.into_iter().map(|(p, c)| (p.clone(), c)).collect()
    }

    /// Write as TSV (`left<TAB>right<TAB>pattern<TAB>count`), preceded by
    /// `# key=value` provenance lines.
    pub fn save_tsv(&self, path: impl AsRef<Path>, meta_lines: &[String]) -> Result<()> {
        let path = path.as_ref();
        let pstr = path.display().to_string();
        let file = fs::File::create(path).map_err(|e| Error::io(pstr.clone(), e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut emit = |s: String| -> Result<()> {
            w.write_all(s.as_bytes())
                .map_err(|e| Error::io(pstr.clone(), e))
        };
        for line in meta_lines {
            emit(format!("# {line}\n"))?;
        }
        for t in &self.entries {
            emit(format!(
                "{}\t{}\t{}\t{}\n",
                t.left,
                t.right,
                t.pattern.joined(),
                t.count
            ))?;
        }
        w.flush().map_err(|e| Error::io(pstr, e))
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let pstr = path.display().to_string();
        let file = fs::File::open(path).map_err(|e| Error::io(pstr.clone(), e))?;
        let mut builder = TripleStoreBuilder::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(pstr.clone(), e))?;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::format(
                    pstr.clone(),
                    lineno + 1,
                    "expected 4 tab-separated fields",
                ));
            }
            let tokens: Vec<String> = fields[2].split(' ').map(str::to_string).collect();
            if tokens.iter().any(String::is_empty) {
                return Err(Error::format(pstr.clone(), lineno + 1, "empty pattern token"));
            }
            let count: u64 = fields[3].parse().map_err(|_| {
                Error::format(pstr.clone(), lineno + 1, format!("bad count {:?}", fields[3]))
            })?;
            if count == 0 {
                return Err(Error::format(pstr.clone(), lineno + 1, "count must be positive"));
            }
            builder.add(Triple {
                left: fields[0].to_string(),
                right: fields[1].to_string(),
                pattern: Pattern { tokens },
                count,
            });
        }
        Ok(builder.build())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ExtractSummary {
    pub sentences: u64,
    pub window_matches: u64,
    pub distinct_triples: usize,
    pub distinct_patterns: usize,
}

const LINE_BATCH: usize = 50_000;

/// Mine every corpus file (one sentence per line), aggregating counts over
/// `shards` worker threads per batch of lines. The result is identical for
/// any shard count.
pub fn build_triple_store(
    corpus_paths: &[impl AsRef<Path>],
    targets: &TargetPairSet,
    dict: &LemmaDict,
    config: &ExtractConfig,
    shards: usize,
) -> Result<(TripleStore, ExtractSummary)> {
    let shards = shards.max(1);
    let mut builder = TripleStoreBuilder::new();
    let mut summary = ExtractSummary::default();

    for path in corpus_paths {
        let path = path.as_ref();
        let pstr = path.display().to_string();
        let file = fs::File::open(path).map_err(|e| Error::io(pstr.clone(), e))?;
        let mut reader = BufReader::new(file);
        let mut batch: Vec<String> = Vec::with_capacity(LINE_BATCH);
        loop {
            batch.clear();
            let mut line = String::new();
            while batch.len() < LINE_BATCH {
                line.clear();
                let n = reader
                    .read_line(&mut line)
                    .map_err(|e| Error::io(pstr.clone(), e))?;
                if n == 0 {
                    break;
                }
                batch.push(line.trim_end_matches(['\n', '\r']).to_string());
            }
            if batch.is_empty() {
                break;
            }
            summary.sentences += batch.len() as u64;
            let (local, matches) = extract_batch(&batch, targets, dict, config, shards);
            summary.window_matches += matches;
            builder.merge(local);
        }
    }

    let store = builder.build();
    summary.distinct_triples = store.len();
    summary.distinct_patterns = store.pattern_frequencies().len();
    Ok((store, summary))
}

fn extract_batch(
    lines: &[String],
    targets: &TargetPairSet,
    dict: &LemmaDict,
    config: &ExtractConfig,
    shards: usize,
) -> (TripleStoreBuilder, u64) {
    let chunk = lines.len().div_ceil(shards);
    if shards == 1 || chunk == 0 || lines.len() <= 1 {
        let mut b = TripleStoreBuilder::new();
        let mut matches = 0;
        for line in lines {
            let tokens = normalize_sentence(line);
            for t in extract_triples(&tokens, targets, dict, config) {
                matches += 1;
                b.add(t);
            }
        }
        return (b, matches);
    }
    let results: Vec<(TripleStoreBuilder, u64)> = thread::scope(|scope| {
        let handles: Vec<_> = lines
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    let mut b = TripleStoreBuilder::new();
                    let mut matches = 0;
                    for line in part {
                        let tokens = normalize_sentence(line);
                        for t in extract_triples(&tokens, targets, dict, config) {
                            matches += 1;
                            b.add(t);
                        }
                    }
                    (b, matches)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("extraction worker panicked"))
            .collect()
    });
    let mut b = TripleStoreBuilder::new();
    let mut matches = 0;
    for (local, m) in results {
        b.merge(local);
        matches += m;
    }
    (b, matches)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(raw: &[(&str, &str)]) -> TargetPairSet {
        let raw: Vec<(String, String)> = raw
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        TargetPairSet::new(&raw, &LemmaDict::identity()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_sentence("The Dog barks"), ["the", "dog", "barks"]);
        assert!(normalize_sentence("").is_empty());
        assert_eq!(normalize_sentence("a\t b "), ["a", "b"]);
    }

    #[test]
    fn lemma_lookup_and_fallback() {
        let dict =
            LemmaDict::from_pairs([("dogs".to_string(), "dog".to_string())]).unwrap();
        assert_eq!(dict.lemma("dogs"), "dog");
        assert_eq!(dict.lemma("dog"), "dog");
        assert_eq!(dict.lemma(dict.lemma("dogs")), dict.lemma("dogs"));
    }

    #[test]
    fn non_fixed_point_dictionary_is_rejected() {
        let err = LemmaDict::from_pairs([
            ("dogs".to_string(), "dog".to_string()),
            ("dog".to_string(), "puppy".to_string()),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("fixed point"), "{err}");
    }

    #[test]
    fn extract_forward_match() {
        let w = pairs(&[("dog", "animal")]);
        let tokens = normalize_sentence("a dog is an animal");
        let triples = extract_triples(&tokens, &w, &LemmaDict::identity(), &ExtractConfig::default());
        assert_eq!(triples.len(), 1);
        assert_eq!(triples[0].left, "dog");
        assert_eq!(triples[0].right, "animal");
        assert_eq!(triples[0].pattern.tokens(), ["is", "an"]);
    }

    #[test]
    fn extract_reverse_match_keeps_textual_order() {
        let w = pairs(&[("dog", "animal")]);
        let tokens = normalize_sentence("animal such as a dog");
        let triples = extract_triples(&tokens, &w, &LemmaDict::identity(), &ExtractConfig::default());
        assert_eq!(triples.len(), 1);
        assert_eq!(triples[0].left, "animal");
        assert_eq!(triples[0].right, "dog");
        assert_eq!(triples[0].pattern.tokens(), ["such", "as", "a"]);
    }

    #[test]
    fn adjacent_words_produce_no_triple() {
        let w = pairs(&[("dog", "animal")]);
        let tokens = normalize_sentence("dog animal");
        assert!(extract_triples(&tokens, &w, &LemmaDict::identity(), &ExtractConfig::default())
            .is_empty());
    }

    #[test]
    fn endpoints_lemmatized_pattern_interior_kept() {
        let dict = LemmaDict::from_pairs([
            ("dogs".to_string(), "dog".to_string()),
            ("animals".to_string(), "animal".to_string()),
        ])
        .unwrap();
        let raw = vec![("dogs".to_string(), "animals".to_string())];
        let w = TargetPairSet::new(&raw, &dict).unwrap();
        let tokens = normalize_sentence("dogs are animals");
        let triples = extract_triples(&tokens, &w, &dict, &ExtractConfig::default());
        assert_eq!(triples.len(), 1);
        assert_eq!(triples[0].left, "dog");
        assert_eq!(triples[0].right, "animal");
        assert_eq!(triples[0].pattern.tokens(), ["are"]); // not lemmatized
    }

    #[test]
    fn store_counts_are_additive() {
        let w = pairs(&[("dog", "animal")]);
        let dict = LemmaDict::identity();
        let cfg = ExtractConfig::default();
        let sentence = normalize_sentence("a dog is an animal");
        let twice = TripleStore::from_triples(
            extract_triples(&sentence, &w, &dict, &cfg)
                .into_iter()
                .chain(extract_triples(&sentence, &w, &dict, &cfg)),
        );
        assert_eq!(twice.entries()[0].count, 2);
        assert_eq!(twice.total_count(), 2);
    }

    #[test]
    fn duplicate_pairs_rejected_even_reversed() {
        let raw = vec![
            ("dog".to_string(), "animal".to_string()),
            ("animal".to_string(), "dog".to_string()),
        ];
        assert!(TargetPairSet::new(&raw, &LemmaDict::identity()).is_err());
    }

    #[test]
    fn store_tsv_round_trip() {
        let w = pairs(&[("dog", "animal"), ("wheel", "car")]);
        let dict = LemmaDict::identity();
        let cfg = ExtractConfig::default();
        let mut triples = Vec::new();
        for s in [
            "a dog is an animal",
            "the wheel of the car",
            "a dog is an animal",
        ] {
            triples.extend(extract_triples(&normalize_sentence(s), &w, &dict, &cfg));
        }
        let store = TripleStore::from_triples(triples);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.tsv");
        store.save_tsv(&p, &["tool=test".to_string()]).unwrap();
        let loaded = TripleStore::load_tsv(&p).unwrap();
        assert_eq!(store, loaded);
    }

    #[test]
    fn sharded_extraction_is_byte_identical() {
        let w = pairs(&[("dog", "animal"), ("paris", "france")]);
        let dict = LemmaDict::identity();
        let cfg = ExtractConfig::default();
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("c.txt");
        let mut text = String::new();
        for i in 0..200 {
            text.push_str(match i % 4 {
                0 => "the dog is an animal today\n",
                1 => "paris is in france\n",
                2 => "an animal unlike the dog\n",
                _ => "france loves paris\n",
            });
        }
        fs::write(&corpus, &text).unwrap();
        let (s1, sum1) = build_triple_store(&[&corpus], &w, &dict, &cfg, 1).unwrap();
        let (s4, sum4) = build_triple_store(&[&corpus], &w, &dict, &cfg, 4).unwrap();
        assert_eq!(s1, s4);
        assert_eq!(sum1.window_matches, sum4.window_matches);
        let p1 = dir.path().join("s1.tsv");
        let p4 = dir.path().join("s4.tsv");
        s1.save_tsv(&p1, &[]).unwrap();
        s4.save_tsv(&p4, &[]).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p4).unwrap());
    }

    #[test]
    fn concatenating_corpora_sums_their_stores() {
        let w = pairs(&[("dog", "animal"), ("wheel", "car")]);
        let dict = LemmaDict::identity();
        let cfg = ExtractConfig::default();
        let dir = tempfile::tempdir().unwrap();
        let f1 = dir.path().join("c1.txt");
        let f2 = dir.path().join("c2.txt");
        fs::write(&f1, "a dog is an animal\nthe wheel of the car\n").unwrap();
        fs::write(&f2, "a dog is an animal\nanimal such as a dog\n").unwrap();
        let (both, _) = build_triple_store(&[&f1, &f2], &w, &dict, &cfg, 1).unwrap();
        let (s1, _) = build_triple_store(&[&f1], &w, &dict, &cfg, 1).unwrap();
        let (s2, _) = build_triple_store(&[&f2], &w, &dict, &cfg, 1).unwrap();
        let mut merged = TripleStoreBuilder::new();
        for t in s1.entries().iter().chain(s2.entries()) {
            merged.add(t.clone());
        }
        assert_eq!(both, merged.build());
    }

    #[test]
    fn missing_corpus_file_names_the_path() {
        let w = pairs(&[("a", "b")]);
        let err = build_triple_store(
            &["/nonexistent/corpus.txt"],
            &w,
            &LemmaDict::identity(),
            &ExtractConfig::default(),
            1,
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent/corpus.txt"), "{err}");
    }
}
