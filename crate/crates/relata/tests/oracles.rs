//! Independent-oracle equivalence checks: each implementation path is
//! compared against a deliberately separate brute-force computation.

#![allow(clippy::needless_range_loop)] // paired-array index loops

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relata::corpus::{
    extract_triples, ExtractConfig, LemmaDict, Pattern, TargetPairSet, Triple, TripleStore,
};
use relata::eval::{average_ranks, maxdiff_accuracy, spearman, MaxDiffQuestion, PairKey};
use relata::lra::{build_matrix, generalize, ppmi, select_features, FeatureSet, GeneralizedPattern};
use relata::svd::{reconstruction_error, truncated_svd};
use relata::tensor::{matmul, transpose, Tensor};

fn pairs(raw: &[(&str, &str)], dict: &LemmaDict) -> TargetPairSet {
    let raw: Vec<(String, String)> = raw
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    TargetPairSet::new(&raw, dict).unwrap()
}

// ---------------------------------------------------------------- PPMI --

/// Direct-formula oracle: normalize counts to a joint distribution and
/// compute max(0, ln(p_ij / (p_i· p_·j))).
fn ppmi_oracle(counts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = counts.len();
    let cols = counts[0].len();
    let total: f64 = counts.iter().flatten().sum();
    let mut out = vec![vec![0.0; cols]; rows];
    for i in 0..rows {
        for j in 0..cols {
            if counts[i][j] == 0.0 {
                continue;
            }
            let p_ij = counts[i][j] / total;
            let p_i: f64 = counts[i].iter().map(|&v| v / total).sum();
            let p_j: f64 = (0..rows).map(|r| counts[r][j] / total).sum();
            out[i][j] = (p_ij / (p_i * p_j)).ln().max(0.0);
        }
    }
    out
}

fn wrap_counts(counts: &[Vec<f64>]) -> relata::lra::PairPatternMatrix {
    let n = counts.len() / 2;
    let m = counts[0].len() / 2;
    let pair_list: Vec<(String, String)> =
        (0..n).map(|i| (format!("a{i}"), format!("b{i}"))).collect();
    let features = FeatureSet::from_patterns(
        (0..m)
            .map(|j| GeneralizedPattern::from_words(&[format!("p{j}").as_str()]))
            .collect(),
    )
    .unwrap();
    relata::lra::PairPatternMatrix::from_parts(
        Tensor::from_rows(counts).unwrap(),
        pair_list,
        features,
    )
    .unwrap()
}

#[test]
fn ppmi_matches_direct_formula_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    for _ in 0..100 {
        let counts: Vec<Vec<f64>> = (0..10)
            .map(|_| {
                (0..10)
                    .map(|_| {
                        if rng.random_bool(0.4) {
                            0.0
                        } else {
                            rng.random_range(1..20) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        if counts.iter().flatten().all(|&v| v == 0.0) {
            continue;
        }
        let got = ppmi(&wrap_counts(&counts)).unwrap();
        let want = ppmi_oracle(&counts);
        for i in 0..10 {
            for j in 0..10 {
                assert!(
                    (got.values().get2(i, j) - want[i][j]).abs() <= 1e-9,
                    "cell ({i},{j}): {} vs {}",
                    got.values().get2(i, j),
                    want[i][j]
                );
            }
        }
    }
}

// ---------------------------------------------------------- extraction --

/// Brute-force oracle: scan every (i, j) index pair and filter by the gap
/// rule, lemmatizing endpoints on the fly.
fn extract_oracle(tokens: &[String], w: &TargetPairSet, dict: &LemmaDict) -> Vec<Triple> {
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        for j in 0..tokens.len() {
            if i >= j {
                continue;
            }
            let gap = j - i - 1;
            if !(1..=3).contains(&gap) {
                continue;
            }
            let li = dict.lemma(&tokens[i]).to_string();
            let lj = dict.lemma(&tokens[j]).to_string();
            if w.lookup(&li, &lj).is_some() {
                out.push(Triple {
                    left: li,
                    right: lj,
                    pattern: Pattern::new(tokens[i + 1..j].to_vec()).unwrap(),
                    count: 1,
                });
            }
        }
    }
    out
}

fn sort_key(t: &Triple) -> (String, String, Vec<String>) {
    (t.left.clone(), t.right.clone(), t.pattern.tokens().to_vec())
}

#[test]
fn extraction_matches_brute_force_window_scan() {
    let dict = LemmaDict::from_pairs([
        ("dogs".to_string(), "dog".to_string()),
        ("animals".to_string(), "animal".to_string()),
        ("wheels".to_string(), "wheel".to_string()),
    ])
    .unwrap();
    let w = pairs(
        &[("dog", "animal"), ("paris", "france"), ("wheel", "car")],
        &dict,
    );
    let vocab = [
        "dog", "dogs", "animal", "animals", "paris", "france", "wheel", "wheels", "car", "the",
        "of", "is", "a", "such", "as", "in",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let config = ExtractConfig::default();
    let mut matched_sentences = 0;
    for _ in 0..1000 {
        let len = rng.random_range(0..14);
        let sentence: Vec<String> = (0..len)
            .map(|_| vocab[rng.random_range(0..vocab.len())].to_string())
            .collect();
        let mut got = extract_triples(&sentence, &w, &dict, &config);
        let mut want = extract_oracle(&sentence, &w, &dict);
        got.sort_by_key(sort_key);
        want.sort_by_key(sort_key);
        assert_eq!(got, want, "sentence: {sentence:?}");
        if !got.is_empty() {
            matched_sentences += 1;
        }
        // Type invariants on every emitted triple.
        for t in &got {
            assert!(w.lookup(&t.left, &t.right).is_some());
            assert!((1..=3).contains(&t.pattern.len()));
            assert_eq!(t.count, 1);
        }
    }
    assert!(matched_sentences > 100, "oracle exercised too rarely");
}

#[test]
fn store_total_equals_window_match_count() {
    let dict = LemmaDict::identity();
    let w = pairs(&[("dog", "animal")], &dict);
    let vocab = ["dog", "animal", "the", "is", "a"];
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    let config = ExtractConfig::default();
    let mut all = Vec::new();
    let mut matches = 0u64;
    for _ in 0..300 {
        let len = rng.random_range(0..10);
        let sentence: Vec<String> = (0..len)
            .map(|_| vocab[rng.random_range(0..vocab.len())].to_string())
            .collect();
        let triples = extract_triples(&sentence, &w, &dict, &config);
        matches += triples.len() as u64;
        all.extend(triples);
    }
    let store = TripleStore::from_triples(all);
    assert_eq!(store.total_count(), matches);
}

// -------------------------------------------------------- build_matrix --

#[test]
fn matrix_entries_match_brute_force_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    let dict = LemmaDict::identity();
    let words = ["dog", "animal", "paris", "france", "wheel", "car"];
    let w = pairs(&[("dog", "animal"), ("paris", "france"), ("wheel", "car")], &dict);
    let pattern_words = ["is", "a", "of", "the", "such"];
    for _ in 0..20 {
        let n_triples = rng.random_range(1..=50);
        let mut triples = Vec::new();
        for _ in 0..n_triples {
            let pi = rng.random_range(0..3);
            let (a, b) = (words[2 * pi], words[2 * pi + 1]);
            let (left, right) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            let len = rng.random_range(1..=3);
            let pat: Vec<String> = (0..len)
                .map(|_| pattern_words[rng.random_range(0..pattern_words.len())].to_string())
                .collect();
            triples.push(Triple {
                left: left.to_string(),
                right: right.to_string(),
                pattern: Pattern::new(pat).unwrap(),
                count: rng.random_range(1..4),
            });
        }
        let store = TripleStore::from_triples(triples);
        let features = select_features(&store, &w, Some(12)).unwrap();
        let matrix = build_matrix(&store, &features, &w).unwrap();

        // Oracle: recount every cell from the raw triple list by definition.
        let m = features.len();
        let (rows, cols) = matrix.values().dims2().unwrap();
        for r in 0..rows {
            let (x, y) = matrix.pair_of_row(r);
            for c in 0..cols {
                let feature = &features.patterns()[c % m];
                let mut expected = 0.0;
                for t in store.entries() {
                    let oriented = if c < m {
                        // "X p Y": triples observed as (x, y, ·).
                        t.left == x && t.right == y
                    } else {
                        // "Y p X": triples observed as (y, x, ·).
                        t.left == y && t.right == x
                    };
                    if oriented && generalize(&t.pattern).iter().any(|g| g == feature) {
                        expected += t.count as f64;
                    }
                }
                assert_eq!(
                    matrix.values().get2(r, c),
                    expected,
                    "row {r} ({x}:{y}), col {c} ({})",
                    matrix.column_label(c)
                );
            }
        }
    }
}

// ------------------------------------------------------------- metrics --

/// Brute-force MaxDiff oracle with the same tie rules, written as plain
/// scans over candidate lists.
fn maxdiff_oracle(scores: &BTreeMap<PairKey, f64>, questions: &[MaxDiffQuestion]) -> f64 {
    let mut correct = 0usize;
    for q in questions {
        let mut by_pair: Vec<(&PairKey, f64)> =
            q.candidates.iter().map(|c| (c, scores[c])).collect();
        by_pair.sort_by(|a, b| a.0.cmp(b.0));
        let best = by_pair
            .iter()
            .fold(None::<(&PairKey, f64)>, |acc, &(p, s)| match acc {
                None => Some((p, s)),
                Some((_, bs)) if s > bs => Some((p, s)),
                other => other,
            })
            .unwrap();
        let worst = by_pair
            .iter()
            .rev()
            .fold(None::<(&PairKey, f64)>, |acc, &(p, s)| match acc {
                None => Some((p, s)),
                Some((_, bs)) if s < bs => Some((p, s)),
                other => other,
            })
            .unwrap();
        if *best.0 == q.most {
            correct += 1;
        }
        if *worst.0 == q.least {
            correct += 1;
        }
    }
    correct as f64 / (2 * questions.len()) as f64
}

/// O(n²) counting-rank Spearman oracle.
fn spearman_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |vals: &[f64]| -> Vec<f64> {
        vals.iter()
            .map(|&v| {
                let smaller = vals.iter().filter(|&&o| o < v).count() as f64;
                let equal = vals.iter().filter(|&&o| o == v).count() as f64;
                smaller + (equal - 1.0) / 2.0 + 1.0
            })
            .collect()
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn metrics_match_brute_force_reimplementations() {
    let mut rng = ChaCha8Rng::seed_from_u64(205);
    for trial in 0..100 {
        let n = rng.random_range(4..=8);
        let keys: Vec<PairKey> = (0..n).map(|i| (format!("w{i}"), format!("v{i}"))).collect();
        // Quantized scores so ties actually occur.
        let mut scores = BTreeMap::new();
        for k in &keys {
            scores.insert(k.clone(), (rng.random_range(0..5) as f64) / 4.0);
        }
        let mut questions = Vec::new();
        for _ in 0..rng.random_range(1..=5) {
            let mut idx: Vec<usize> = (0..n).collect();
            for i in (1..idx.len()).rev() {
                let j = rng.random_range(0..=i);
                idx.swap(i, j);
            }
            let cand: Vec<PairKey> = idx[..4].iter().map(|&i| keys[i].clone()).collect();
            let most = cand[rng.random_range(0..4)].clone();
            let mut least = cand[rng.random_range(0..4)].clone();
            while least == most {
                least = cand[rng.random_range(0..4)].clone();
            }
            questions.push(MaxDiffQuestion {
                candidates: cand.try_into().unwrap(),
                most,
                least,
            });
        }
        let got = maxdiff_accuracy(&scores, &questions).unwrap();
        let want = maxdiff_oracle(&scores, &questions);
        assert_eq!(got, want, "trial {trial}");

        // Spearman with possible ties; retry until ranks vary on both sides.
        let xs: Vec<f64> = (0..n).map(|_| (rng.random_range(0..6) as f64) / 2.0).collect();
        let ys: Vec<f64> = (0..n).map(|_| (rng.random_range(0..6) as f64) / 2.0).collect();
        let distinct = |v: &[f64]| v.iter().any(|&a| a != v[0]);
        if distinct(&xs) && distinct(&ys) {
            let got = spearman(&xs, &ys).unwrap();
            let want = spearman_oracle(&xs, &ys);
            assert!((got - want).abs() <= 1e-9, "trial {trial}: {got} vs {want}");
        }
    }
}

#[test]
fn rank_helper_matches_counting_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(206);
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let vals: Vec<f64> = (0..n).map(|_| rng.random_range(0..4) as f64).collect();
        let fast = average_ranks(&vals);
        let slow: Vec<f64> = vals
            .iter()
            .map(|&v| {
                let smaller = vals.iter().filter(|&&o| o < v).count() as f64;
                let equal = vals.iter().filter(|&&o| o == v).count() as f64;
                smaller + (equal - 1.0) / 2.0 + 1.0
            })
            .collect();
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

// ----------------------------------------------------------------- SVD --

#[test]
fn svd_reconstructs_random_low_rank_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(207);
    for trial in 0..40 {
        let k = rng.random_range(1..=5);
        let m = rng.random_range(k.max(2)..=12);
        let n = rng.random_range(k.max(2)..=12);
        let left: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let right: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let matrix = matmul(
            &Tensor::from_rows(&left).unwrap(),
            &Tensor::from_rows(&right).unwrap(),
        )
        .unwrap();
        let (u, s, v) = truncated_svd(&matrix, k).unwrap();
        let err = reconstruction_error(&matrix, &u, &s, &v).unwrap();
        assert!(err < 1e-4, "trial {trial}: reconstruction error {err}");
        for w in 0..k.saturating_sub(1) {
            assert!(s.data()[w] >= s.data()[w + 1]);
        }
    }
}

#[test]
fn singular_values_match_independent_eigensolver() {
    // Oracle: nalgebra's symmetric eigensolver on MᵀM; singular values are
    // the square roots of its eigenvalues.
    let mut rng = ChaCha8Rng::seed_from_u64(208);
    for _ in 0..25 {
        let m = rng.random_range(2..=10);
        let n = rng.random_range(2..=10);
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let a = Tensor::from_rows(&rows).unwrap();
        let k = m.min(n);
        let (_, s, _) = truncated_svd(&a, k).unwrap();

        let ata = matmul(&transpose(&a).unwrap(), &a).unwrap();
        let na = nalgebra::DMatrix::from_fn(n, n, |i, j| ata.get2(i, j));
        let mut eigs: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for i in 0..k {
            let want = eigs[i].max(0.0).sqrt();
            assert!(
                (s.data()[i] - want).abs() < 1e-4,
                "singular value {i}: {} vs {want}",
                s.data()[i]
            );
        }
    }
}

#[test]
fn orthonormal_factors_within_tolerance() {
    let mut rng = ChaCha8Rng::seed_from_u64(209);
    for _ in 0..10 {
        let rows: Vec<Vec<f64>> = (0..9)
            .map(|_| (0..7).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let a = Tensor::from_rows(&rows).unwrap();
        let (u, _, v) = truncated_svd(&a, 4).unwrap();
        for f in [&u, &v] {
            let gram = matmul(&transpose(f).unwrap(), f).unwrap();
            let (k, _) = gram.dims2().unwrap();
            for i in 0..k {
                for j in 0..k {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((gram.get2(i, j) - want).abs() < 1e-4);
                }
            }
        }
    }
}
