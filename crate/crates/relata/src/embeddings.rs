//! Pretrained word vectors: the vocabulary, a text-format loader, and a
//! versioned binary store.
//!
//! Lookups are exact-match and case-sensitive; the text pipeline lowercases
//! tokens before they reach this module, and vector files are expected to
//! be distributed lowercased already. Unknown words yield `None` — there is
//! no silent fallback vector.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use std::collections::HashMap;

use crate::binio::{open_reader, open_writer};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &[u8] = b"RELATA-EMB";
const VERSION: u32 = 1;

/// Bijective word ↔ dense-index map.
#[derive(Clone, Debug, Default)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    words: Vec<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Vocabulary::default()
    }

    /// Index of `word`, inserting it if absent.
    pub fn intern(&mut self, word: &str) -> usize {
        if let Some(&i) = self.index.get(word) {
            return i;
        }
        let i = self.words.len();
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), i);
        i
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    vocab: Vocabulary,
    matrix: Tensor, // |V| × d
    dim: usize,
    trainable: bool,
}

/// Outcome counters from [`load_text_vectors`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub records: usize,
    pub duplicates: usize,
}

impl EmbeddingTable {
    pub fn new(vocab: Vocabulary, matrix: Tensor, trainable: bool) -> Result<Self> {
        let (rows, dim) = matrix.dims2()?;
        if rows != vocab.len() {
            return Err(Error::Dimension(format!(
                "vocabulary of {} words but matrix has {rows} rows",
                vocab.len()
            )));
        }
        Ok(EmbeddingTable {
            vocab,
            matrix,
            dim,
            trainable,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn trainable(&self) -> bool {
        self.trainable
    }

    pub fn set_trainable(&mut self, trainable: bool) {
        self.trainable = trainable;
    }

    /// Exact-match row for `word`.
    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.vocab.get(word).map(|i| self.matrix.row(i))
    }

    pub fn row(&self, index: usize) -> &[f64] {
        self.matrix.row(index)
    }

    pub fn set_row(&mut self, index: usize, values: &[f64]) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::Dimension(format!(
                "row of {} values in a {}-dimensional table",
                values.len(),
                self.dim
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite embedding row".into()));
        }
        let dim = self.dim;
        self.matrix.data_mut()[index * dim..(index + 1) * dim].copy_from_slice(values);
        Ok(())
    }
}

/// Parse a whitespace-separated text vector file: one `token v1 … vd`
/// record per line. The first occurrence wins on duplicate tokens;
/// duplicates are counted in the returned stats.
pub fn load_text_vectors(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<(EmbeddingTable, LoadStats)> {
    let path = path.as_ref();
    let pstr = path.display().to_string();
    let file = fs::File::open(path).map_err(|e| Error::io(pstr.clone(), e))?;
    let reader = BufReader::new(file);

    let mut vocab = Vocabulary::new();
    let mut data: Vec<f64> = Vec::new();
    let mut dim = expected_dim;
    let mut stats = LoadStats::default();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(pstr.clone(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-empty line has a first field");
        let mut values = Vec::new();
        for f in fields {
            // Parse at f32 precision: the binary store narrows to 32-bit
            // floats, so this keeps text → save → load round trips exact.
            let v: f32 = f.parse().map_err(|_| {
                Error::format(pstr.clone(), lineno, format!("unreadable number {f:?}"))
            })?;
            if !v.is_finite() {
                return Err(Error::format(
                    pstr.clone(),
                    lineno,
                    format!("non-finite value {f:?}"),
                ));
            }
            values.push(v as f64);
        }
        match dim {
            None => {
                if values.is_empty() {
                    return Err(Error::format(pstr.clone(), lineno, "record has no values"));
                }
                dim = Some(values.len());
            }
            Some(d) => {
                if values.len() != d {
                    return Err(Error::format(
                        pstr.clone(),
                        lineno,
                        format!("expected {d} values, found {}", values.len()),
                    ));
                }
            }
        }
        if vocab.get(token).is_some() {
            stats.duplicates += 1;
            continue;
        }
        vocab.intern(token);
        data.extend_from_slice(&values);
        stats.records += 1;
    }

    let dim = dim.ok_or_else(|| Error::file(pstr.clone(), "no vector records"))?;
    if vocab.is_empty() {
        return Err(Error::file(pstr, "no vector records"));
    }
    let matrix = Tensor::new(vec![vocab.len(), dim], data)?;
    if stats.duplicates > 0 {
        log::warn!(
            "{} duplicate tokens ignored while loading {}",
            stats.duplicates,
            pstr
        );
    }
    Ok((EmbeddingTable::new(vocab, matrix, true)?, stats))
}

/// Write a table in the versioned binary format (values narrowed to
/// little-endian 32-bit floats). `meta` is an arbitrary provenance string.
pub fn save_table(table: &EmbeddingTable, path: impl AsRef<Path>, meta: &str) -> Result<()> {
    let path = path.as_ref();
    let mut w = open_writer(path)?;
    w.bytes(MAGIC)?;
    w.u32(VERSION)?;
    w.string(meta)?;
    w.u8(table.trainable as u8)?;
    w.u32(table.dim as u32)?;
    w.u64(table.len() as u64)?;
    for word in table.vocab.words() {
        w.string(word)?;
    }
    w.f32_values(table.matrix.data())?;
    Ok(())
}

/// Read a table written by [`save_table`]; returns the table and its meta
/// string. Truncated or trailing data is a format error, never a partial
/// table.
pub fn load_table(path: impl AsRef<Path>) -> Result<(EmbeddingTable, String)> {
    let path = path.as_ref();
    let mut r = open_reader(path)?;
    r.expect_magic(MAGIC)?;
    r.expect_version(VERSION)?;
    let meta = r.string()?;
    let trainable = r.u8()? != 0;
    let dim = r.u32()? as usize;
    let count = r.u64()? as usize;
    let mut vocab = Vocabulary::new();
    for _ in 0..count {
        let word = r.string()?;
        if vocab.get(&word).is_some() {
            return Err(r.fail(format!("duplicate vocabulary word {word:?}")));
        }
        vocab.intern(&word);
    }
    let data = r.f32_values(count * dim)?;
    r.expect_eof()?;
    let matrix = Tensor::new(vec![count, dim], data)?;
    Ok((EmbeddingTable::new(vocab, matrix, trainable)?, meta))
}
