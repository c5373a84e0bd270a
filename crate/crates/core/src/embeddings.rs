//! Pretrained word vectors, learned per-word weights and IDF tables.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::SegmentedCorpus;
use crate::error::{Error, Result};

/// Frozen word vectors of a fixed dimension, stored row-major.
///
/// Words containing `_` (multi-word phrases in the common pretrained
/// releases) are dropped on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    declared_vocab_size: usize,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            declared_vocab_size: 0,
        }
    }

    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = EmbeddingTable::new(dim);
        for (word, vector) in entries {
            table.push(word.into(), &vector)?;
        }
        table.declared_vocab_size = table.len();
        Ok(table)
    }

    /// Adds a row. Underscore words are silently skipped; a repeated word
    /// keeps its first vector.
    fn push(&mut self, word: String, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                word,
                expected: self.dim,
                found: vector.len(),
            });
        }
        if let Some(bad) = vector.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite component {bad} for `{word}`")));
        }
        if word.contains('_') || self.index.contains_key(&word) {
            return Ok(());
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Vocabulary size stated in the file header, before filtering.
    pub fn declared_vocab_size(&self) -> usize {
        self.declared_vocab_size
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    /// Resolves a token to a row: exact match first, then lowercase.
    pub fn resolve(&self, token: &str) -> Option<usize> {
        if let Some(&i) = self.index.get(token) {
            return Some(i);
        }
        let lower = token.to_lowercase();
        if lower != token {
            self.index.get(&lower).copied()
        } else {
            None
        }
    }

    pub fn lookup(&self, token: &str) -> Option<&[f64]> {
        self.resolve(token).map(|i| self.row(i))
    }

    /// Number of real parameters held by the table, `|V| * dim`.
    pub fn parameter_count(&self) -> usize {
        self.len() * self.dim
    }

    pub fn load_text(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text, path)
    }

    /// Parses the word2vec text layout: a `vocab_size dim` header, then one
    /// `word v1 .. v_dim` row per line.
    pub fn parse_text(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (declared, dim) = match lines.next() {
            Some((_, header)) => {
                parse_header(header).ok_or_else(|| Error::parse(path, 1, "expected header `vocab_size dim`"))?
            }
            None => return Err(Error::parse(path, 1, "missing header")),
        };
        let mut table = EmbeddingTable::new(dim);
        table.declared_vocab_size = declared;
        let mut row = Vec::with_capacity(dim);
        for (i, line) in lines {
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            row.clear();
            for field in fields {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::parse(path, i + 1, format!("non-numeric component `{field}`")))?;
                row.push(v);
            }
            table.push(word.to_string(), &row)?;
        }
        Ok(table)
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse_binary(&bytes, path)
    }

    /// Parses the word2vec binary layout: an ASCII `vocab_size dim` header
    /// line, then per word the word bytes, a space, and `dim` little-endian
    /// `f32` values, optionally followed by a newline.
    pub fn parse_binary(bytes: &[u8], path: &Path) -> Result<Self> {
        let header_end = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse(path, 1, "missing header line"))?;
        let (declared, dim) = std::str::from_utf8(&bytes[..header_end])
            .ok()
            .and_then(parse_header)
            .ok_or_else(|| Error::parse(path, 1, "expected header `vocab_size dim`"))?;
        let mut table = EmbeddingTable::new(dim);
        table.declared_vocab_size = declared;
        let row_bytes = 4 * dim;
        let mut pos = header_end + 1;
        let mut row = vec![0.0; dim];
        for n in 0..declared {
            let remaining = declared - n;
            let truncated = |pos: usize| Error::Truncated {
                path: path.to_path_buf(),
                expected: remaining * (row_bytes + 2),
                available: bytes.len().saturating_sub(pos),
            };
            while bytes.get(pos) == Some(&b'\n') {
                pos += 1;
            }
            let space = bytes[pos.min(bytes.len())..]
                .iter()
                .position(|&b| b == b' ')
                .ok_or_else(|| truncated(pos))?;
            let word = std::str::from_utf8(&bytes[pos..pos + space])
                .map_err(|_| Error::Utf8 {
                    path: path.to_path_buf(),
                    offset: pos,
                })?
                .to_string();
            pos += space + 1;
            if bytes.len() - pos < row_bytes {
                return Err(Error::Truncated {
                    path: path.to_path_buf(),
                    expected: row_bytes,
                    available: bytes.len() - pos,
                });
            }
            for (slot, chunk) in row.iter_mut().zip(bytes[pos..pos + row_bytes].chunks_exact(4)) {
                *slot = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
            }
            pos += row_bytes;
            table.push(word, &row)?;
        }
        Ok(table)
    }

    /// Writes the binary layout without trailing newlines. Components are
    /// narrowed to `f32`.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = format!("{} {}\n", self.len(), self.dim).into_bytes();
        for (i, word) in self.words.iter().enumerate() {
            out.extend_from_slice(word.as_bytes());
            out.push(b' ');
            for &v in self.row(i) {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (i, word) in self.words.iter().enumerate() {
            out.push_str(word);
            for v in self.row(i) {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split_whitespace();
    let vocab = it.next()?.parse().ok()?;
    let dim: usize = it.next()?.parse().ok()?;
    (it.next().is_none() && dim > 0).then_some((vocab, dim))
}

/// Learned scalar weight per vocabulary word.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    words: Vec<String>,
    values: Vec<f64>,
    index: HashMap<String, usize>,
}

impl WeightTable {
    /// Every embedding word with weight 1, in the table's row order.
    pub fn ones(emb: &EmbeddingTable) -> Self {
        Self::from_aligned(emb, vec![1.0; emb.len()])
    }

    /// Builds a table whose `i`-th value belongs to embedding row `i`.
    pub fn from_aligned(emb: &EmbeddingTable, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), emb.len(), "one weight per embedding row");
        WeightTable {
            words: emb.words.clone(),
            values,
            index: emb.index.clone(),
        }
    }

    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut table = WeightTable {
            words: Vec::new(),
            values: Vec::new(),
            index: HashMap::new(),
        };
        for (word, value) in entries {
            let word = word.into();
            if table.index.contains_key(&word) {
                return Err(Error::Duplicate(word));
            }
            table.index.insert(word.clone(), table.words.len());
            table.words.push(word);
            table.values.push(value);
        }
        Ok(table)
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.index.get(word).map(|&i| self.values[i])
    }

    pub fn set(&mut self, word: &str, value: f64) -> bool {
        match self.index.get(word) {
            Some(&i) => {
                self.values[i] = value;
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.words.iter().map(String::as_str).zip(self.values.iter().copied())
    }

    /// Weights aligned to the rows of `emb`; words missing from this table
    /// get the initial weight 1.
    pub fn aligned_to(&self, emb: &EmbeddingTable) -> Vec<f64> {
        emb.words().iter().map(|w| self.get(w).unwrap_or(1.0)).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.len()
    }

    /// `word<TAB>weight` lines with shortest round-trip decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (word, value) in self.iter() {
            writeln!(out, "{word}\t{value}").unwrap();
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn parse_tsv(text: &str, path: &Path) -> Result<Self> {
        let rows = parse_tsv_rows(text.lines().enumerate(), path)?;
        Self::from_entries(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text, path)
    }
}

fn parse_tsv_rows<'a>(lines: impl Iterator<Item = (usize, &'a str)>, path: &Path) -> Result<Vec<(String, f64)>> {
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let bad = || Error::parse(path, i + 1, "expected word<TAB>number");
        let (word, value) = line.split_once('\t').ok_or_else(bad)?;
        if word.is_empty() {
            return Err(bad());
        }
        let value: f64 = value.parse().map_err(|_| bad())?;
        if !value.is_finite() {
            return Err(bad());
        }
        rows.push((word.to_string(), value));
    }
    Ok(rows)
}

/// Sentence-level inverse document frequencies,
/// `ln(N / (1 + n_w))` where `n_w` counts the sentences containing `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    entries: HashMap<String, f64>,
    n_sentences: usize,
}

impl IdfTable {
    pub fn build(corpus: &SegmentedCorpus) -> Result<Self> {
        if corpus.sentence_count() == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut freq: HashMap<&str, usize> = HashMap::new();
        let mut seen: Vec<&str> = Vec::new();
        for sentence in corpus.sentences() {
            seen.clear();
            seen.extend(sentence.tokens.iter().map(|t| t.as_str()));
            seen.sort_unstable();
            seen.dedup();
            for &w in &seen {
                *freq.entry(w).or_default() += 1;
            }
        }
        let n = corpus.sentence_count();
        let entries = freq
            .into_iter()
            .map(|(w, nw)| (w.to_string(), idf_value(n, nw)))
            .collect();
        Ok(IdfTable {
            entries,
            n_sentences: n,
        })
    }

    pub fn from_entries<I, S>(n_sentences: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        IdfTable {
            entries: entries.into_iter().map(|(w, v)| (w.into(), v)).collect(),
            n_sentences,
        }
    }

    pub fn n_sentences(&self) -> usize {
        self.n_sentences
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    /// IDF of `word`; a word never seen gets `ln(N)`, i.e. `n_w = 0`.
    pub fn idf(&self, word: &str) -> f64 {
        self.get(word).unwrap_or_else(|| idf_value(self.n_sentences, 0))
    }

    /// Entries sorted by word.
    pub fn sorted(&self) -> Vec<(&str, f64)> {
        let mut rows: Vec<(&str, f64)> = self.entries.iter().map(|(w, &v)| (w.as_str(), v)).collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(b.0));
        rows
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("#N={}\n", self.n_sentences);
        for (word, value) in self.sorted() {
            writeln!(out, "{word}\t{value}").unwrap();
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn parse_tsv(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let n_sentences = lines
            .next()
            .and_then(|(_, l)| l.strip_prefix("#N="))
            .and_then(|n| n.trim().parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::parse(path, 1, "expected header `#N=<sentence_count>`"))?;
        let rows = parse_tsv_rows(lines, path)?;
        let mut entries = HashMap::with_capacity(rows.len());
        for (word, value) in rows {
            if entries.insert(word.clone(), value).is_some() {
                return Err(Error::Duplicate(word));
            }
        }
        Ok(IdfTable { entries, n_sentences })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text, path)
    }
}

fn idf_value(n_sentences: usize, sentence_freq: usize) -> f64 {
    (n_sentences as f64 / (1 + sentence_freq) as f64).ln()
}
