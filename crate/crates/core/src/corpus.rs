//! Tokenization and loading of plain-text corpora and labeled essay datasets.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

const DETACHED: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', '(', ')', '[', ']'];

/// A non-empty, whitespace-free token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    /// Returns `None` for empty input or input containing whitespace.
    pub fn new(surface: impl Into<String>) -> Option<Self> {
        let surface = surface.into();
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            None
        } else {
            Some(Token(surface))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Splits on whitespace and detaches leading and trailing punctuation
/// (`.,;:!?"'()[]`) into single-character tokens. Case is preserved, as are
/// hyphens and apostrophes inside a word.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let start = chunk
            .char_indices()
            .find(|(_, c)| !DETACHED.contains(c))
            .map(|(i, _)| i);
        let Some(start) = start else {
            out.extend(chunk.chars().map(|c| Token(c.to_string())));
            continue;
        };
        let end = chunk
            .char_indices()
            .rev()
            .find(|(_, c)| !DETACHED.contains(c))
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(chunk.len());
        out.extend(chunk[..start].chars().map(|c| Token(c.to_string())));
        out.push(Token(chunk[start..end].to_string()));
        out.extend(chunk[end..].chars().map(|c| Token(c.to_string())));
    }
    out
}

/// Splits running text into sentences after any of `.!?` that is followed by
/// whitespace. The terminating punctuation stays with its sentence.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            if let Some(&(_, next)) = chars.peek() {
                if next.is_whitespace() {
                    let end = i + c.len_utf8();
                    out.push(text[start..end].trim());
                    start = end;
                }
            }
        }
    }
    out.push(text[start..].trim());
    out.retain(|s| !s.is_empty());
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub doc_index: usize,
    pub sent_index: usize,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>, doc_index: usize, sent_index: usize) -> Self {
        Sentence {
            tokens,
            doc_index,
            sent_index,
        }
    }

    /// A free-standing sentence built from raw text.
    pub fn from_text(text: &str) -> Self {
        Sentence::new(tokenize(text), 0, 0)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Documents as ordered sentence lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentedCorpus {
    documents: Vec<Vec<Sentence>>,
    // Global index of each document's first sentence.
    offsets: Vec<usize>,
    token_count: usize,
    sentence_count: usize,
}

impl SegmentedCorpus {
    /// Builds a corpus from token lists, one inner list per document.
    /// Empty documents are dropped and indices are assigned in order.
    pub fn from_documents(docs: Vec<Vec<Vec<Token>>>) -> Self {
        let mut corpus = SegmentedCorpus::default();
        for doc in docs.into_iter().filter(|d| !d.is_empty()) {
            let doc_index = corpus.documents.len();
            corpus.offsets.push(corpus.sentence_count);
            let sentences: Vec<Sentence> = doc
                .into_iter()
                .enumerate()
                .map(|(i, tokens)| Sentence::new(tokens, doc_index, i))
                .collect();
            corpus.sentence_count += sentences.len();
            corpus.token_count += sentences.iter().map(Sentence::len).sum::<usize>();
            corpus.documents.push(sentences);
        }
        corpus
    }

    pub fn documents(&self) -> &[Vec<Sentence>] {
        &self.documents
    }

    pub fn document(&self, doc_index: usize) -> &[Sentence] {
        &self.documents[doc_index]
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn sentence_count(&self) -> usize {
        self.sentence_count
    }

    /// Position of a sentence in corpus order, across documents.
    pub fn global_index(&self, sentence: &Sentence) -> usize {
        self.offsets[sentence.doc_index] + sentence.sent_index
    }

    pub fn sentence(&self, global_index: usize) -> &Sentence {
        let doc = self.offsets.partition_point(|&o| o <= global_index) - 1;
        &self.documents[doc][global_index - self.offsets[doc]]
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.documents.iter().flatten()
    }

    /// Serializes back to the plain format: one sentence per line, tokens
    /// joined by single spaces, blank line between documents.
    pub fn write_plain<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, doc) in self.documents.iter().enumerate() {
            if i > 0 {
                writeln!(out)?;
            }
            for sentence in doc {
                let line: Vec<&str> = sentence.tokens.iter().map(Token::as_str).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
        Ok(())
    }
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::Utf8 {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })
}

pub fn parse_plain_corpus(text: &str) -> SegmentedCorpus {
    let mut docs = Vec::new();
    let mut current: Vec<Vec<Token>> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                docs.push(std::mem::take(&mut current));
            }
        } else {
            current.push(tokenize(line));
        }
    }
    if !current.is_empty() {
        docs.push(current);
    }
    SegmentedCorpus::from_documents(docs)
}

/// Loads a UTF-8 file with one sentence per line and blank lines between
/// documents.
pub fn load_plain_corpus(path: impl AsRef<Path>) -> Result<SegmentedCorpus> {
    Ok(parse_plain_corpus(&read_utf8(path.as_ref())?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub prompt_id: String,
    pub essay_id: String,
    pub sentence: Sentence,
}

/// Prompts (keyed and ordered by id) and the learner sentences written for
/// them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledDataset {
    pub prompts: BTreeMap<String, Vec<Sentence>>,
    pub samples: Vec<Sample>,
}

impl LabeledDataset {
    pub fn prompt_ids(&self) -> impl Iterator<Item = &str> {
        self.prompts.keys().map(String::as_str)
    }

    /// Sample count per prompt id. Prompts without samples count 0.
    pub fn counts(&self) -> BTreeMap<&str, usize> {
        let mut counts: BTreeMap<&str, usize> = self.prompt_ids().map(|p| (p, 0)).collect();
        for s in &self.samples {
            *counts.entry(s.prompt_id.as_str()).or_default() += 1;
        }
        counts
    }
}

fn prompt_sentences(text: &str) -> Vec<Sentence> {
    split_sentences(text)
        .into_iter()
        .map(tokenize)
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, tokens)| Sentence::new(tokens, 0, i))
        .collect()
}

/// Parses `prompt_id<TAB>prompt_text` rows.
pub fn parse_prompts(text: &str, path: &Path) -> Result<BTreeMap<String, Vec<Sentence>>> {
    let mut prompts = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(id), Some(body), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(path, lineno, "expected prompt_id<TAB>prompt_text"));
        };
        if id.is_empty() {
            return Err(Error::parse(path, lineno, "empty prompt id"));
        }
        let sentences = prompt_sentences(body);
        if sentences.is_empty() {
            return Err(Error::parse(path, lineno, format!("prompt `{id}` has no sentences")));
        }
        if prompts.insert(id.to_string(), sentences).is_some() {
            return Err(Error::parse(path, lineno, format!("duplicate prompt id `{id}`")));
        }
    }
    Ok(prompts)
}

pub fn load_prompts(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<Sentence>>> {
    let path = path.as_ref();
    parse_prompts(&read_utf8(path)?, path)
}

/// Parses `prompt_id<TAB>essay_id<TAB>sentence_text` rows, validating each
/// prompt id against `prompts`.
pub fn parse_samples(text: &str, path: &Path, prompts: &BTreeMap<String, Vec<Sentence>>) -> Result<Vec<Sample>> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [prompt_id, essay_id, body] = fields[..] else {
            return Err(Error::parse(
                path,
                lineno,
                "expected prompt_id<TAB>essay_id<TAB>sentence_text",
            ));
        };
        if !prompts.contains_key(prompt_id) {
            return Err(Error::parse(path, lineno, format!("unknown prompt id `{prompt_id}`")));
        }
        let sent_index = samples.len();
        samples.push(Sample {
            prompt_id: prompt_id.to_string(),
            essay_id: essay_id.to_string(),
            sentence: Sentence::new(tokenize(body), 0, sent_index),
        });
    }
    Ok(samples)
}

pub fn load_labeled_dataset(
    prompts_path: impl AsRef<Path>,
    sentences_path: impl AsRef<Path>,
) -> Result<LabeledDataset> {
    let prompts = load_prompts(prompts_path)?;
    let path = sentences_path.as_ref();
    let samples = parse_samples(&read_utf8(path)?, path, &prompts)?;
    Ok(LabeledDataset { prompts, samples })
}
