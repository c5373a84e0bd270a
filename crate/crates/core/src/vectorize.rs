//! Sentence vectors under the four self-contained methods, and cosine.

use std::collections::BTreeMap;

use crate::corpus::Sentence;
use crate::embeddings::{EmbeddingTable, IdfTable, WeightTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Components {
    /// Embedding-space vector.
    Dense(Vec<f64>),
    /// Term-space vector keyed by token surface.
    Sparse(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVec {
    pub components: Components,
    /// Tokens that contributed a term (found in the embeddings, for the
    /// dense methods).
    pub n_contributing_tokens: usize,
    pub n_skipped_tokens: usize,
}

impl SentenceVec {
    pub fn dense(values: Vec<f64>) -> Self {
        let nonzero = values.iter().any(|v| *v != 0.0);
        SentenceVec {
            components: Components::Dense(values),
            n_contributing_tokens: usize::from(nonzero),
            n_skipped_tokens: 0,
        }
    }

    pub fn as_dense(&self) -> Option<&[f64]> {
        match &self.components {
            Components::Dense(v) => Some(v),
            Components::Sparse(_) => None,
        }
    }

    pub fn as_sparse(&self) -> Option<&BTreeMap<String, f64>> {
        match &self.components {
            Components::Sparse(m) => Some(m),
            Components::Dense(_) => None,
        }
    }

    pub fn norm(&self) -> f64 {
        let sq: f64 = match &self.components {
            Components::Dense(v) => v.iter().map(|x| x * x).sum(),
            Components::Sparse(m) => m.values().map(|x| x * x).sum(),
        };
        sq.sqrt()
    }

    pub fn is_zero(&self) -> bool {
        match &self.components {
            Components::Dense(v) => v.iter().all(|x| *x == 0.0),
            Components::Sparse(m) => m.values().all(|x| *x == 0.0),
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        match &mut self.components {
            Components::Dense(v) => v.iter_mut().for_each(|x| *x *= factor),
            Components::Sparse(m) => m.values_mut().for_each(|x| *x *= factor),
        }
        self
    }
}

pub fn dot(x: &SentenceVec, y: &SentenceVec) -> Result<f64> {
    match (&x.components, &y.components) {
        (Components::Dense(a), Components::Dense(b)) => {
            if a.len() != b.len() {
                return Err(Error::VectorMismatch(a.len(), b.len()));
            }
            Ok(a.iter().zip(b).map(|(p, q)| p * q).sum())
        }
        (Components::Sparse(a), Components::Sparse(b)) => {
            let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
            Ok(small.iter().filter_map(|(k, v)| large.get(k).map(|w| v * w)).sum())
        }
        _ => Err(Error::MixedVectors),
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(x: &SentenceVec, y: &SentenceVec) -> Result<f64> {
    let d = dot(x, y)?;
    let denom = x.norm() * y.norm();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((d / denom).clamp(-1.0, 1.0))
}

/// A sentence-to-vector method together with the tables it reads.
#[derive(Debug, Clone, Copy)]
pub enum Method<'a> {
    Tfidf {
        idf: &'a IdfTable,
    },
    Sum {
        emb: &'a EmbeddingTable,
    },
    IdfEmb {
        emb: &'a EmbeddingTable,
        idf: &'a IdfTable,
    },
    Weighted {
        emb: &'a EmbeddingTable,
        weights: &'a WeightTable,
    },
}

impl Method<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Tfidf { .. } => "tfidf",
            Method::Sum { .. } => "sum",
            Method::IdfEmb { .. } => "idf-emb",
            Method::Weighted { .. } => "weighted",
        }
    }

    pub fn vectorize(&self, sentence: &Sentence) -> SentenceVec {
        match *self {
            Method::Tfidf { idf } => vec_tfidf(sentence, idf),
            Method::Sum { emb } => vec_sum(sentence, emb),
            Method::IdfEmb { emb, idf } => vec_idf_emb(sentence, emb, idf),
            Method::Weighted { emb, weights } => vec_weighted(sentence, emb, weights),
        }
    }
}

/// Raw term count times IDF, per distinct token.
pub fn vec_tfidf(sentence: &Sentence, idf: &IdfTable) -> SentenceVec {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &sentence.tokens {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let components = counts
        .into_iter()
        .map(|(w, tf)| (w.to_string(), tf as f64 * idf.idf(w)))
        .collect();
    SentenceVec {
        components: Components::Sparse(components),
        n_contributing_tokens: sentence.len(),
        n_skipped_tokens: 0,
    }
}

fn scaled_sum(sentence: &Sentence, emb: &EmbeddingTable, mut scale: impl FnMut(usize, &str) -> f64) -> SentenceVec {
    let mut acc = vec![0.0; emb.dim()];
    let mut hits = 0;
    for token in &sentence.tokens {
        let Some(row) = emb.resolve(token.as_str()) else {
            continue;
        };
        hits += 1;
        let g = scale(row, token.as_str());
        for (a, x) in acc.iter_mut().zip(emb.row(row)) {
            *a += g * x;
        }
    }
    SentenceVec {
        components: Components::Dense(acc),
        n_contributing_tokens: hits,
        n_skipped_tokens: sentence.len() - hits,
    }
}

/// Plain sum of the word vectors; tokens without a vector are skipped.
pub fn vec_sum(sentence: &Sentence, emb: &EmbeddingTable) -> SentenceVec {
    scaled_sum(sentence, emb, |_, _| 1.0)
}

/// Word vectors scaled by the IDF of the token before summing.
pub fn vec_idf_emb(sentence: &Sentence, emb: &EmbeddingTable, idf: &IdfTable) -> SentenceVec {
    scaled_sum(sentence, emb, |_, token| idf.idf(token))
}

/// Word vectors scaled by their learned weight before summing. A word the
/// weight table does not cover keeps the initial weight 1.
pub fn vec_weighted(sentence: &Sentence, emb: &EmbeddingTable, weights: &WeightTable) -> SentenceVec {
    scaled_sum(sentence, emb, |row, _| weights.get(emb.word(row)).unwrap_or(1.0))
}

/// Mean of the per-sentence vectors of a prompt. Zero vectors still count
/// in the denominator.
pub fn prompt_vec(sentences: &[Sentence], method: &Method<'_>) -> Result<SentenceVec> {
    let mut vecs = sentences.iter().map(|s| method.vectorize(s));
    let first = vecs.next().ok_or(Error::EmptyPrompt)?;
    let mut acc = first;
    for v in vecs {
        acc.n_contributing_tokens += v.n_contributing_tokens;
        acc.n_skipped_tokens += v.n_skipped_tokens;
        match (&mut acc.components, v.components) {
            (Components::Dense(a), Components::Dense(b)) => {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            }
            (Components::Sparse(a), Components::Sparse(b)) => {
                for (k, y) in b {
                    *a.entry(k).or_default() += y;
                }
            }
            _ => unreachable!("one method yields one vector kind"),
        }
    }
    Ok(acc.scaled(1.0 / sentences.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, SegmentedCorpus};
    use proptest::prelude::*;

    fn s(text: &str) -> Sentence {
        Sentence::from_text(text)
    }

    fn emb2() -> EmbeddingTable {
        EmbeddingTable::from_entries(2, [("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])]).unwrap()
    }

    fn dense(v: &SentenceVec) -> &[f64] {
        v.as_dense().unwrap()
    }

    #[test]
    fn tfidf_examples() {
        let idf = IdfTable::from_entries(100, [("a", 2.0), ("b", 3.0)]);
        let v = vec_tfidf(&s("a a b"), &idf);
        let m = v.as_sparse().unwrap();
        assert_eq!(m["a"], 4.0);
        assert_eq!(m["b"], 3.0);

        let v = vec_tfidf(&s(""), &idf);
        assert!(v.is_zero());
        assert_eq!(v.n_contributing_tokens, 0);

        let v = vec_tfidf(&s("zz zz"), &idf);
        assert_eq!(v.as_sparse().unwrap()["zz"], 2.0 * 100f64.ln());
    }

    #[test]
    fn sum_examples() {
        let e = emb2();
        assert_eq!(dense(&vec_sum(&s("a b"), &e)), [1.0, 1.0]);
        let v = vec_sum(&s("x y"), &e);
        assert!(v.is_zero());
        assert_eq!((v.n_contributing_tokens, v.n_skipped_tokens), (0, 2));
        let e = EmbeddingTable::from_entries(2, [("a", vec![1.0, 2.0])]).unwrap();
        assert_eq!(dense(&vec_sum(&s("a a"), &e)), [2.0, 4.0]);
    }

    #[test]
    fn idf_emb_examples() {
        let e = emb2();
        let idf = IdfTable::from_entries(10, [("a", 2.0), ("b", 0.0)]);
        assert_eq!(dense(&vec_idf_emb(&s("a"), &e, &idf)), [2.0, 0.0]);
        assert_eq!(dense(&vec_idf_emb(&s("a b"), &e, &idf)), [2.0, 0.0]);
        let ones = IdfTable::from_entries(10, [("a", 1.0), ("b", 1.0)]);
        assert_eq!(vec_idf_emb(&s("b a b"), &e, &ones), vec_sum(&s("b a b"), &e));
    }

    #[test]
    fn weighted_examples() {
        let e = emb2();
        let w = WeightTable::from_entries([("a", 2.0), ("b", 3.0)]).unwrap();
        assert_eq!(dense(&vec_weighted(&s("a b"), &e, &w)), [2.0, 3.0]);
        let ones = WeightTable::ones(&e);
        assert_eq!(vec_weighted(&s("a b a"), &e, &ones), vec_sum(&s("a b a"), &e));
        let w = WeightTable::from_entries([("a", 0.0), ("b", 1.0)]).unwrap();
        assert_eq!(dense(&vec_weighted(&s("a b"), &e, &w)), [0.0, 1.0]);
    }

    #[test]
    fn weighted_uses_case_fallback_row() {
        let e = emb2();
        let w = WeightTable::from_entries([("a", 5.0), ("b", 1.0)]).unwrap();
        assert_eq!(dense(&vec_weighted(&s("A"), &e, &w)), [5.0, 0.0]);
    }

    #[test]
    fn cosine_examples() {
        let x = SentenceVec::dense(vec![3.0, 4.0]);
        assert!((cosine(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let a = SentenceVec::dense(vec![1.0, 0.0]);
        let b = SentenceVec::dense(vec![0.0, 1.0]);
        assert_eq!(cosine(&a, &b).unwrap(), 0.0);
        let z = SentenceVec::dense(vec![0.0, 0.0]);
        assert_eq!(cosine(&x, &z).unwrap(), 0.0);
        let c = SentenceVec::dense(vec![1.0, 0.0, 0.0]);
        assert!(matches!(cosine(&a, &c), Err(Error::VectorMismatch(2, 3))));
        let sp = vec_tfidf(&s("a"), &IdfTable::from_entries(3, [("a", 1.0)]));
        assert!(matches!(cosine(&a, &sp), Err(Error::MixedVectors)));
    }

    #[test]
    fn prompt_vec_examples() {
        let e = emb2();
        let m = Method::Sum { emb: &e };
        let one = [s("a b")];
        assert_eq!(prompt_vec(&one, &m).unwrap(), vec_sum(&one[0], &e));
        let e2 = EmbeddingTable::from_entries(2, [("a", vec![2.0, 0.0]), ("b", vec![0.0, 2.0])]).unwrap();
        let m = Method::Sum { emb: &e2 };
        assert_eq!(dense(&prompt_vec(&[s("a"), s("b")], &m).unwrap()), [1.0, 1.0]);
        // Zero vectors still count.
        assert_eq!(dense(&prompt_vec(&[s("a"), s("zz")], &m).unwrap()), [1.0, 0.0]);
        assert!(matches!(prompt_vec(&[], &m), Err(Error::EmptyPrompt)));

        let idf = IdfTable::from_entries(10, [("a", 2.0), ("b", 4.0)]);
        let m = Method::Tfidf { idf: &idf };
        let v = prompt_vec(&[s("a"), s("b b")], &m).unwrap();
        let sp = v.as_sparse().unwrap();
        assert_eq!((sp["a"], sp["b"]), (1.0, 4.0));
    }

    /// Naive recount: for each distinct word, count occurrences and
    /// sentences directly from the raw text.
    #[test]
    fn tfidf_matches_naive_recount() {
        let lines = [
            "the cat sat on the mat",
            "a dog sat",
            "the dog and the cat",
            "birds fly",
            "the the the",
            "cat",
        ];
        let docs = vec![lines.iter().map(|l| tokenize(l)).collect()];
        let corpus = SegmentedCorpus::from_documents(docs);
        let idf = IdfTable::build(&corpus).unwrap();
        let n = lines.len() as f64;
        for line in lines {
            let words: Vec<&str> = line.split(' ').collect();
            let v = vec_tfidf(&s(line), &idf);
            let m = v.as_sparse().unwrap();
            assert_eq!(m.len(), {
                let mut d = words.clone();
                d.sort();
                d.dedup();
                d.len()
            });
            for w in &words {
                let tf = words.iter().filter(|x| *x == w).count() as f64;
                let nw = lines.iter().filter(|l| l.split(' ').any(|x| x == *w)).count() as f64;
                assert_eq!(m[*w], tf * (n / (1.0 + nw)).ln(), "{w} in {line}");
            }
        }
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 4)
    }

    proptest! {
        #[test]
        fn cosine_scale_invariant(x in vec_strategy(), y in vec_strategy(),
                                  a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
            let c = cosine(&SentenceVec::dense(x.clone()), &SentenceVec::dense(y.clone())).unwrap();
            let xs: Vec<f64> = x.iter().map(|v| v * a).collect();
            let ys: Vec<f64> = y.iter().map(|v| v * b).collect();
            let cs = cosine(&SentenceVec::dense(xs), &SentenceVec::dense(ys)).unwrap();
            prop_assert!((c - cs).abs() <= 1e-12 * c.abs().max(1.0));
        }

        #[test]
        fn cosine_symmetric(x in vec_strategy(), y in vec_strategy()) {
            let (x, y) = (SentenceVec::dense(x), SentenceVec::dense(y));
            prop_assert_eq!(cosine(&x, &y).unwrap(), cosine(&y, &x).unwrap());
        }

        #[test]
        fn bag_of_words_order_invariance(words in prop::collection::vec(0usize..5, 0..10),
                                          seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let names = ["a", "b", "c", "d", "zz"];
            let e = EmbeddingTable::from_entries(2, [
                ("a", vec![1.0, 0.5]), ("b", vec![-0.3, 2.0]),
                ("c", vec![0.7, 0.7]), ("d", vec![-1.0, 0.1]),
            ]).unwrap();
            let idf = IdfTable::from_entries(9, [("a", 0.3), ("b", 1.7), ("c", -0.1)]);
            let w = WeightTable::from_entries([("a", 2.0), ("b", -1.0), ("c", 0.5), ("d", 1.5)]).unwrap();
            let mut shuffled = words.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let mk = |ix: &[usize]| Sentence::new(
                ix.iter().map(|&i| crate::Token::new(names[i]).unwrap()).collect(), 0, 0);
            let (s1, s2) = (mk(&words), mk(&shuffled));
            let tol = 1e-12;
            for m in [Method::Tfidf { idf: &idf }, Method::Sum { emb: &e },
                      Method::IdfEmb { emb: &e, idf: &idf }, Method::Weighted { emb: &e, weights: &w }] {
                let (v1, v2) = (m.vectorize(&s1), m.vectorize(&s2));
                match (&v1.components, &v2.components) {
                    (Components::Dense(a), Components::Dense(b)) =>
                        for (x, y) in a.iter().zip(b) { prop_assert!((x - y).abs() < tol) },
                    _ => prop_assert_eq!(&v1, &v2),
                }
            }
        }
    }
}
