//! Prompt identification: score every sentence against every prompt, then
//! measure accuracy and mean reciprocal rank of the true prompt.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;

use crate::corpus::{LabeledDataset, Sentence};
use crate::embeddings::{EmbeddingTable, WeightTable};
use crate::error::{Error, Result};
use crate::vectorize::{cosine, prompt_vec, Method, SentenceVec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowMeta {
    pub true_prompt: String,
    pub essay_id: String,
}

/// Relevance scores, one row per evaluated sentence and one column per
/// prompt. Columns follow `prompt_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub prompt_ids: Vec<String>,
    pub rows: Vec<RowMeta>,
    pub values: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    fn with_rows(dataset: &LabeledDataset, mut cell: impl FnMut(usize, usize) -> f64) -> Self {
        let prompt_ids: Vec<String> = dataset.prompts.keys().cloned().collect();
        let rows = dataset
            .samples
            .iter()
            .map(|s| RowMeta {
                true_prompt: s.prompt_id.clone(),
                essay_id: s.essay_id.clone(),
            })
            .collect();
        let values = (0..dataset.samples.len())
            .map(|r| (0..prompt_ids.len()).map(|c| cell(r, c)).collect())
            .collect();
        ScoreMatrix {
            prompt_ids,
            rows,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn true_column(&self, row: usize) -> Option<usize> {
        let id = &self.rows[row].true_prompt;
        self.prompt_ids.iter().position(|p| p == id)
    }

    /// Header `true_prompt<TAB>essay_id<TAB><prompt ids...>`, then one row
    /// per sentence.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("true_prompt\tessay_id");
        for p in &self.prompt_ids {
            write!(out, "\t{p}").unwrap();
        }
        out.push('\n');
        for (meta, row) in self.rows.iter().zip(&self.values) {
            write!(out, "{}\t{}", meta.true_prompt, meta.essay_id).unwrap();
            for v in row {
                write!(out, "\t{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Cosine between each sentence and the mean vector of each prompt.
pub fn score_all(dataset: &LabeledDataset, method: &Method<'_>) -> Result<ScoreMatrix> {
    let prompts: Vec<SentenceVec> = dataset
        .prompts
        .values()
        .map(|sentences| prompt_vec(sentences, method))
        .collect::<Result<_>>()?;
    let sentences: Vec<SentenceVec> = dataset.samples.iter().map(|s| method.vectorize(&s.sentence)).collect();
    let mut failure = None;
    let matrix = ScoreMatrix::with_rows(dataset, |r, c| {
        cosine(&sentences[r], &prompts[c]).unwrap_or_else(|e| {
            failure.get_or_insert(e);
            0.0
        })
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(matrix),
    }
}

/// Independent uniform `[0, 1)` score per cell.
pub fn score_random<R: Rng + ?Sized>(dataset: &LabeledDataset, rng: &mut R) -> ScoreMatrix {
    ScoreMatrix::with_rows(dataset, |_, _| rng.gen::<f64>())
}

/// The prompt with most samples gets 1 in every row, the rest 0. Ties go to
/// the smallest prompt id.
pub fn score_majority(dataset: &LabeledDataset) -> ScoreMatrix {
    let counts = dataset.counts();
    // BTreeMap iteration is in id order, so the first maximum wins.
    let majority = counts
        .iter()
        .fold(None::<(&str, usize)>, |best, (&id, &n)| match best {
            Some((_, m)) if m >= n => best,
            _ => Some((id, n)),
        })
        .map(|(id, _)| id.to_string());
    let ids: Vec<&String> = dataset.prompts.keys().collect();
    ScoreMatrix::with_rows(
        dataset,
        |_, c| {
            if Some(ids[c]) == majority.as_ref() {
                1.0
            } else {
                0.0
            }
        },
    )
}

fn min_max_rows(values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    values
        .iter()
        .map(|row| {
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                row.iter().map(|v| (v - lo) / (hi - lo)).collect()
            } else {
                vec![0.5; row.len()]
            }
        })
        .collect()
}

/// `alpha * m1 + (1 - alpha) * m2` after min-max normalizing each row of
/// both inputs to `[0, 1]`. Constant rows normalize to 0.5.
pub fn score_combination(m1: &ScoreMatrix, m2: &ScoreMatrix, alpha: f64) -> Result<ScoreMatrix> {
    if m1.prompt_ids != m2.prompt_ids
        || m1.rows != m2.rows
        || m1.values.iter().zip(&m2.values).any(|(a, b)| a.len() != b.len())
    {
        return Err(Error::StructureMismatch);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    let (n1, n2) = (min_max_rows(&m1.values), min_max_rows(&m2.values));
    let values = n1
        .iter()
        .zip(&n2)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect())
        .collect();
    Ok(ScoreMatrix {
        prompt_ids: m1.prompt_ids.clone(),
        rows: m1.rows.clone(),
        values,
    })
}

/// Rank of column `truth` under descending score. Tied scores share the
/// mean of the ranks their block spans.
pub fn rank_of(row: &[f64], truth: usize) -> f64 {
    let t = row[truth];
    let above = row.iter().filter(|&&v| v > t).count();
    let tied = row.iter().filter(|&&v| v == t).count();
    above as f64 + (tied as f64 + 1.0) / 2.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PromptTally {
    pub correct: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub accuracy: f64,
    pub mrr: f64,
    pub n_sentences: usize,
    pub per_prompt: BTreeMap<String, PromptTally>,
}

/// Accuracy counts a row only when the true prompt is the unique top
/// score; a tie at the top is a miss.
pub fn metrics(matrix: &ScoreMatrix, method: &str) -> Result<EvalReport> {
    if matrix.n_rows() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut per_prompt: BTreeMap<String, PromptTally> = matrix
        .prompt_ids
        .iter()
        .map(|p| (p.clone(), PromptTally::default()))
        .collect();
    let (mut hits, mut rr) = (0usize, 0.0);
    for (r, row) in matrix.values.iter().enumerate() {
        let truth = matrix
            .true_column(r)
            .ok_or_else(|| Error::UnknownPrompt(matrix.rows[r].true_prompt.clone()))?;
        let rank = rank_of(row, truth);
        let correct = rank == 1.0;
        rr += 1.0 / rank;
        let tally = per_prompt.entry(matrix.rows[r].true_prompt.clone()).or_default();
        tally.total += 1;
        if correct {
            hits += 1;
            tally.correct += 1;
        }
    }
    let n = matrix.n_rows();
    Ok(EvalReport {
        method: method.to_string(),
        accuracy: hits as f64 / n as f64,
        mrr: rr / n as f64,
        n_sentences: n,
        per_prompt,
    })
}

/// Percentages with one decimal, one line per report, in the order given.
pub fn summary_table(reports: &[EvalReport]) -> String {
    let width = reports.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
    let mut out = format!("{:<width$}  {:>6}  {:>6}  {:>7}\n", "method", "ACC", "MRR", "n");
    for r in reports {
        writeln!(
            out,
            "{:<width$}  {:>6.1}  {:>6.1}  {:>7}",
            r.method,
            100.0 * r.accuracy,
            100.0 * r.mrr,
            r.n_sentences
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordScore {
    pub word: String,
    pub score: f64,
    pub weight: f64,
}

/// Vocabulary words ranked by the cosine between their weighted vector and
/// the prompt's weighted mean vector. A negative weight flips the sign of
/// the score relative to the unweighted cosine.
pub fn top_words_for_prompt(
    prompt_id: &str,
    prompts: &BTreeMap<String, Vec<Sentence>>,
    emb: &EmbeddingTable,
    weights: &WeightTable,
    k: usize,
) -> Result<Vec<WordScore>> {
    let sentences = prompts
        .get(prompt_id)
        .ok_or_else(|| Error::UnknownPrompt(prompt_id.to_string()))?;
    let target = prompt_vec(sentences, &Method::Weighted { emb, weights })?;
    let mut scored = Vec::with_capacity(emb.len());
    for (row, word) in emb.words().iter().enumerate() {
        let weight = weights.get(word).unwrap_or(1.0);
        let v = SentenceVec::dense(emb.row(row).iter().map(|x| weight * x).collect());
        scored.push(WordScore {
            word: word.clone(),
            score: cosine(&v, &target)?,
            weight,
        });
    }
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.word.cmp(&b.word)));
    scored.truncate(k);
    Ok(scored)
}

pub type WordValues = Vec<(String, f64)>;

/// The `k` lowest-weighted words (ascending) and the `k` highest (descending).
pub fn inspect_weights(weights: &WeightTable, k: usize) -> (WordValues, WordValues) {
    let mut all: Vec<(String, f64)> = weights.iter().map(|(w, g)| (w.to_string(), g)).collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let k = k.min(all.len());
    let bottom = all[..k].to_vec();
    let top = all[all.len() - k..].iter().rev().cloned().collect();
    (bottom, top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_prompts, parse_samples, SegmentedCorpus};
    use crate::embeddings::IdfTable;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use std::path::Path;

    fn dataset(prompts: &str, samples: &str) -> LabeledDataset {
        let p = Path::new("t");
        let prompts = parse_prompts(prompts, p).unwrap();
        let samples = parse_samples(samples, p, &prompts).unwrap();
        LabeledDataset { prompts, samples }
    }

    fn matrix(truth: &[usize], values: Vec<Vec<f64>>) -> ScoreMatrix {
        let k = values[0].len();
        ScoreMatrix {
            prompt_ids: (0..k).map(|i| format!("p{i}")).collect(),
            rows: truth
                .iter()
                .map(|t| RowMeta {
                    true_prompt: format!("p{t}"),
                    essay_id: "e".into(),
                })
                .collect(),
            values,
        }
    }

    #[test]
    fn mrr_examples() {
        let m = matrix(
            &[0, 0, 0],
            vec![
                vec![0.9, 0.1, 0.2, 0.3],
                vec![0.5, 0.9, 0.1, 0.2],
                vec![0.1, 0.9, 0.8, 0.7],
            ],
        );
        let r = metrics(&m, "x").unwrap();
        assert!((r.mrr - 0.58333333333333).abs() < 1e-12);
        assert!((r.accuracy - 1.0 / 3.0).abs() < 1e-15);

        let m = matrix(&[0, 1], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let r = metrics(&m, "x").unwrap();
        assert_eq!((r.accuracy, r.mrr), (1.0, 1.0));

        let m = matrix(&[0], vec![vec![0.7, 0.7, 0.1]]);
        let r = metrics(&m, "x").unwrap();
        assert_eq!(r.accuracy, 0.0);
        assert_eq!(rank_of(&m.values[0], 0), 1.5);
        assert!((r.mrr - 1.0 / 1.5).abs() < 1e-15);

        let empty = ScoreMatrix {
            prompt_ids: vec!["a".into()],
            rows: vec![],
            values: vec![],
        };
        assert!(matches!(metrics(&empty, "x"), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn per_prompt_breakdown() {
        let m = matrix(&[0, 0, 1], vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]]);
        let r = metrics(&m, "x").unwrap();
        assert_eq!(r.per_prompt["p0"], PromptTally { correct: 1, total: 2 });
        assert_eq!(r.per_prompt["p1"], PromptTally { correct: 1, total: 1 });
    }

    #[test]
    fn majority_examples() {
        let ds = dataset("A\tx\nB\ty\n", "A\te\ts\nA\te\ts\nA\te\ts\nB\te\ts\nB\te\ts\n");
        let r = metrics(&score_majority(&ds), "majority").unwrap();
        assert!((r.accuracy - 0.6).abs() < 1e-15);

        let ds = dataset("b\tx\na\ty\n", "a\te\ts\nb\te\ts\n");
        let m = score_majority(&ds);
        assert_eq!(m.prompt_ids, ["a", "b"]);
        assert!(m.values.iter().all(|row| row == &[1.0, 0.0]));
        assert_eq!(metrics(&m, "majority").unwrap().accuracy, 0.5);
    }

    #[test]
    fn combination_examples() {
        let m1 = matrix(&[0], vec![vec![0.2, 0.8]]);
        let m2 = matrix(&[0], vec![vec![0.9, 0.1]]);
        let c = score_combination(&m1, &m2, 0.5).unwrap();
        assert_eq!(c.values, vec![vec![0.5, 0.5]]);
        let c = score_combination(&m1, &m2, 1.0).unwrap();
        assert_eq!(c.values, vec![vec![0.0, 1.0]]);
        let flat = matrix(&[0], vec![vec![0.3, 0.3]]);
        let c = score_combination(&flat, &m2, 1.0).unwrap();
        assert_eq!(c.values, vec![vec![0.5, 0.5]]);

        let other = matrix(&[1], vec![vec![0.2, 0.8]]);
        assert!(matches!(
            score_combination(&m1, &other, 0.5),
            Err(Error::StructureMismatch)
        ));
        let wide = matrix(&[0], vec![vec![0.2, 0.8, 0.1]]);
        assert!(matches!(
            score_combination(&m1, &wide, 0.5),
            Err(Error::StructureMismatch)
        ));
    }

    #[test]
    fn score_all_examples() {
        let ds = dataset("p1\tcats purr\np2\tdogs bark\n", "p1\te\tcats purr\np1\te\tcats\n");
        let corpus = SegmentedCorpus::from_documents(vec![ds
            .samples
            .iter()
            .map(|s| s.sentence.tokens.clone())
            .chain(ds.prompts.values().flatten().map(|s| s.tokens.clone()))
            .collect()]);
        let idf = IdfTable::build(&corpus).unwrap();
        let m = score_all(&ds, &Method::Tfidf { idf: &idf }).unwrap();
        assert!((m.values[0][0] - 1.0).abs() < 1e-12);
        assert_eq!(m.values[0][1], 0.0);
        assert_eq!(m.values[1][1], 0.0);

        let emb = EmbeddingTable::from_entries(2, [("cats", vec![1.0, 0.0])]).unwrap();
        let ds = dataset("p1\tcats\np2\tcats\n", "p1\te\tzebra quagga\n");
        let m = score_all(&ds, &Method::Sum { emb: &emb }).unwrap();
        assert_eq!(m.values, vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn random_scores_are_seeded() {
        let ds = dataset("a\tx\nb\ty\nc\tz\n", "a\te\ts\nb\te\ts\n");
        let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let m = score_random(&ds, &mut r1);
        assert_eq!(m, score_random(&ds, &mut r2));
        assert!(m.values.iter().flatten().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn score_matrix_tsv() {
        let m = matrix(&[1], vec![vec![0.25, 1.0]]);
        assert_eq!(m.to_tsv(), "true_prompt\tessay_id\tp0\tp1\np1\te\t0.25\t1\n");
    }

    #[test]
    fn top_words_self_match() {
        let emb = EmbeddingTable::from_entries(
            3,
            [
                ("professor", vec![0.9, 0.3, 0.1]),
                ("university", vec![1.0, 0.2, 0.0]),
                ("banana", vec![0.0, 0.0, 1.0]),
            ],
        )
        .unwrap();
        let weights = WeightTable::from_entries([("professor", 1.0), ("university", 2.0), ("banana", -1.0)]).unwrap();
        let prompts = parse_prompts("p\tuniversity\n", Path::new("t")).unwrap();
        let words = top_words_for_prompt("p", &prompts, &emb, &weights, 10).unwrap();
        assert_eq!(words.len(), 3);
        assert_eq!(words[0].word, "university");
        assert!((words[0].score - 1.0).abs() < 1e-12);
        assert_eq!(words[0].weight, 2.0);
        assert_eq!(words[2].word, "banana");
        assert!(matches!(
            top_words_for_prompt("nope", &prompts, &emb, &weights, 1),
            Err(Error::UnknownPrompt(_))
        ));
    }

    #[test]
    fn summary_table_layout() {
        let m = matrix(&[0, 1], vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        let table = summary_table(&[metrics(&m, "majority").unwrap()]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("majority"));
        assert!(lines[1].contains("50.0"));
        assert!(lines[1].contains("75.0"));
    }

    #[test]
    fn inspect_examples() {
        let w = WeightTable::from_entries([("a", 1.0), ("b", -2.0), ("c", 3.0)]).unwrap();
        let (bottom, top) = inspect_weights(&w, 1);
        assert_eq!(bottom, [("b".to_string(), -2.0)]);
        assert_eq!(top, [("c".to_string(), 3.0)]);
        let (bottom, top) = inspect_weights(&w, 0);
        assert!(bottom.is_empty() && top.is_empty());
        let (bottom, top) = inspect_weights(&w, 10);
        assert_eq!(bottom.len(), 3);
        assert_eq!(top[0].0, "c");
    }

    fn matrices() -> impl Strategy<Value = (Vec<usize>, Vec<Vec<f64>>)> {
        (1usize..6, 1usize..8).prop_flat_map(|(k, n)| {
            (
                prop::collection::vec(0..k, n),
                prop::collection::vec(
                    prop::collection::vec(prop_oneof![(-3i32..3).prop_map(f64::from), -3.0f64..3.0], k),
                    n,
                ),
            )
        })
    }

    proptest! {
        #[test]
        fn mrr_bounds_accuracy((truth, values) in matrices()) {
            let r = metrics(&matrix(&truth, values), "x").unwrap();
            prop_assert!(r.mrr >= r.accuracy);
            prop_assert!(r.mrr > 0.0 && r.mrr <= 1.0);
        }

        #[test]
        fn metrics_depend_only_on_ranking((truth, values) in matrices(),
                                          scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
            let before = metrics(&matrix(&truth, values.clone()), "x").unwrap();
            let transformed = values.iter()
                .map(|row| row.iter().map(|v| (scale * v + shift).exp()).collect())
                .collect();
            let after = metrics(&matrix(&truth, transformed), "x").unwrap();
            prop_assert_eq!(before.accuracy, after.accuracy);
            prop_assert!((before.mrr - after.mrr).abs() < 1e-12);
        }

        #[test]
        fn combination_extremes_keep_argmax((truth, a) in matrices(), seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|_| rand::Rng::gen(&mut rng)).collect()).collect();
            let (m1, m2) = (matrix(&truth, a), matrix(&truth, b));
            let argmaxes = |m: &ScoreMatrix| -> Vec<Vec<usize>> {
                m.values.iter().map(|row| {
                    let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (0..row.len()).filter(|&i| row[i] == hi).collect()
                }).collect()
            };
            let one = score_combination(&m1, &m2, 1.0).unwrap();
            let zero = score_combination(&m1, &m2, 0.0).unwrap();
            prop_assert_eq!(argmaxes(&one), argmaxes(&m1));
            prop_assert_eq!(argmaxes(&zero), argmaxes(&m2));
        }
    }
}
