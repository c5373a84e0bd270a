//! Browser demo bindings. Each export takes plain numbers or strings and
//! returns a JSON string; the pure functions underneath are tested natively.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relevance_core::corpus::{tokenize, SegmentedCorpus, Sentence, Token};
use relevance_core::eval::{metrics, score_all};
use relevance_core::synthetic::{TopicSpec, TopicWorld};
use relevance_core::trainer::{sample_positive, train_with};
use relevance_core::vectorize::prompt_vec;
use relevance_core::{cosine, IdfTable, Method, TrainerConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Histogram {
    pub offsets: Vec<i64>,
    pub counts: Vec<u64>,
    pub draws: u64,
}

/// Empirical distribution of positive-neighbour offsets for an anchor at
/// `position` in a document of `doc_len` sentences. The sampler redraws
/// offsets that are 0 or leave the document, so every draw lands.
pub fn offset_histogram(
    stddev: f64,
    doc_len: usize,
    position: usize,
    draws: u64,
    seed: u64,
) -> Result<Histogram, String> {
    if !(stddev > 0.0 && stddev.is_finite()) {
        return Err("stddev must be positive".into());
    }
    if doc_len < 2 || position >= doc_len {
        return Err("need at least 2 sentences and a position inside the document".into());
    }
    let word = Token::new("x").unwrap();
    let corpus = SegmentedCorpus::from_documents(vec![vec![vec![word]; doc_len]]);
    let anchor = corpus.sentence(position);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets: Vec<i64> = (-(position as i64)..(doc_len - position) as i64).collect();
    let mut counts = vec![0u64; offsets.len()];
    for _ in 0..draws {
        let s = sample_positive(&corpus, anchor, stddev, &mut rng).expect("document has two sentences");
        counts[s.sent_index] += 1;
    }
    Ok(Histogram { offsets, counts, draws })
}

#[derive(Debug, Serialize)]
pub struct WordWeight {
    pub word: String,
    pub filler: bool,
    pub weight: f64,
}

#[derive(Debug, Serialize)]
pub struct TrainingRun {
    pub epoch_costs: Vec<f64>,
    pub filler_mean: f64,
    pub topic_mean: f64,
    pub sum_accuracy: f64,
    pub weighted_accuracy: f64,
    pub weights: Vec<WordWeight>,
}

/// Trains on a two-topic synthetic corpus and reports the cost curve, learned
/// weights and held-out prompt identification accuracy.
pub fn train_synthetic(epochs: usize, learning_rate: f64, filler_prob: f64, seed: u64) -> Result<TrainingRun, String> {
    if !(0.0..1.0).contains(&filler_prob) {
        return Err("filler probability must be in [0, 1)".into());
    }
    let mut world = TopicWorld::generate(TopicSpec {
        filler_prob,
        seed,
        ..TopicSpec::default()
    });
    let config = TrainerConfig {
        learning_rate,
        epochs,
        seed,
        ..TrainerConfig::default()
    };
    let (weights, report) = train_with(&world.corpus, &world.emb, config, |_, _| Ok(())).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for (word, weight) in weights.iter() {
        rows.push(WordWeight {
            word: word.to_string(),
            filler: world.filler.iter().any(|f| f == word),
            weight,
        });
    }
    let mean = |filler: bool| {
        let v: Vec<f64> = rows.iter().filter(|r| r.filler == filler).map(|r| r.weight).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let held_out = world.held_out(1, 200, 4);
    let emb = &world.emb;
    let accuracy = |m: Method<'_>| -> Result<f64, String> {
        let matrix = score_all(&held_out, &m).map_err(|e| e.to_string())?;
        Ok(metrics(&matrix, m.name()).map_err(|e| e.to_string())?.accuracy)
    };
    Ok(TrainingRun {
        epoch_costs: report.epoch_costs.clone(),
        filler_mean: mean(true),
        topic_mean: mean(false),
        sum_accuracy: accuracy(Method::Sum { emb })?,
        weighted_accuracy: accuracy(Method::Weighted { emb, weights: &weights })?,
        weights: rows,
    })
}

#[derive(Debug, Serialize)]
pub struct PromptScore {
    pub prompt: String,
    pub score: f64,
}

/// TF-IDF cosine of `sentence` against each `id: text` line of `prompts`,
/// best first. IDF is counted over the prompt sentences plus the sentences
/// of `background`; with only a handful of sentences most IDFs are near zero.
pub fn tfidf_scores(prompts: &str, background: &str, sentence: &str) -> Result<Vec<PromptScore>, String> {
    let mut parsed = Vec::new();
    for (n, line) in prompts.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let (id, text) = line
            .split_once(':')
            .ok_or(format!("line {}: expected `id: text`", n + 1))?;
        let sentences: Vec<Sentence> = relevance_core::corpus::split_sentences(text)
            .into_iter()
            .map(Sentence::from_text)
            .filter(|s| !s.is_empty())
            .collect();
        if sentences.is_empty() {
            return Err(format!("line {}: prompt `{}` has no text", n + 1, id.trim()));
        }
        parsed.push((id.trim().to_string(), sentences));
    }
    if parsed.is_empty() {
        return Err("no prompts given".into());
    }
    let mut docs: Vec<Vec<Vec<Token>>> = parsed
        .iter()
        .map(|(_, s)| s.iter().map(|s| s.tokens.clone()).collect())
        .collect();
    docs.push(
        relevance_core::corpus::split_sentences(background)
            .into_iter()
            .map(tokenize)
            .collect(),
    );
    let idf = IdfTable::build(&SegmentedCorpus::from_documents(docs)).map_err(|e| e.to_string())?;
    let method = Method::Tfidf { idf: &idf };
    let target = method.vectorize(&Sentence::new(tokenize(sentence), 0, 0));
    let mut scores = Vec::new();
    for (id, sentences) in &parsed {
        let p = prompt_vec(sentences, &method).map_err(|e| e.to_string())?;
        scores.push(PromptScore {
            prompt: id.clone(),
            score: cosine(&target, &p).map_err(|e| e.to_string())?,
        });
    }
    scores.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(scores)
}

fn to_js<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = offsetHistogram)]
pub fn offset_histogram_js(
    stddev: f64,
    doc_len: usize,
    position: usize,
    draws: u32,
    seed: u32,
) -> Result<String, JsError> {
    to_js(offset_histogram(stddev, doc_len, position, draws as u64, seed as u64))
}

#[wasm_bindgen(js_name = trainSynthetic)]
pub fn train_synthetic_js(epochs: usize, learning_rate: f64, filler_prob: f64, seed: u32) -> Result<String, JsError> {
    to_js(train_synthetic(epochs, learning_rate, filler_prob, seed as u64))
}

#[wasm_bindgen(js_name = tfidfScores)]
pub fn tfidf_scores_js(prompts: &str, background: &str, sentence: &str) -> Result<String, JsError> {
    to_js(tfidf_scores(prompts, background, sentence))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_mass_near_anchor() {
        let h = offset_histogram(2.5, 20, 10, 20_000, 1).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 20_000);
        let at = |d: i64| h.counts[h.offsets.iter().position(|&o| o == d).unwrap()];
        assert_eq!(at(0), 0);
        assert!(at(1) > at(4) && at(-1) > at(-4));
    }

    #[test]
    fn histogram_rejects_bad_input() {
        assert!(offset_histogram(0.0, 10, 0, 10, 0).is_err());
        assert!(offset_histogram(2.5, 1, 0, 10, 0).is_err());
        assert!(offset_histogram(2.5, 5, 5, 10, 0).is_err());
    }

    #[test]
    fn synthetic_training_separates_fillers() {
        let run = train_synthetic(5, 0.1, 0.5, 0).unwrap();
        assert_eq!(run.epoch_costs.len(), 5);
        assert!(run.filler_mean < run.topic_mean);
        assert_eq!(run.weights.len(), 70);
        assert!(serde_json::to_string(&run).unwrap().contains("epoch_costs"));
    }

    #[test]
    fn tfidf_ranks_matching_prompt_first() {
        let prompts = "crime: Crime does not pay.\ntv: Television is the opium of the masses.\n";
        let background = "The weather was fine. We went home. Nobody called.";
        let scores = tfidf_scores(prompts, background, "Does crime pay?").unwrap();
        assert_eq!(scores[0].prompt, "crime");
        assert!(scores[0].score > 0.0);
        assert_eq!(scores[1].score, 0.0);
        // Two sentences alone leave every IDF at or below zero.
        let bare = tfidf_scores(prompts, "", "Does crime pay?").unwrap();
        assert!(bare.iter().all(|s| s.score <= 0.0));
        assert!(tfidf_scores("no colon here", "", "x").is_err());
        assert!(tfidf_scores("", "", "x").is_err());
    }
}
