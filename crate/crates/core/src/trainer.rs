//! Unsupervised learning of per-word weights over frozen embeddings.
//!
//! For an anchor sentence `u` a nearby sentence `v` is drawn from the same
//! document and a random sentence `z` from the whole corpus. Each is mapped
//! to `sum_w g_w * e_w`, normalized to unit length, and the hinge
//! `max(-u.v + u.z, 0)` is minimized by plain gradient descent on the
//! scalars `g_w`. The embeddings never change.
//!
//! All randomness comes from a single ChaCha8 stream (`rand_chacha`)
//! seeded with [`TrainerConfig::seed`]; the Normal draws use `rand_distr`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{SegmentedCorpus, Sentence};
use crate::embeddings::{EmbeddingTable, WeightTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    /// Standard deviation of the Normal used to pick the positive sentence's
    /// offset from the anchor.
    pub neighbor_stddev: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            learning_rate: 0.1,
            neighbor_stddev: 2.5,
            epochs: 5,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.neighbor_stddev > 0.0 && self.neighbor_stddev.is_finite()) {
            return Err(Error::Config("neighbor stddev must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean triple cost of each epoch, over the triples actually scored.
    pub epoch_costs: Vec<f64>,
    pub triples_processed: usize,
    /// Anchors from single-sentence documents, triples with an all-OOV
    /// sentence, and triples with a zero-norm weighted vector.
    pub triples_skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_cost: f64,
    pub processed: usize,
    pub skipped: usize,
}

/// In-vocabulary content of a sentence: `(row, count)` sorted by row.
type Bag = Vec<(usize, f64)>;

fn bag_of(sentence: &Sentence, emb: &EmbeddingTable) -> Bag {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for t in &sentence.tokens {
        if let Some(row) = emb.resolve(t.as_str()) {
            *counts.entry(row).or_default() += 1.0;
        }
    }
    counts.into_iter().collect()
}

fn weighted_vector(bag: &Bag, emb: &EmbeddingTable, weight: &impl Fn(usize) -> f64) -> Vec<f64> {
    let mut acc = vec![0.0; emb.dim()];
    for &(row, count) in bag {
        let g = count * weight(row);
        for (a, x) in acc.iter_mut().zip(emb.row(row)) {
            *a += g * x;
        }
    }
    acc
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit vector and the original norm.
fn normalize(v: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let norm = dot(&v, &v).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Degenerate);
    }
    Ok((v.into_iter().map(|x| x / norm).collect(), norm))
}

/// Gradient of `a . x/|x|` with respect to `x`, i.e. `(a - x^ (x^.a)) / |x|`.
fn through_normalization(unit: &[f64], norm: f64, a: &[f64]) -> Vec<f64> {
    let along = dot(unit, a);
    a.iter().zip(unit).map(|(ai, ui)| (ai - ui * along) / norm).collect()
}

/// Cost of one triple and, when requested and the hinge is active, the
/// partial derivatives keyed by embedding row.
fn cost_and_gradient(
    u: &Bag,
    v: &Bag,
    z: &Bag,
    emb: &EmbeddingTable,
    weight: &impl Fn(usize) -> f64,
    want_gradient: bool,
) -> Result<(f64, BTreeMap<usize, f64>)> {
    let (uh, un) = normalize(weighted_vector(u, emb, weight))?;
    let (vh, vn) = normalize(weighted_vector(v, emb, weight))?;
    let (zh, zn) = normalize(weighted_vector(z, emb, weight))?;
    let margin = -dot(&uh, &vh) + dot(&uh, &zh);
    let mut grad = BTreeMap::new();
    if margin <= 0.0 {
        return Ok((0.0, grad));
    }
    if want_gradient {
        let z_minus_v: Vec<f64> = zh.iter().zip(&vh).map(|(a, b)| a - b).collect();
        let neg_u: Vec<f64> = uh.iter().map(|x| -x).collect();
        let d_u = through_normalization(&uh, un, &z_minus_v);
        let d_v = through_normalization(&vh, vn, &neg_u);
        let d_z = through_normalization(&zh, zn, &uh);
        for (bag, d) in [(u, &d_u), (v, &d_v), (z, &d_z)] {
            for &(row, count) in bag {
                *grad.entry(row).or_default() += count * dot(d, emb.row(row));
            }
        }
    }
    Ok((margin, grad))
}

fn table_weight<'a>(emb: &'a EmbeddingTable, weights: &'a WeightTable) -> impl Fn(usize) -> f64 + 'a {
    move |row| weights.get(emb.word(row)).unwrap_or(1.0)
}

/// Hinge cost `max(-u^.v^ + u^.z^, 0)` over unit-normalized weighted sums.
///
/// Fails with [`Error::Degenerate`] when any of the three weighted vectors
/// has zero norm (for instance an all-OOV sentence).
pub fn triple_cost(
    u: &Sentence,
    v: &Sentence,
    z: &Sentence,
    emb: &EmbeddingTable,
    weights: &WeightTable,
) -> Result<f64> {
    let w = table_weight(emb, weights);
    let (u, v, z) = (bag_of(u, emb), bag_of(v, emb), bag_of(z, emb));
    cost_and_gradient(&u, &v, &z, emb, &w, false).map(|(c, _)| c)
}

/// Exact partial derivatives of [`triple_cost`] with respect to the weight
/// of every word occurring in the triple. All partials are zero when the
/// hinge is inactive.
pub fn triple_gradient(
    u: &Sentence,
    v: &Sentence,
    z: &Sentence,
    emb: &EmbeddingTable,
    weights: &WeightTable,
) -> Result<BTreeMap<String, f64>> {
    let w = table_weight(emb, weights);
    let (u, v, z) = (bag_of(u, emb), bag_of(v, emb), bag_of(z, emb));
    let (_, grad) = cost_and_gradient(&u, &v, &z, emb, &w, true)?;
    let mut out: BTreeMap<String, f64> = [&u, &v, &z]
        .into_iter()
        .flatten()
        .map(|&(row, _)| (emb.word(row).to_string(), 0.0))
        .collect();
    for (row, g) in grad {
        out.insert(emb.word(row).to_string(), g);
    }
    Ok(out)
}

/// Draws a sentence near `u` in its own document: a Normal offset rounded to
/// the nearest integer, redrawn while it is 0 or leaves the document.
/// Returns `None` for single-sentence documents.
pub fn sample_positive<'c, R: Rng + ?Sized>(
    corpus: &'c SegmentedCorpus,
    u: &Sentence,
    stddev: f64,
    rng: &mut R,
) -> Option<&'c Sentence> {
    let doc = corpus.document(u.doc_index);
    if doc.len() < 2 {
        return None;
    }
    let normal = Normal::new(0.0, stddev).expect("positive stddev");
    let offset = sample_offset(&normal, u.sent_index, doc.len(), rng);
    Some(&doc[(u.sent_index as i64 + offset) as usize])
}

fn sample_offset<R: Rng + ?Sized>(normal: &Normal<f64>, pos: usize, len: usize, rng: &mut R) -> i64 {
    loop {
        let offset = normal.sample(rng).round() as i64;
        let target = pos as i64 + offset;
        if offset != 0 && (0..len as i64).contains(&target) {
            return offset;
        }
    }
}

/// Draws uniformly from every corpus sentence other than `u`, including
/// sentences of `u`'s own document. `None` when the corpus has fewer than two
/// sentences.
pub fn sample_negative<'c, R: Rng + ?Sized>(
    corpus: &'c SegmentedCorpus,
    u: &Sentence,
    rng: &mut R,
) -> Option<&'c Sentence> {
    let n = corpus.sentence_count();
    if n < 2 {
        return None;
    }
    let own = corpus.global_index(u);
    loop {
        let g = rng.gen_range(0..n);
        if g != own {
            return Some(corpus.sentence(g));
        }
    }
}

/// Sequential trainer state. Weights are kept aligned with the embedding
/// rows and start at 1.
pub struct Trainer<'a> {
    corpus: &'a SegmentedCorpus,
    emb: &'a EmbeddingTable,
    config: TrainerConfig,
    weights: Vec<f64>,
    bags: Vec<Bag>,
    rng: ChaCha8Rng,
    normal: Normal<f64>,
    epochs_run: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(corpus: &'a SegmentedCorpus, emb: &'a EmbeddingTable, config: TrainerConfig) -> Result<Self> {
        config.validate()?;
        if corpus.sentence_count() == 0 {
            return Err(Error::EmptyCorpus);
        }
        if emb.is_empty() {
            return Err(Error::Config("embedding table is empty".into()));
        }
        let bags: Vec<Bag> = corpus.sentences().map(|s| bag_of(s, emb)).collect();
        let trainable = corpus.documents().iter().any(|doc| {
            doc.iter()
                .filter(|s| !bags[corpus.global_index(s)].is_empty())
                .nth(1)
                .is_some()
        });
        if !trainable {
            return Err(Error::NoTrainableTriple);
        }
        Ok(Trainer {
            corpus,
            emb,
            weights: vec![1.0; emb.len()],
            bags,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            normal: Normal::new(0.0, config.neighbor_stddev).expect("validated stddev"),
            config,
            epochs_run: 0,
        })
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    /// Current weights, one per embedding row.
    pub fn raw_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights(&self) -> WeightTable {
        WeightTable::from_aligned(self.emb, self.weights.clone())
    }

    pub fn epochs_run(&self) -> usize {
        self.epochs_run
    }

    /// Scores the triple given by global sentence indices and, if the hinge
    /// is active, takes one gradient step on the weights of its words.
    pub fn apply_triple(&mut self, u: usize, v: usize, z: usize) -> Result<f64> {
        let weights = &self.weights;
        let (cost, grad) = cost_and_gradient(
            &self.bags[u],
            &self.bags[v],
            &self.bags[z],
            self.emb,
            &|row| weights[row],
            true,
        )?;
        for (row, g) in grad {
            self.weights[row] -= self.config.learning_rate * g;
        }
        Ok(cost)
    }

    /// One pass over the corpus with anchors in a freshly shuffled order.
    pub fn run_epoch(&mut self) -> EpochStats {
        let corpus = self.corpus;
        let mut order: Vec<usize> = (0..corpus.sentence_count()).collect();
        order.shuffle(&mut self.rng);
        let (mut total, mut processed, mut skipped) = (0.0, 0, 0);
        for g in order {
            let u = corpus.sentence(g);
            let doc_len = corpus.document(u.doc_index).len();
            if doc_len < 2 || self.bags[g].is_empty() {
                skipped += 1;
                continue;
            }
            let offset = sample_offset(&self.normal, u.sent_index, doc_len, &mut self.rng);
            let v = g.wrapping_add_signed(offset as isize);
            let z = loop {
                let z = self.rng.gen_range(0..corpus.sentence_count());
                if z != g {
                    break z;
                }
            };
            if self.bags[v].is_empty() || self.bags[z].is_empty() {
                skipped += 1;
                continue;
            }
            match self.apply_triple(g, v, z) {
                Ok(cost) => {
                    total += cost;
                    processed += 1;
                }
                Err(_) => skipped += 1,
            }
        }
        self.epochs_run += 1;
        EpochStats {
            epoch: self.epochs_run,
            mean_cost: if processed > 0 { total / processed as f64 } else { 0.0 },
            processed,
            skipped,
        }
    }
}

/// Runs `config.epochs` epochs, calling `on_epoch` after each with the
/// epoch's statistics and the current weights.
pub fn train_with<F>(
    corpus: &SegmentedCorpus,
    emb: &EmbeddingTable,
    config: TrainerConfig,
    mut on_epoch: F,
) -> Result<(WeightTable, TrainReport)>
where
    F: FnMut(&EpochStats, &WeightTable) -> Result<()>,
{
    let epochs = config.epochs;
    let mut trainer = Trainer::new(corpus, emb, config)?;
    let mut report = TrainReport::default();
    for _ in 0..epochs {
        let stats = trainer.run_epoch();
        report.epoch_costs.push(stats.mean_cost);
        report.triples_processed += stats.processed;
        report.triples_skipped += stats.skipped;
        on_epoch(&stats, &trainer.weights())?;
    }
    if report.triples_processed == 0 {
        return Err(Error::NoTrainableTriple);
    }
    Ok((trainer.weights(), report))
}

pub fn train(
    corpus: &SegmentedCorpus,
    emb: &EmbeddingTable,
    config: TrainerConfig,
) -> Result<(WeightTable, TrainReport)> {
    train_with(corpus, emb, config, |_, _| Ok(()))
}
