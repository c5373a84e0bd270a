//! Seeded synthetic data: multi-topic corpora over random unit embeddings
//! and labeled prompt datasets. Used by the acceptance suite and the demo.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::{LabeledDataset, Sample, SegmentedCorpus, Sentence, Token};
use crate::embeddings::EmbeddingTable;

#[derive(Debug, Clone, PartialEq)]
pub struct TopicSpec {
    pub n_topics: usize,
    pub topic_vocab: usize,
    pub filler_vocab: usize,
    /// Probability that any token is a filler word rather than a topic word.
    pub filler_prob: f64,
    pub n_documents: usize,
    pub sentences_per_document: usize,
    pub sentence_len: usize,
    pub dim: usize,
    pub seed: u64,
}

impl Default for TopicSpec {
    fn default() -> Self {
        TopicSpec {
            n_topics: 2,
            topic_vocab: 30,
            filler_vocab: 10,
            filler_prob: 0.5,
            n_documents: 200,
            sentences_per_document: 10,
            sentence_len: 8,
            dim: 25,
            seed: 0,
        }
    }
}

/// Generated vocabulary, embeddings and a training corpus in which every
/// document is about a single topic.
#[derive(Debug, Clone)]
pub struct TopicWorld {
    pub spec: TopicSpec,
    pub topics: Vec<Vec<String>>,
    pub filler: Vec<String>,
    pub emb: EmbeddingTable,
    pub corpus: SegmentedCorpus,
    pub document_topics: Vec<usize>,
    rng: ChaCha8Rng,
}

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

impl TopicWorld {
    pub fn generate(spec: TopicSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let topics: Vec<Vec<String>> = (0..spec.n_topics)
            .map(|t| (0..spec.topic_vocab).map(|i| format!("t{t}w{i}")).collect())
            .collect();
        let filler: Vec<String> = (0..spec.filler_vocab).map(|i| format!("f{i}")).collect();
        let entries: Vec<(String, Vec<f64>)> = topics
            .iter()
            .flatten()
            .chain(&filler)
            .map(|w| (w.clone(), random_unit_vector(spec.dim, &mut rng)))
            .collect();
        let emb = EmbeddingTable::from_entries(spec.dim, entries).expect("consistent dims");
        let mut world = TopicWorld {
            topics,
            filler,
            emb,
            corpus: SegmentedCorpus::default(),
            document_topics: Vec::new(),
            rng,
            spec,
        };
        let mut docs = Vec::with_capacity(world.spec.n_documents);
        for _ in 0..world.spec.n_documents {
            let topic = world.rng.gen_range(0..world.spec.n_topics);
            world.document_topics.push(topic);
            let doc = (0..world.spec.sentences_per_document)
                .map(|_| world.sentence_tokens(topic, world.spec.sentence_len))
                .collect();
            docs.push(doc);
        }
        world.corpus = SegmentedCorpus::from_documents(docs);
        world
    }

    /// Fresh tokens for one sentence about `topic`.
    pub fn sentence_tokens(&mut self, topic: usize, len: usize) -> Vec<Token> {
        (0..len)
            .map(|_| {
                let pool = if self.rng.gen_bool(self.spec.filler_prob) {
                    &self.filler
                } else {
                    &self.topics[topic]
                };
                Token::new(pool.choose(&mut self.rng).unwrap().as_str()).unwrap()
            })
            .collect()
    }

    /// A held-out prompt identification set: one prompt per topic made of
    /// `prompt_sentences` generated sentences, and `per_topic` learner
    /// sentences of length `sentence_len` for each topic.
    pub fn held_out(&mut self, prompt_sentences: usize, per_topic: usize, sentence_len: usize) -> LabeledDataset {
        let mut prompts = BTreeMap::new();
        let mut samples = Vec::new();
        for topic in 0..self.spec.n_topics {
            let id = format!("topic{topic}");
            let sentences = (0..prompt_sentences)
                .map(|i| Sentence::new(self.sentence_tokens(topic, self.spec.sentence_len), 0, i))
                .collect();
            prompts.insert(id.clone(), sentences);
            for e in 0..per_topic {
                let tokens = self.sentence_tokens(topic, sentence_len);
                let sent_index = samples.len();
                samples.push(Sample {
                    prompt_id: id.clone(),
                    essay_id: format!("{id}-e{e}"),
                    sentence: Sentence::new(tokens, 0, sent_index),
                });
            }
        }
        LabeledDataset { prompts, samples }
    }
}

/// `n_prompts` prompts with `per_prompt` samples each; texts are distinct
/// placeholder words. Suitable for score-only baselines.
pub fn placeholder_dataset(n_prompts: usize, per_prompt: usize) -> LabeledDataset {
    let mut prompts = BTreeMap::new();
    let mut samples = Vec::new();
    for p in 0..n_prompts {
        let id = format!("p{p:03}");
        let word = Token::new(format!("w{p}")).unwrap();
        prompts.insert(id.clone(), vec![Sentence::new(vec![word.clone()], 0, 0)]);
        for e in 0..per_prompt {
            let sent_index = samples.len();
            samples.push(Sample {
                prompt_id: id.clone(),
                essay_id: format!("e{e}"),
                sentence: Sentence::new(vec![word.clone()], 0, sent_index),
            });
        }
    }
    LabeledDataset { prompts, samples }
}
