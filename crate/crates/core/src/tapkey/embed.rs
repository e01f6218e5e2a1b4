//! Token embedders for the tagger.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::jsonl;
use crate::numeric::softmax;

/// Contextual token vectors plus masked-word prediction.
pub trait EmbeddingBackend {
    fn dim(&self) -> usize;

    /// One vector of length [`dim`](Self::dim) per token.
    fn token_embeddings(&self, sentence: &[String]) -> Vec<DVector<f64>>;

    /// Distribution over the vocabulary for the word at `position` with that
    /// word hidden, most probable first.
    fn masked_prediction(&self, sentence: &[String], position: usize) -> Vec<(String, f64)>;
}

/// The `n` most probable words at a masked position.
pub fn top_predictions<B: EmbeddingBackend + ?Sized>(backend: &B, sentence: &[String], position: usize, n: usize) -> Vec<String> {
    backend.masked_prediction(sentence, position).into_iter().take(n).map(|(w, _)| w).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContextEmbedderConfig {
    pub dim: usize,
    pub window: usize,
    /// Share of the current context in a token's vector; the rest is the
    /// word's corpus-wide context profile.
    pub context_weight: f64,
    /// Sharpness of the masked-prediction softmax over cosine scores.
    pub temperature: f64,
    /// Length of the returned token vectors.
    pub norm: f64,
    pub seed: u64,
}

impl Default for ContextEmbedderConfig {
    fn default() -> Self {
        ContextEmbedderConfig { dim: 64, window: 3, context_weight: 0.4, temperature: 20.0, norm: 5.0, seed: 5 }
    }
}

/// A random-indexing distributional model fitted on raw sentences.
///
/// Every word gets a fixed random index vector. A word's profile is the
/// distance-weighted sum of the index vectors of its neighbours over the
/// corpus, so words used in similar contexts get similar profiles. Masked
/// prediction compares the neighbours of the hidden position against every
/// profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContextEmbedder {
    config: ContextEmbedderConfig,
    words: Vec<String>,
    profiles: Vec<Vec<f64>>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

fn normalized(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v
    }
}

// Stable across toolchains, unlike `DefaultHasher`, so saved embedders keep
// their index vectors.
fn fnv1a(seed: u64, word: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(word.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl ContextEmbedder {
    pub fn fit(sentences: &[Vec<String>], config: ContextEmbedderConfig) -> Self {
        let mut me = ContextEmbedder { config, words: Vec::new(), profiles: Vec::new(), index: HashMap::new() };
        let d = me.config.dim;
        for sent in sentences {
            let lower: Vec<String> = sent.iter().map(|w| w.to_lowercase()).collect();
            for (i, w) in lower.iter().enumerate() {
                let ctx = me.context(&lower, i);
                let id = match me.index.get(w) {
                    Some(&id) => id,
                    None => {
                        me.words.push(w.clone());
                        me.profiles.push(vec![0.0; d]);
                        me.index.insert(w.clone(), me.words.len() - 1);
                        me.words.len() - 1
                    }
                };
                for (p, c) in me.profiles[id].iter_mut().zip(ctx.iter()) {
                    *p += c;
                }
            }
        }
        me
    }

    pub fn vocab_len(&self) -> usize {
        self.words.len()
    }

    fn index_vector(&self, word: &str) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(self.config.seed, word));
        let v = DVector::from_fn(self.config.dim, |_, _| StandardNormal.sample(&mut rng));
        normalized(v)
    }

    /// Distance-weighted neighbour index vectors around `i`, excluding `i`.
    fn context(&self, lower: &[String], i: usize) -> DVector<f64> {
        let mut ctx = DVector::zeros(self.config.dim);
        let lo = i.saturating_sub(self.config.window);
        let hi = (i + self.config.window + 1).min(lower.len());
        for (j, w) in lower.iter().enumerate().take(hi).skip(lo) {
            if j != i {
                ctx += self.index_vector(w) / (j.abs_diff(i) as f64);
            }
        }
        ctx
    }

    fn profile(&self, word: &str) -> DVector<f64> {
        match self.index.get(word) {
            Some(&id) => normalized(DVector::from_column_slice(&self.profiles[id])),
            None => self.index_vector(word),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        jsonl::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut me: ContextEmbedder = jsonl::read_json(path)?;
        me.index = me.words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(me)
    }
}

impl EmbeddingBackend for ContextEmbedder {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn token_embeddings(&self, sentence: &[String]) -> Vec<DVector<f64>> {
        let lower: Vec<String> = sentence.iter().map(|w| w.to_lowercase()).collect();
        let beta = self.config.context_weight;
        (0..lower.len())
            .map(|i| {
                let own = self.profile(&lower[i]);
                let ctx = normalized(self.context(&lower, i));
                normalized(own * (1.0 - beta) + ctx * beta) * self.config.norm
            })
            .collect()
    }

    fn masked_prediction(&self, sentence: &[String], position: usize) -> Vec<(String, f64)> {
        let lower: Vec<String> = sentence.iter().map(|w| w.to_lowercase()).collect();
        let ctx = normalized(self.context(&lower, position));
        let scores: Vec<f64> = self
            .profiles
            .iter()
            .map(|p| {
                let p = DVector::from_column_slice(p);
                let n = p.norm();
                if n > 0.0 {
                    self.config.temperature * ctx.dot(&p) / n
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let probs = if scores.is_empty() { Vec::new() } else { softmax(&scores) };
        let mut out: Vec<(String, f64)> = self.words.iter().cloned().zip(probs).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sents(text: &str) -> Vec<Vec<String>> {
        text.split(" | ").map(|s| s.split(' ').map(str::to_string).collect()).collect()
    }

    #[test]
    fn similar_contexts_give_similar_profiles() {
        let corpus = sents(
            "the army attacked the city | the army bombed the city | the rebels attacked the town \
             | the rebels bombed the town | she married him in june | he married her in may | she wed him in june",
        );
        let e = ContextEmbedder::fit(&corpus, ContextEmbedderConfig::default());
        let cos = |a: &str, b: &str| e.profile(a).dot(&e.profile(b));
        assert!(cos("attacked", "bombed") > cos("attacked", "married"));
        let top = top_predictions(&e, &corpus[0], 2, 5);
        assert!(top.contains(&"attacked".to_string()) || top.contains(&"bombed".to_string()), "{top:?}");
    }

    #[test]
    fn dimensions_and_round_trip() {
        let corpus = sents("a b c | b c d");
        let e = ContextEmbedder::fit(&corpus, ContextEmbedderConfig { dim: 8, ..Default::default() });
        let embs = e.token_embeddings(&corpus[0]);
        assert!(embs.iter().all(|v| v.len() == 8));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb.json");
        e.save(&p).unwrap();
        let back = ContextEmbedder::load(&p).unwrap();
        assert_eq!(back.token_embeddings(&corpus[1]), e.token_embeddings(&corpus[1]));
        let total: f64 = e.masked_prediction(&corpus[0], 1).iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}
