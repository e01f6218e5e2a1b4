//! Deterministic backends for tests and demonstrations.

use crate::numeric::log_softmax;

use super::backend::GeneratorBackend;
use super::vocab::{TokenId, Vocab};

/// Predicts the uniform distribution everywhere.
#[derive(Debug, Clone)]
pub struct UniformBackend {
    pub vocab: Vocab,
}

impl GeneratorBackend for UniformBackend {
    type Context = ();

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn encode(&self, _input: &[TokenId]) {}

    fn next_token_logprobs(&self, _ctx: &(), _prefix: &[TokenId]) -> Vec<f64> {
        vec![-(self.vocab.len() as f64).ln(); self.vocab.len()]
    }
}

/// Logits computed by a closure of `(input, prefix)`.
pub struct FnBackend<F> {
    vocab: Vocab,
    logits: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&[TokenId], &[TokenId]) -> Vec<f64>,
{
    pub fn new(vocab: Vocab, logits: F) -> Self {
        FnBackend { vocab, logits }
    }
}

impl<F> GeneratorBackend for FnBackend<F>
where
    F: Fn(&[TokenId], &[TokenId]) -> Vec<f64>,
{
    type Context = Vec<TokenId>;

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn encode(&self, input: &[TokenId]) -> Vec<TokenId> {
        input.to_vec()
    }

    fn next_token_logprobs(&self, ctx: &Vec<TokenId>, prefix: &[TokenId]) -> Vec<f64> {
        let logits = (self.logits)(ctx, prefix);
        assert_eq!(logits.len(), self.vocab.len(), "closure returned wrong vocabulary size");
        log_softmax(&logits)
    }
}

/// Ignores the input and follows a weighted set of scripted word sequences.
///
/// At a given prefix the next-token distribution is the weight of each
/// scripted continuation, mixed with `floor` probability mass spread over the
/// whole vocabulary. A prefix no script extends gets the uniform distribution.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    vocab: Vocab,
    floor: f64,
    scripts: Vec<(Vec<TokenId>, f64)>,
}

impl ScriptedBackend {
    pub fn new(vocab: Vocab, floor: f64) -> Self {
        assert!((0.0..1.0).contains(&floor) && floor > 0.0, "floor must be in (0, 1)");
        ScriptedBackend { vocab, floor, scripts: Vec::new() }
    }

    /// Adds a script; words missing from the vocabulary are inserted.
    pub fn script(&mut self, words: &str, weight: f64) -> &mut Self {
        let ids = words.split_whitespace().map(|w| self.vocab.insert(w)).collect();
        self.scripts.push((ids, weight));
        self
    }

    pub fn vocab_mut(&mut self) -> &mut Vocab {
        &mut self.vocab
    }
}

impl GeneratorBackend for ScriptedBackend {
    type Context = ();

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn encode(&self, _input: &[TokenId]) {}

    fn next_token_logprobs(&self, _ctx: &(), prefix: &[TokenId]) -> Vec<f64> {
        let v = self.vocab.len();
        let mut mass = vec![0.0; v];
        let mut total = 0.0;
        for (seq, w) in &self.scripts {
            if seq.len() > prefix.len() && seq.starts_with(prefix) {
                mass[seq[prefix.len()] as usize] += w;
                total += w;
            }
        }
        if total == 0.0 {
            return vec![-(v as f64).ln(); v];
        }
        mass.iter().map(|m| ((1.0 - self.floor) * m / total + self.floor / v as f64).ln()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arggen::backend::is_normalized;

    #[test]
    fn scripted_follows_weights() {
        let mut b = ScriptedBackend::new(Vocab::build(["x", "y"]), 1e-3);
        b.script("x y </s>", 3.0).script("y </s>", 1.0);
        let lp = b.next_token_logprobs(&(), &[]);
        assert!(is_normalized(&lp, 1e-9));
        let x = b.vocab().id("x").unwrap() as usize;
        let y = b.vocab().id("y").unwrap() as usize;
        assert!((lp[x].exp() - (0.999 * 0.75 + 1e-3 / 8.0)).abs() < 1e-12);
        assert!(lp[x] > lp[y]);
    }

    #[test]
    fn fn_backend_normalizes() {
        let b = FnBackend::new(Vocab::reserved_only(), |_: &[TokenId], p: &[TokenId]| vec![p.len() as f64, 1.0, 2.0, 0.0, -1.0]);
        assert!(is_normalized(&b.next_token_logprobs(&vec![], &[0, 0]), 1e-12));
    }
}
