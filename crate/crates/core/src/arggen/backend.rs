use crate::numeric::logsumexp;

use super::vocab::{TokenId, Vocab};

/// An encoder-decoder language model the generator can drive.
pub trait GeneratorBackend {
    /// Encoder output for one input sequence.
    type Context;

    fn vocab(&self) -> &Vocab;

    fn encode(&self, input: &[TokenId]) -> Self::Context;

    /// Normalized log-probabilities over the full vocabulary for the token
    /// following `prefix`.
    fn next_token_logprobs(&self, ctx: &Self::Context, prefix: &[TokenId]) -> Vec<f64>;

    /// `log p(continuation | prefix, input)`, token by token.
    fn score_continuation(&self, ctx: &Self::Context, prefix: &[TokenId], continuation: &[TokenId]) -> f64 {
        let mut seq = prefix.to_vec();
        let mut total = 0.0;
        for &tok in continuation {
            total += self.next_token_logprobs(ctx, &seq)[tok as usize];
            seq.push(tok);
        }
        total
    }

    fn score_sequence(&self, input: &[TokenId], output: &[TokenId]) -> f64 {
        let ctx = self.encode(input);
        self.score_continuation(&ctx, &[], output)
    }
}

/// A backend whose parameters live in one flat vector and whose sequence
/// negative log-likelihood has an analytic gradient.
pub trait TrainableBackend: GeneratorBackend {
    fn params(&self) -> &[f64];

    fn params_mut(&mut self) -> &mut [f64];

    /// Summed `-log p(target | input)` over every target token; the gradient is
    /// added into `grad`.
    fn nll_and_grad(&self, input: &[TokenId], target: &[TokenId], grad: &mut [f64]) -> f64;
}

/// Checks that a log-probability vector sums to one.
pub fn is_normalized(logprobs: &[f64], tol: f64) -> bool {
    logsumexp(logprobs).abs() <= tol
}
