use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::logsumexp;

use super::backend::GeneratorBackend;
use super::vocab::{TokenId, Vocab, EOS_ID};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    pub beam_width: usize,
    pub max_output_len: usize,
    pub rerank: bool,
    pub copy_restrict: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig { beam_width: 4, max_output_len: 64, rerank: true, copy_restrict: true }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 {
            return Err(Error::Config("beam_width must be at least 1".into()));
        }
        Ok(())
    }
}

/// One decoded output. `tokens` excludes the end-of-sequence symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub tokens: Vec<TokenId>,
    pub gen_logprob: f64,
    pub rerank_score: Option<f64>,
    /// Hit `max_output_len` without emitting end-of-sequence.
    pub truncated: bool,
}

/// Membership vector over the vocabulary: the input's token ids plus the
/// reserved generation symbols.
pub fn copy_mask(vocab: &Vocab, input: &[TokenId]) -> Vec<bool> {
    let mut allowed = vec![false; vocab.len()];
    for &id in input.iter().chain(&vocab.reserved_generation_ids()) {
        allowed[id as usize] = true;
    }
    allowed
}

/// Renormalizes `logprobs` over the allowed tokens.
pub fn restrict(logprobs: &[f64], allowed: &[bool]) -> Result<Vec<f64>> {
    let masked: Vec<f64> = logprobs.iter().zip(allowed).map(|(&lp, &ok)| if ok { lp } else { f64::NEG_INFINITY }).collect();
    let z = logsumexp(&masked);
    if !z.is_finite() {
        return Err(Error::Contract("every token is masked out".into()));
    }
    Ok(masked.into_iter().map(|x| x - z).collect())
}

/// Next-token distribution after applying the optional copy mask.
pub fn constrained_step<B: GeneratorBackend>(
    backend: &B,
    ctx: &B::Context,
    prefix: &[TokenId],
    allowed: Option<&[bool]>,
) -> Result<Vec<f64>> {
    let lp = backend.next_token_logprobs(ctx, prefix);
    match allowed {
        Some(mask) => restrict(&lp, mask),
        None => Ok(lp),
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

pub fn greedy_decode<B: GeneratorBackend>(backend: &B, input: &[TokenId], copy_restrict: bool, max_output_len: usize) -> Result<Candidate> {
    let ctx = backend.encode(input);
    let mask = copy_restrict.then(|| copy_mask(backend.vocab(), input));
    let mut tokens = Vec::new();
    let mut total = 0.0;
    while tokens.len() < max_output_len {
        let lp = constrained_step(backend, &ctx, &tokens, mask.as_deref())?;
        let next = argmax(&lp);
        total += lp[next];
        if next as TokenId == EOS_ID {
            return Ok(Candidate { tokens, gen_logprob: total, rerank_score: None, truncated: false });
        }
        tokens.push(next as TokenId);
    }
    Ok(Candidate { tokens, gen_logprob: total, rerank_score: None, truncated: true })
}

/// Length-unnormalized beam search, best first.
///
/// At each step expansions are ranked by total score, ties broken by parent
/// beam then token id. An end-of-sequence expansion finishes a hypothesis only
/// if it ranks within the top `beam_width`; the best `beam_width` other
/// expansions stay live. Since every step adds a non-positive log-probability,
/// search stops once no live beam beats the worst of `beam_width` finished
/// ones. With `beam_width == 1` this is exactly greedy decoding.
pub fn beam_search<B: GeneratorBackend>(backend: &B, input: &[TokenId], config: &DecodeConfig) -> Result<Vec<Candidate>> {
    config.validate()?;
    let k = config.beam_width;
    let ctx = backend.encode(input);
    let mask = config.copy_restrict.then(|| copy_mask(backend.vocab(), input));
    let mut live: Vec<(Vec<TokenId>, f64)> = vec![(Vec::new(), 0.0)];
    let mut finished: Vec<Candidate> = Vec::new();

    for _ in 0..config.max_output_len {
        let mut expansions: Vec<(f64, usize, TokenId)> = Vec::new();
        for (b, (prefix, score)) in live.iter().enumerate() {
            let lp = constrained_step(backend, &ctx, prefix, mask.as_deref())?;
            for (tok, &l) in lp.iter().enumerate() {
                if l.is_finite() {
                    expansions.push((score + l, b, tok as TokenId));
                }
            }
        }
        expansions.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

        let mut next_live = Vec::with_capacity(k);
        for (rank, &(score, b, tok)) in expansions.iter().enumerate() {
            if tok == EOS_ID {
                if rank < k {
                    finished.push(Candidate { tokens: live[b].0.clone(), gen_logprob: score, rerank_score: None, truncated: false });
                }
            } else if next_live.len() < k {
                let mut seq = live[b].0.clone();
                seq.push(tok);
                next_live.push((seq, score));
            }
            if next_live.len() == k && rank + 1 >= k {
                break;
            }
        }
        live = next_live;
        sort_best_first(&mut finished);
        finished.truncate(k);
        if live.is_empty() {
            break;
        }
        if finished.len() == k && live[0].1 <= finished[k - 1].gen_logprob {
            live.clear();
            break;
        }
    }
    for (tokens, score) in live {
        if finished.len() >= k {
            break;
        }
        finished.push(Candidate { tokens, gen_logprob: score, rerank_score: None, truncated: true });
    }
    sort_best_first(&mut finished);
    Ok(finished)
}

fn sort_best_first(cands: &mut [Candidate]) {
    // Stable, so equal scores keep discovery order.
    cands.sort_by(|a, b| b.gen_logprob.total_cmp(&a.gen_logprob));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arggen::mock::{FnBackend, UniformBackend};
    use proptest::prelude::*;

    #[test]
    fn uniform_restricted_to_four() {
        let vocab = Vocab::build(["a", "b", "c", "d", "e"]);
        assert_eq!(vocab.len(), 11);
        let b = UniformBackend { vocab: vocab.clone() };
        let mut allowed = vec![false; 11];
        for i in [1, 6, 7, 8] {
            allowed[i] = true;
        }
        let lp = constrained_step(&b, &(), &[], Some(&allowed)).unwrap();
        for (i, &x) in lp.iter().enumerate() {
            if allowed[i] {
                assert!((x.exp() - 0.25).abs() < 1e-12);
            } else {
                assert_eq!(x, f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn hand_computed_restriction() {
        let logits = [1.0, 2.0, 0.5, 3.0, -1.0];
        let lp = crate::numeric::log_softmax(&logits);
        let out = restrict(&lp, &[true, true, false, false, true]).unwrap();
        let z = 1f64.exp() + 2f64.exp() + (-1f64).exp();
        assert!((out[0].exp() - 1f64.exp() / z).abs() < 1e-12);
        assert!((out[1].exp() - 2f64.exp() / z).abs() < 1e-12);
        assert!((out[4].exp() - (-1f64).exp() / z).abs() < 1e-12);
        assert_eq!(argmax(&out), 1);
        assert!(restrict(&lp, &[false; 5]).is_err());
    }

    #[test]
    fn copy_mask_contents() {
        let v = Vocab::build(["a", "b", "c", "z"]);
        let input = v.encode(&["<s>", "a", "b", "</s>", "c"]);
        let m = copy_mask(&v, &input);
        for w in ["a", "b", "c", "<arg>", "and", "<s>", "</s>"] {
            assert!(m[v.id(w).unwrap() as usize], "{w}");
        }
        assert!(!m[v.id("z").unwrap() as usize]);
        assert!(!m[v.id("<unk>").unwrap() as usize]);
    }

    fn positional() -> FnBackend<impl Fn(&[TokenId], &[TokenId]) -> Vec<f64>> {
        // Logits depend only on the step, and the end symbol is forced after
        // three tokens, so the top paths are products of per-step choices.
        FnBackend::new(Vocab::build(["a", "b", "c"]), |_: &[TokenId], p: &[TokenId]| {
            let t = p.len() as f64;
            (0..9)
                .map(|w| {
                    let w = w as f64;
                    if w == 1.0 {
                        if p.len() >= 3 {
                            50.0
                        } else {
                            -50.0
                        }
                    } else {
                        ((w * 1.7 + t * 0.9).sin() * 2.0).round() / 2.0 + 0.01 * w
                    }
                })
                .collect()
        })
    }

    #[test]
    fn beam_matches_enumeration() {
        let b = positional();
        let v = b.vocab().clone();
        let input = v.encode(&["a", "b", "c"]);
        let cfg = DecodeConfig { beam_width: 4, max_output_len: 8, rerank: false, copy_restrict: true };
        let beams = beam_search(&b, &input, &cfg).unwrap();

        let mask = copy_mask(&v, &input);
        let allowed: Vec<TokenId> = (0..v.len() as TokenId).filter(|&i| mask[i as usize] && i != EOS_ID).collect();
        let ctx = b.encode(&input);
        let mut all = Vec::new();
        for &x in &allowed {
            for &y in &allowed {
                for &z in &allowed {
                    let seq = vec![x, y, z];
                    let mut s = 0.0;
                    for i in 0..=3 {
                        let lp = constrained_step(&b, &ctx, &seq[..i], Some(&mask)).unwrap();
                        s += lp[if i == 3 { EOS_ID as usize } else { seq[i] as usize }];
                    }
                    all.push((seq, s));
                }
            }
        }
        all.sort_by(|a, b| b.1.total_cmp(&a.1));
        assert_eq!(beams.len(), 4);
        for (cand, (seq, s)) in beams.iter().zip(&all) {
            assert_eq!(&cand.tokens, seq);
            assert!((cand.gen_logprob - s).abs() < 1e-9);
        }
    }

    #[test]
    fn truncation_flagged() {
        let b = FnBackend::new(Vocab::build(["a"]), |_: &[TokenId], _: &[TokenId]| vec![0.0, -100.0, 0.0, 0.0, 0.0, 0.0, 5.0]);
        let c = greedy_decode(&b, &[6], true, 3).unwrap();
        assert!(c.truncated);
        assert_eq!(c.tokens, vec![6, 6, 6]);
        let beams = beam_search(&b, &[6], &DecodeConfig { max_output_len: 3, ..Default::default() }).unwrap();
        assert!(beams[0].truncated);
    }

    proptest! {
        #[test]
        fn beam_one_is_greedy(seed in 0u64..10_000, n in 1usize..6) {
            let b = FnBackend::new(Vocab::build(["a", "b", "c", "d"]), move |_: &[TokenId], p: &[TokenId]| {
                (0..10).map(|w| {
                    let x = (seed as f64 * 0.013 + w as f64 * 1.31 + p.len() as f64 * 0.77
                        + p.iter().map(|&t| t as f64).sum::<f64>() * 0.19).sin();
                    x * 3.0
                }).collect()
            });
            let input: Vec<TokenId> = (0..n as TokenId).map(|i| 6 + (i + seed as TokenId) % 4).collect();
            let g = greedy_decode(&b, &input, true, 12).unwrap();
            let cfg = DecodeConfig { beam_width: 1, max_output_len: 12, rerank: false, copy_restrict: true };
            let beam = beam_search(&b, &input, &cfg).unwrap();
            prop_assert_eq!(beam.len(), 1);
            prop_assert_eq!(&beam[0].tokens, &g.tokens);
            prop_assert!((beam[0].gen_logprob - g.gen_logprob).abs() < 1e-12);
            prop_assert_eq!(beam[0].truncated, g.truncated);
        }
    }
}
