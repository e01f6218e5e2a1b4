//! A small attention encoder-decoder trained from scratch.
//!
//! An encoder key sums the token's embedding, its absolute position, its
//! offset from the trigger marker and a linear map of the preceding token's
//! embedding. Each decoder step mixes the two previous tokens, an
//! output-position embedding and the mean key into a query, attends over the
//! keys, and scores every vocabulary word by the dot product of the decoder
//! state with that word's embedding. Input and output embeddings are shared,
//! so attending to a key pulls probability toward the word it came from, and
//! the preceding-token term lets a query find where a partly copied span
//! continues.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::numeric::{log_softmax, softmax};

use super::backend::{GeneratorBackend, TrainableBackend};
use super::vocab::{TokenId, Vocab, BOS_ID, TRIGGER_ID};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CopyLmConfig {
    pub hidden: usize,
    pub max_input_positions: usize,
    pub max_output_positions: usize,
    /// Offsets from the trigger beyond this share one embedding.
    pub max_trigger_offset: usize,
    /// Standard deviation of the embedding initialization; zero gives a model
    /// that predicts the uniform distribution.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for CopyLmConfig {
    fn default() -> Self {
        CopyLmConfig { hidden: 48, max_input_positions: 512, max_output_positions: 128, max_trigger_offset: 32, init_scale: 0.3, seed: 13 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    v: usize,
    d: usize,
    lin: usize,
    lout: usize,
    emb: usize,
    pin: usize,
    pout: usize,
    rel: usize,
    nrel: usize,
    a: usize,
    b: usize,
    g: usize,
    c: usize,
    dmat: usize,
    s: usize,
    b1: usize,
    b2: usize,
    bias: usize,
    total: usize,
}

impl Layout {
    fn new(v: usize, cfg: &CopyLmConfig) -> Self {
        let d = cfg.hidden;
        let (lin, lout) = (cfg.max_input_positions.max(1), cfg.max_output_positions.max(1));
        let emb = 0;
        let pin = emb + v * d;
        let pout = pin + lin * d;
        let rel = pout + lout * d;
        // Offsets -w..=w plus one row for inputs without a trigger marker.
        let nrel = 2 * cfg.max_trigger_offset + 2;
        let a = rel + nrel * d;
        let b = a + d * d;
        let g = b + d * d;
        let c = g + d * d;
        let dmat = c + d * d;
        let s = dmat + d * d;
        let b1 = s + d * d;
        let b2 = b1 + d;
        let bias = b2 + d;
        Layout { v, d, lin, lout, emb, pin, pout, rel, nrel, a, b, g, c, dmat, s, b1, b2, bias, total: bias + v }
    }

    fn emb_row(&self, id: TokenId) -> usize {
        self.emb + id as usize * self.d
    }

    fn pin_row(&self, pos: usize) -> usize {
        self.pin + pos.min(self.lin - 1) * self.d
    }

    fn pout_row(&self, pos: usize) -> usize {
        self.pout + pos.min(self.lout - 1) * self.d
    }

    fn rel_row(&self, pos: usize, trigger: Option<usize>) -> usize {
        let w = (self.nrel - 2) / 2;
        let idx = match trigger {
            Some(t) => (pos as i64 - t as i64).clamp(-(w as i64), w as i64) + w as i64,
            None => (self.nrel - 1) as i64,
        };
        self.rel + idx as usize * self.d
    }
}

#[derive(Debug, Clone)]
pub struct CopyLm {
    config: CopyLmConfig,
    vocab: Vocab,
    layout: Layout,
    weights: Vec<f64>,
}

/// Encoder keys and their mean.
#[derive(Debug, Clone)]
pub struct CopyLmContext {
    ids: Vec<TokenId>,
    keys: Vec<f64>,
    mean: Vec<f64>,
}

struct Step {
    prev1: TokenId,
    prev2: TokenId,
    pos: usize,
    u: Vec<f64>,
    alpha: Vec<f64>,
    read: Vec<f64>,
    h: Vec<f64>,
    logp: Vec<f64>,
}

fn matvec(w: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o += w[r * d..(r + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn matvec_t(w: &[f64], y: &[f64], out: &mut [f64]) {
    let d = out.len();
    for (r, &yr) in y.iter().enumerate() {
        if yr == 0.0 {
            continue;
        }
        for (o, wv) in out.iter_mut().zip(&w[r * d..(r + 1) * d]) {
            *o += wv * yr;
        }
    }
}

fn outer_add(grad: &mut [f64], y: &[f64], x: &[f64]) {
    let d = x.len();
    for (r, &yr) in y.iter().enumerate() {
        if yr == 0.0 {
            continue;
        }
        for (gv, xv) in grad[r * d..(r + 1) * d].iter_mut().zip(x) {
            *gv += yr * xv;
        }
    }
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

fn trigger_position(input: &[TokenId]) -> Option<usize> {
    input.iter().position(|&t| t == TRIGGER_ID)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl CopyLm {
    pub fn new(vocab: Vocab, config: CopyLmConfig) -> Self {
        let layout = Layout::new(vocab.len(), &config);
        let mut weights = vec![0.0; layout.total];
        if config.init_scale > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let emb = Normal::new(0.0, config.init_scale).expect("valid std");
            let mat = Normal::new(0.0, 1.0 / (layout.d as f64).sqrt()).expect("valid std");
            for w in &mut weights[layout.emb..layout.a] {
                *w = emb.sample(&mut rng);
            }
            for w in &mut weights[layout.a..layout.b1] {
                *w = mat.sample(&mut rng);
            }
        }
        CopyLm { config, vocab, layout, weights }
    }

    pub fn config(&self) -> &CopyLmConfig {
        &self.config
    }

    pub fn num_params(&self) -> usize {
        self.layout.total
    }

    fn w(&self, off: usize, len: usize) -> &[f64] {
        &self.weights[off..off + len]
    }

    fn step(&self, ctx: &CopyLmContext, prefix: &[TokenId]) -> Step {
        let l = &self.layout;
        let d = l.d;
        let pos = prefix.len();
        let prev1 = prefix.last().copied().unwrap_or(BOS_ID);
        let prev2 = if pos >= 2 { prefix[pos - 2] } else { BOS_ID };

        let mut z1 = self.w(l.b1, d).to_vec();
        matvec(self.w(l.a, d * d), self.w(l.emb_row(prev1), d), &mut z1);
        matvec(self.w(l.b, d * d), self.w(l.emb_row(prev2), d), &mut z1);
        axpy(1.0, self.w(l.pout_row(pos), d), &mut z1);
        matvec(self.w(l.g, d * d), &ctx.mean, &mut z1);
        let u: Vec<f64> = z1.iter().map(|x| x.tanh()).collect();

        let n = ctx.ids.len();
        let mut read = vec![0.0; d];
        let alpha = if n == 0 {
            Vec::new()
        } else {
            let scores: Vec<f64> = (0..n).map(|j| dot(&u, &ctx.keys[j * d..(j + 1) * d])).collect();
            let alpha = softmax(&scores);
            for j in 0..n {
                axpy(alpha[j], &ctx.keys[j * d..(j + 1) * d], &mut read);
            }
            alpha
        };

        let mut z2 = self.w(l.b2, d).to_vec();
        matvec(self.w(l.c, d * d), &u, &mut z2);
        matvec(self.w(l.dmat, d * d), &read, &mut z2);
        let h: Vec<f64> = z2.iter().map(|x| x.tanh()).collect();

        let mut logits = self.w(l.bias, l.v).to_vec();
        for (w, lg) in logits.iter_mut().enumerate() {
            *lg += dot(&h, self.w(l.emb + w * d, d));
        }
        Step { prev1, prev2, pos, u, alpha, read, h, logp: log_softmax(&logits) }
    }

    /// Writes `config.json` and `weights.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        jsonl::write_json(dir.join("config.json"), &SavedConfig { config: self.config.clone(), vocab: self.vocab.clone() })?;
        jsonl::write_json(dir.join("weights.json"), &self.weights)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let saved: SavedConfig = jsonl::read_json(dir.join("config.json"))?;
        let weights: Vec<f64> = jsonl::read_json(dir.join("weights.json"))?;
        let mut model = CopyLm::new(saved.vocab, CopyLmConfig { init_scale: 0.0, ..saved.config });
        if weights.len() != model.layout.total {
            return Err(Error::Config(format!("checkpoint has {} weights, model expects {}", weights.len(), model.layout.total)));
        }
        model.weights = weights;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct SavedConfig {
    config: CopyLmConfig,
    vocab: Vocab,
}

impl GeneratorBackend for CopyLm {
    type Context = CopyLmContext;

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn encode(&self, input: &[TokenId]) -> CopyLmContext {
        let l = &self.layout;
        let d = l.d;
        let n = input.len();
        let trigger = trigger_position(input);
        let mut keys = vec![0.0; n * d];
        let mut mean = vec![0.0; d];
        for (j, &id) in input.iter().enumerate() {
            let k = &mut keys[j * d..(j + 1) * d];
            k.copy_from_slice(self.w(l.emb_row(id), d));
            axpy(1.0, self.w(l.pin_row(j), d), k);
            axpy(1.0, self.w(l.rel_row(j, trigger), d), k);
            let before = if j == 0 { BOS_ID } else { input[j - 1] };
            matvec(self.w(l.s, d * d), self.w(l.emb_row(before), d), k);
            axpy(1.0 / n as f64, k, &mut mean);
        }
        CopyLmContext { ids: input.to_vec(), keys, mean }
    }

    fn next_token_logprobs(&self, ctx: &CopyLmContext, prefix: &[TokenId]) -> Vec<f64> {
        self.step(ctx, prefix).logp
    }
}

impl TrainableBackend for CopyLm {
    fn params(&self) -> &[f64] {
        &self.weights
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    fn nll_and_grad(&self, input: &[TokenId], target: &[TokenId], grad: &mut [f64]) -> f64 {
        let l = self.layout;
        let d = l.d;
        let ctx = self.encode(input);
        let n = input.len();
        let mut dkeys = vec![0.0; n * d];
        let mut dmean = vec![0.0; d];
        let mut loss = 0.0;

        for (i, &t) in target.iter().enumerate() {
            let s = self.step(&ctx, &target[..i]);
            loss -= s.logp[t as usize];

            let mut dlogits: Vec<f64> = s.logp.iter().map(|x| x.exp()).collect();
            dlogits[t as usize] -= 1.0;

            let mut dh = vec![0.0; d];
            for (w, &g) in dlogits.iter().enumerate() {
                grad[l.bias + w] += g;
                let row = l.emb + w * d;
                axpy(g, &self.weights[row..row + d], &mut dh);
                axpy(g, &s.h, &mut grad[row..row + d]);
            }
            let dz2: Vec<f64> = dh.iter().zip(&s.h).map(|(g, h)| g * (1.0 - h * h)).collect();
            outer_add(&mut grad[l.c..l.c + d * d], &dz2, &s.u);
            outer_add(&mut grad[l.dmat..l.dmat + d * d], &dz2, &s.read);
            axpy(1.0, &dz2, &mut grad[l.b2..l.b2 + d]);
            let mut du = vec![0.0; d];
            matvec_t(self.w(l.c, d * d), &dz2, &mut du);
            let mut dread = vec![0.0; d];
            matvec_t(self.w(l.dmat, d * d), &dz2, &mut dread);

            if n > 0 {
                let dalpha: Vec<f64> = (0..n).map(|j| dot(&dread, &ctx.keys[j * d..(j + 1) * d])).collect();
                let avg: f64 = s.alpha.iter().zip(&dalpha).map(|(a, g)| a * g).sum();
                for j in 0..n {
                    let key = &ctx.keys[j * d..(j + 1) * d];
                    let dscore = s.alpha[j] * (dalpha[j] - avg);
                    axpy(dscore, key, &mut du);
                    let dk = &mut dkeys[j * d..(j + 1) * d];
                    axpy(s.alpha[j], &dread, dk);
                    axpy(dscore, &s.u, dk);
                }
            }

            let dz1: Vec<f64> = du.iter().zip(&s.u).map(|(g, u)| g * (1.0 - u * u)).collect();
            let (r1, r2) = (l.emb_row(s.prev1), l.emb_row(s.prev2));
            outer_add(&mut grad[l.a..l.a + d * d], &dz1, &self.weights[r1..r1 + d]);
            outer_add(&mut grad[l.b..l.b + d * d], &dz1, &self.weights[r2..r2 + d]);
            outer_add(&mut grad[l.g..l.g + d * d], &dz1, &ctx.mean);
            let mut de = vec![0.0; d];
            matvec_t(self.w(l.a, d * d), &dz1, &mut de);
            axpy(1.0, &de, &mut grad[r1..r1 + d]);
            de.iter_mut().for_each(|x| *x = 0.0);
            matvec_t(self.w(l.b, d * d), &dz1, &mut de);
            axpy(1.0, &de, &mut grad[r2..r2 + d]);
            matvec_t(self.w(l.g, d * d), &dz1, &mut dmean);
            let p = l.pout_row(s.pos);
            axpy(1.0, &dz1, &mut grad[p..p + d]);
            axpy(1.0, &dz1, &mut grad[l.b1..l.b1 + d]);
        }

        let trigger = trigger_position(input);
        let mut de = vec![0.0; d];
        for (j, &id) in input.iter().enumerate() {
            let dk = &mut dkeys[j * d..(j + 1) * d];
            axpy(1.0 / n as f64, &dmean, dk);
            let (e, p, r) = (l.emb_row(id), l.pin_row(j), l.rel_row(j, trigger));
            axpy(1.0, dk, &mut grad[e..e + d]);
            axpy(1.0, dk, &mut grad[p..p + d]);
            axpy(1.0, dk, &mut grad[r..r + d]);
            let before = l.emb_row(if j == 0 { BOS_ID } else { input[j - 1] });
            outer_add(&mut grad[l.s..l.s + d * d], dk, &self.weights[before..before + d]);
            de.iter_mut().for_each(|x| *x = 0.0);
            matvec_t(self.w(l.s, d * d), dk, &mut de);
            axpy(1.0, &de, &mut grad[before..before + d]);
        }
        loss
    }
}
