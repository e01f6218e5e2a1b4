use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Adam;

use super::crf::marginals;
use super::model::{TapKeyModel, O_TAG};

/// A sentence's embeddings with one tag per token; `None` marks an unknown (X) tag.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSequence {
    pub embeddings: Vec<DVector<f64>>,
    pub tags: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Sequence likelihood under the CRF; X positions are marginalized out.
    Crf,
    /// Per-token emission likelihood only, over tokens that are not X.
    TokenClassification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TapKeyTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TapKeyTrainConfig {
    fn default() -> Self {
        TapKeyTrainConfig { epochs: 20, batch_size: 16, learning_rate: 0.02, seed: 11 }
    }
}

/// Loss and gradient with respect to [`TapKeyModel::params`], holding the
/// current projection fixed.
///
/// The CRF objective is the mean negative log-likelihood per sequence; token
/// classification averages over labelled tokens. Both add the orthonormality
/// penalty `α·‖ΦᵀΦ − I‖²_F`.
pub fn loss_and_grad(model: &TapKeyModel, data: &[&TaggedSequence], objective: Objective) -> (f64, Vec<f64>) {
    let d = model.dim();
    let t = model.num_tags();
    let phi = model.phi();
    let proj = model.projector();
    let q = proj * phi;

    let mut dphi = DMatrix::<f64>::zeros(d, t);
    let mut dw = DVector::<f64>::zeros(d);
    let mut dwo = DVector::<f64>::zeros(d);
    // Per tag: Σ_i (transition gradient) · P h_i, split by branch.
    let mut acc_w = DMatrix::<f64>::zeros(d, t);
    let mut acc_o = DMatrix::<f64>::zeros(d, t);
    let mut nll = 0.0;
    let mut count = 0usize;

    for seq in data {
        if seq.embeddings.is_empty() {
            continue;
        }
        let n = seq.embeddings.len();
        let (pot, gs) = model.potentials(&seq.embeddings);
        let mut de = vec![vec![0.0; t]; n];

        match objective {
            Objective::Crf => {
                let mask: Vec<Vec<bool>> = seq.tags.iter().map(|tag| (0..t).map(|k| tag.is_none_or(|y| y == k)).collect()).collect();
                let full = marginals(&pot, None);
                let clamped = marginals(&pot, Some(&mask));
                nll += full.log_z - clamped.log_z;
                count += 1;
                for i in 0..n {
                    for k in 0..t {
                        de[i][k] = full.unary[i][k] - clamped.unary[i][k];
                    }
                }
                for (i, g) in gs.iter().enumerate() {
                    for k in 0..t {
                        let (mut cw, mut co) = (0.0, 0.0);
                        if i == 0 {
                            co = de[0][k];
                        } else {
                            for l in 0..t {
                                let dt = full.pairwise[i][l][k] - clamped.pairwise[i][l][k];
                                if k == l && k != O_TAG {
                                    cw += dt;
                                } else if k == O_TAG || l == O_TAG {
                                    co += dt;
                                }
                            }
                        }
                        if cw != 0.0 {
                            acc_w.column_mut(k).axpy(cw, g, 1.0);
                        }
                        if co != 0.0 {
                            acc_o.column_mut(k).axpy(co, g, 1.0);
                        }
                    }
                }
            }
            Objective::TokenClassification => {
                for (i, tag) in seq.tags.iter().enumerate() {
                    if let Some(y) = *tag {
                        nll -= pot.emit[i][y];
                        de[i][y] = -1.0;
                        count += 1;
                    }
                }
            }
        }

        // Through the log-softmax to the raw scores g_i·φ_k.
        for (i, g) in gs.iter().enumerate() {
            let total: f64 = de[i].iter().sum();
            for k in 0..t {
                let ds = de[i][k] - pot.emit[i][k].exp() * total;
                if ds != 0.0 {
                    dphi.column_mut(k).axpy(ds, g, 1.0);
                }
            }
        }
    }

    // Transition terms: t = Σ_j w_j (Pφ_k)_j g_j.
    for k in 0..t {
        let (aw, ao) = (acc_w.column(k), acc_o.column(k));
        dw += q.column(k).component_mul(&aw);
        dwo += q.column(k).component_mul(&ao);
        let back = proj * (model.w().component_mul(&aw) + model.w_o().component_mul(&ao));
        dphi.column_mut(k).axpy(1.0, &back, 1.0);
    }

    let scale = 1.0 / count.max(1) as f64;
    let gram = phi.transpose() * phi - DMatrix::identity(t, t);
    let loss = nll * scale + model.alpha * gram.norm_squared();
    let dphi = dphi * scale + phi * gram * (4.0 * model.alpha);

    let mut grad = dphi.as_slice().to_vec();
    grad.extend((dw * scale).iter());
    grad.extend((dwo * scale).iter());
    (loss, grad)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TapKeyReport {
    pub epoch_losses: Vec<f64>,
}

/// Adam on `{Φ, w, w_o}`. The projection is recomputed at the start of every
/// epoch and held fixed during it.
pub fn train(model: &mut TapKeyModel, data: &[TaggedSequence], objective: Objective, config: &TapKeyTrainConfig) -> Result<TapKeyReport> {
    if config.batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    if let Some(bad) = data.iter().find(|s| s.embeddings.len() != s.tags.len()) {
        return Err(Error::Contract(format!("{} embeddings but {} tags", bad.embeddings.len(), bad.tags.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = model.params();
    let mut adam = Adam::new(params.len(), config.learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TapKeyReport::default();
    for epoch in 0..config.epochs {
        model.compute_projection();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&TaggedSequence> = chunk.iter().map(|&i| &data[i]).collect();
            let (loss, grad) = loss_and_grad(model, &batch, objective);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            adam.step(&mut params, &grad);
            model.set_params(&params);
            total += loss;
            batches += 1;
        }
        let mean = total / batches.max(1) as f64;
        log::info!("tagger epoch {epoch}: loss {mean:.4}");
        report.epoch_losses.push(mean);
    }
    model.compute_projection();
    Ok(report)
}
