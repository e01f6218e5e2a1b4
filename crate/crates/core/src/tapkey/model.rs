use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::numeric::log_softmax;

use super::class_vector::ClassVector;
use super::crf::{self, Potentials};
use super::linalg::complement_basis;

pub const O_TAG: usize = 0;
const RANK_TOL: f64 = 1e-10;

/// Keyword-seeded CRF tagger over IO tags.
///
/// Tag 0 is O and tag `k ≥ 1` is `I-classes[k-1]`. Column `k` of `phi` is the
/// reference vector of tag `k`. Scores are computed in the subspace spanned by
/// `m`, whose columns are orthogonal to `c_k − λ·φ̂_k` for every event class.
/// The transition weights `w` and `w_o` are diagonals over the ambient
/// dimension applied to projected vectors, so no stored parameter depends on
/// how many classes there are apart from `phi`'s columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TapKeyModel {
    classes: Vec<String>,
    class_vectors: Vec<ClassVector>,
    phi: DMatrix<f64>,
    w: DVector<f64>,
    w_o: DVector<f64>,
    pub lambda: f64,
    pub alpha: f64,
    #[serde(skip)]
    m: DMatrix<f64>,
    #[serde(skip)]
    proj: DMatrix<f64>,
}

fn normalize(v: &DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v.clone()
    }
}

impl TapKeyModel {
    /// References start as the first `K + 1` standard basis vectors (O first);
    /// both transition diagonals start at zero.
    pub fn new(class_vectors: Vec<ClassVector>, lambda: f64, alpha: f64) -> Result<Self> {
        let d =
            class_vectors.first().map(|c| c.vector.len()).ok_or_else(|| Error::Config("at least one class vector is required".into()))?;
        if let Some(bad) = class_vectors.iter().find(|c| c.vector.len() != d) {
            return Err(Error::Config(format!("class vector for {} has dimension {}, expected {d}", bad.event_type, bad.vector.len())));
        }
        let t = class_vectors.len() + 1;
        if t > d {
            return Err(Error::Config(format!("{} classes need embedding dimension above {}, got {d}", t - 1, t - 1)));
        }
        let mut model = TapKeyModel {
            classes: class_vectors.iter().map(|c| c.event_type.clone()).collect(),
            class_vectors,
            phi: DMatrix::identity(d, t),
            w: DVector::zeros(d),
            w_o: DVector::zeros(d),
            lambda,
            alpha,
            m: DMatrix::zeros(d, 0),
            proj: DMatrix::zeros(d, d),
        };
        model.compute_projection();
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn num_tags(&self) -> usize {
        self.classes.len() + 1
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_vectors(&self) -> &[ClassVector] {
        &self.class_vectors
    }

    pub fn tag_name(&self, tag: usize) -> String {
        if tag == O_TAG {
            "O".to_string()
        } else {
            format!("I-{}", self.classes[tag - 1])
        }
    }

    pub fn tag_of_class(&self, event_type: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == event_type).map(|i| i + 1)
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn w(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn w_o(&self) -> &DVector<f64> {
        &self.w_o
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `D = [c_k − λ·φ̂_k]` over event classes.
    pub fn modified_references(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut dm = DMatrix::zeros(d, self.classes.len());
        for (k, cv) in self.class_vectors.iter().enumerate() {
            let col = cv.as_dvector() - normalize(&self.phi.column(k + 1).into_owned()) * self.lambda;
            dm.set_column(k, &col);
        }
        dm
    }

    /// Recomputes `M` from the current references. Returns the rank of `D`.
    pub fn compute_projection(&mut self) -> usize {
        let dm = self.modified_references();
        let (m, rank) = complement_basis(&dm, RANK_TOL);
        if rank < self.classes.len() {
            log::warn!("modified reference matrix has rank {rank} < {}; projection keeps {} dimensions", self.classes.len(), m.ncols());
        }
        self.proj = &m * m.transpose();
        self.m = m;
        rank
    }

    /// `max_k ‖Mᵀ(c_k − λ·φ̂_k)‖`.
    pub fn projection_residual(&self) -> f64 {
        let r = self.m.transpose() * self.modified_references();
        (0..r.ncols()).map(|k| r.column(k).norm()).fold(0.0, f64::max)
    }

    /// `α·‖ΦᵀΦ − I‖²_F`.
    pub fn regularizer(&self) -> f64 {
        let t = self.num_tags();
        self.alpha * (self.phi.transpose() * &self.phi - DMatrix::identity(t, t)).norm_squared()
    }

    /// Adds an event class known only by its class vector. Its reference
    /// vector is the part of the class vector orthogonal to the existing
    /// references, normalized; the new class's own direction would otherwise
    /// be projected away.
    pub fn add_class(&mut self, cv: ClassVector) -> Result<()> {
        if cv.vector.len() != self.dim() {
            return Err(Error::Config(format!(
                "class vector for {} has dimension {}, expected {}",
                cv.event_type,
                cv.vector.len(),
                self.dim()
            )));
        }
        if self.tag_of_class(&cv.event_type).is_some() {
            return Err(Error::Config(format!("class {} already exists", cv.event_type)));
        }
        if self.num_tags() + 1 > self.dim() {
            return Err(Error::Config(format!("no room for another class in dimension {}", self.dim())));
        }
        let c = cv.as_dvector();
        let (basis, _) = complement_basis(&self.phi, RANK_TOL);
        let rest = &basis * (basis.transpose() * &c);
        let reference = if rest.norm() > 1e-12 { normalize(&rest) } else { normalize(&c) };
        let t = self.num_tags();
        self.phi = self.phi.clone().insert_column(t, 0.0);
        self.phi.set_column(t, &reference);
        self.classes.push(cv.event_type.clone());
        self.class_vectors.push(cv);
        self.compute_projection();
        Ok(())
    }

    /// Log-softmax over tags of `(Mᵀh)·(Mᵀφ_k)`.
    pub fn emission(&self, h: &DVector<f64>) -> Vec<f64> {
        let g = &self.proj * h;
        let raw: Vec<f64> = (0..self.num_tags()).map(|k| g.dot(&self.phi.column(k))).collect();
        log_softmax(&raw)
    }

    fn branch_weights(&self, l: usize, k: usize) -> Option<&DVector<f64>> {
        if k == l && k != O_TAG {
            Some(&self.w)
        } else if k == O_TAG || l == O_TAG {
            Some(&self.w_o)
        } else {
            None
        }
    }

    /// Transition score from tag `l` to tag `k` at a token with embedding `h`.
    pub fn transition(&self, l: usize, k: usize, h: &DVector<f64>) -> f64 {
        match self.branch_weights(l, k) {
            Some(wts) => {
                let g = &self.proj * h;
                let q = &self.proj * self.phi.column(k);
                q.component_mul(wts).dot(&g)
            }
            None => 0.0,
        }
    }

    /// CRF potentials for one sentence, plus the projected embeddings `P·h_i`.
    pub fn potentials(&self, hs: &[DVector<f64>]) -> (Potentials, Vec<DVector<f64>>) {
        let t = self.num_tags();
        let q = &self.proj * &self.phi;
        let qw: Vec<DVector<f64>> = (0..t).map(|k| q.column(k).component_mul(&self.w)).collect();
        let qo: Vec<DVector<f64>> = (0..t).map(|k| q.column(k).component_mul(&self.w_o)).collect();
        let gs: Vec<DVector<f64>> = hs.iter().map(|h| &self.proj * h).collect();
        let mut emit = Vec::with_capacity(hs.len());
        let mut trans = Vec::with_capacity(hs.len());
        let mut start = vec![0.0; t];
        for (i, g) in gs.iter().enumerate() {
            let raw: Vec<f64> = (0..t).map(|k| g.dot(&self.phi.column(k))).collect();
            emit.push(log_softmax(&raw));
            let same: Vec<f64> = qw.iter().map(|v| v.dot(g)).collect();
            let with_o: Vec<f64> = qo.iter().map(|v| v.dot(g)).collect();
            let tr: Vec<Vec<f64>> = (0..t)
                .map(|l| {
                    (0..t)
                        .map(|k| {
                            if k == l && k != O_TAG {
                                same[k]
                            } else if k == O_TAG || l == O_TAG {
                                with_o[k]
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            if i == 0 {
                start = tr[O_TAG].clone();
            }
            trans.push(tr);
        }
        (Potentials { emit, start, trans }, gs)
    }

    pub fn sequence_logprob(&self, hs: &[DVector<f64>], tags: &[usize]) -> f64 {
        crf::sequence_logprob(&self.potentials(hs).0, tags)
    }

    pub fn viterbi(&self, hs: &[DVector<f64>]) -> Vec<usize> {
        crf::viterbi(&self.potentials(hs).0).0
    }

    /// Trainable parameters flattened as `[Φ (column-major), w, w_o]`.
    pub fn params(&self) -> Vec<f64> {
        let mut v = self.phi.as_slice().to_vec();
        v.extend_from_slice(self.w.as_slice());
        v.extend_from_slice(self.w_o.as_slice());
        v
    }

    /// Inverse of [`params`](Self::params). The projection is left as is.
    pub fn set_params(&mut self, v: &[f64]) {
        let n = self.phi.len();
        let d = self.dim();
        self.phi.as_mut_slice().copy_from_slice(&v[..n]);
        self.w.as_mut_slice().copy_from_slice(&v[n..n + d]);
        self.w_o.as_mut_slice().copy_from_slice(&v[n + d..n + 2 * d]);
    }

    pub(crate) fn projector(&self) -> &DMatrix<f64> {
        &self.proj
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        jsonl::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut model: TapKeyModel = jsonl::read_json(path)?;
        model.compute_projection();
        Ok(model)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn cv(name: &str, v: &[f64]) -> ClassVector {
        ClassVector { event_type: name.into(), vector: v.to_vec(), support_count: 1 }
    }

    pub(crate) fn random_model(rng: &mut ChaCha8Rng, d: usize, k: usize) -> TapKeyModel {
        let cvs = (0..k).map(|i| cv(&format!("T{i}"), &(0..d).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>())).collect();
        let mut m = TapKeyModel::new(cvs, rng.gen_range(0.0..1.0), 0.1).unwrap();
        let p: Vec<f64> = m.params().iter().map(|x| x + rng.gen_range(-0.5..0.5)).collect();
        m.set_params(&p);
        m.compute_projection();
        m
    }

    #[test]
    fn axis_aligned_projection() {
        // With φ_1 = e_2 and λ = 0, D is c_1 = e_1.
        let m = TapKeyModel::new(vec![cv("A", &[1.0, 0.0, 0.0])], 0.0, 0.0).unwrap();
        assert_eq!(m.m().ncols(), 2);
        assert!(m.m().row(0).norm() < 1e-12);
        assert!(m.projection_residual() < 1e-12);
    }

    #[test]
    fn random_projection_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let m = random_model(&mut rng, 8, 3);
            assert!(m.projection_residual() < 1e-6);
            assert!((m.m().transpose() * m.m() - DMatrix::identity(5, 5)).norm() < 1e-9);
        }
    }

    #[test]
    fn regularizer_zero_at_init() {
        let m = TapKeyModel::new(vec![cv("A", &[1.0, 2.0, 0.0, 1.0]), cv("B", &[0.0, 1.0, 1.0, 0.0])], 0.5, 3.0).unwrap();
        assert_eq!(m.regularizer(), 0.0);
    }

    #[test]
    fn hand_computed_emission_and_transition() {
        // d = 4, two classes with λ = 0: D spans e_1 and e_2, so M spans e_3, e_4.
        let mut m = TapKeyModel::new(vec![cv("A", &[1.0, 0.0, 0.0, 0.0]), cv("B", &[0.0, 1.0, 0.0, 0.0])], 0.0, 0.0).unwrap();
        let mut p = m.params();
        // φ_O = (0,0,1,0), φ_A = (0,0,0,1), φ_B = (0,0,0.5,0.5)
        p[..12].copy_from_slice(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.5, 0.5]);
        p[12..16].copy_from_slice(&[1.0, 1.0, 1.0, 1.0]);
        p[16..20].copy_from_slice(&[0.0, 0.0, 2.0, 3.0]);
        m.set_params(&p);
        m.compute_projection();
        let h = DVector::from_column_slice(&[5.0, 5.0, 1.0, 2.0]);
        let raw = [1.0, 2.0, 1.5];
        let z = raw.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        let e = m.emission(&h);
        for k in 0..3 {
            assert!((e[k] - (raw[k] - z)).abs() < 1e-12);
        }
        // O → A: Σ_j w_o[j]·(Mᵀφ_A)[j]·(Mᵀh)[j] = 3·1·2.
        assert!((m.transition(0, 1, &h) - 6.0).abs() < 1e-12);
        assert_eq!(m.transition(1, 2, &h), 0.0);
        // A → A uses w: 1·1·2.
        assert!((m.transition(1, 1, &h) - 2.0).abs() < 1e-12);
        // Zero w gives zero same-tag transitions.
        p[12..16].copy_from_slice(&[0.0; 4]);
        m.set_params(&p);
        assert_eq!(m.transition(2, 2, &h), 0.0);
    }

    #[test]
    fn identical_references_tie() {
        let mut m = TapKeyModel::new(vec![cv("A", &[1.0, 0.0, 0.0, 0.0]), cv("B", &[0.0, 1.0, 0.0, 0.0])], 0.0, 0.0).unwrap();
        let mut p = m.params();
        p[4..8].copy_from_slice(&[0.0, 0.0, 0.3, 0.7]);
        p[8..12].copy_from_slice(&[0.0, 0.0, 0.3, 0.7]);
        m.set_params(&p);
        let e = m.emission(&DVector::from_column_slice(&[0.2, -1.0, 0.4, 0.9]));
        assert!((e[1] - e[2]).abs() < 1e-12);
    }

    #[test]
    fn add_class_keeps_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut m = random_model(&mut rng, 8, 2);
        let (w, wo) = (m.w().clone(), m.w_o().clone());
        m.add_class(cv("New", &[0.3, -0.2, 0.9, 0.1, 0.0, 0.4, -0.5, 0.2])).unwrap();
        assert_eq!(m.num_tags(), 4);
        assert_eq!(m.w(), &w);
        assert_eq!(m.w_o(), &wo);
        assert!(m.projection_residual() < 1e-9);
        let q = m.projector() * m.phi().column(3);
        assert!(q.norm() > 1e-3);
    }

    #[test]
    fn save_load() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_model(&mut rng, 6, 2);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        m.save(&p).unwrap();
        let back = TapKeyModel::load(&p).unwrap();
        assert_eq!(back.params(), m.params());
        let h = DVector::from_column_slice(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        assert!((back.emission(&h)[1] - m.emission(&h)[1]).abs() < 1e-12);
    }
}
