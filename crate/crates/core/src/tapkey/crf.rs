//! Linear-chain CRF inference over explicit potentials.
//!
//! Tag 0 is O. The first position is scored as if preceded by O.

use crate::numeric::logsumexp;

/// Scores for one sequence of `n` tokens and `t` tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    /// `emit[i][k]`.
    pub emit: Vec<Vec<f64>>,
    /// Transition into tag `k` at position 0 from the virtual O.
    pub start: Vec<f64>,
    /// `trans[i][l][k]` for `i ≥ 1`; `trans[0]` is unused.
    pub trans: Vec<Vec<Vec<f64>>>,
}

impl Potentials {
    pub fn len(&self) -> usize {
        self.emit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emit.is_empty()
    }

    pub fn num_tags(&self) -> usize {
        self.start.len()
    }

    /// Unnormalized score of a tag path.
    pub fn score(&self, tags: &[usize]) -> f64 {
        let mut s = 0.0;
        for (i, &k) in tags.iter().enumerate() {
            s += self.emit[i][k];
            s += if i == 0 { self.start[k] } else { self.trans[i][tags[i - 1]][k] };
        }
        s
    }
}

/// Per-position allowed tags; `None` allows every tag.
pub type TagMask<'a> = Option<&'a [Vec<bool>]>;

fn ok(mask: TagMask, i: usize, k: usize) -> bool {
    mask.is_none_or(|m| m[i][k])
}

fn forward(p: &Potentials, mask: TagMask) -> Vec<Vec<f64>> {
    let (n, t) = (p.len(), p.num_tags());
    let mut alpha = vec![vec![f64::NEG_INFINITY; t]; n];
    for k in 0..t {
        if ok(mask, 0, k) {
            alpha[0][k] = p.start[k] + p.emit[0][k];
        }
    }
    let mut buf = vec![0.0; t];
    for i in 1..n {
        for k in 0..t {
            if !ok(mask, i, k) {
                continue;
            }
            for l in 0..t {
                buf[l] = alpha[i - 1][l] + p.trans[i][l][k];
            }
            alpha[i][k] = logsumexp(&buf) + p.emit[i][k];
        }
    }
    alpha
}

fn backward(p: &Potentials, mask: TagMask) -> Vec<Vec<f64>> {
    let (n, t) = (p.len(), p.num_tags());
    let mut beta = vec![vec![f64::NEG_INFINITY; t]; n];
    if n == 0 {
        return beta;
    }
    for k in 0..t {
        if ok(mask, n - 1, k) {
            beta[n - 1][k] = 0.0;
        }
    }
    let mut buf = vec![0.0; t];
    for i in (0..n - 1).rev() {
        for l in 0..t {
            if !ok(mask, i, l) {
                continue;
            }
            for k in 0..t {
                buf[k] = p.trans[i + 1][l][k] + p.emit[i + 1][k] + beta[i + 1][k];
            }
            beta[i][l] = logsumexp(&buf);
        }
    }
    beta
}

/// `log Σ_y exp(score(y))` over paths allowed by `mask`. Zero for an empty sequence.
pub fn log_partition(p: &Potentials, mask: TagMask) -> f64 {
    match forward(p, mask).last() {
        Some(last) => logsumexp(last),
        None => 0.0,
    }
}

pub fn sequence_logprob(p: &Potentials, tags: &[usize]) -> f64 {
    p.score(tags) - log_partition(p, None)
}

/// Posterior marginals under the (optionally masked) distribution.
#[derive(Debug, Clone)]
pub struct Marginals {
    pub log_z: f64,
    /// `unary[i][k] = p(y_i = k)`.
    pub unary: Vec<Vec<f64>>,
    /// `pairwise[i][l][k] = p(y_{i-1} = l, y_i = k)` for `i ≥ 1`.
    pub pairwise: Vec<Vec<Vec<f64>>>,
}

pub fn marginals(p: &Potentials, mask: TagMask) -> Marginals {
    let (n, t) = (p.len(), p.num_tags());
    let alpha = forward(p, mask);
    let beta = backward(p, mask);
    let log_z = alpha.last().map_or(0.0, |a| logsumexp(a));
    let unary = (0..n).map(|i| (0..t).map(|k| (alpha[i][k] + beta[i][k] - log_z).exp()).collect()).collect();
    let mut pairwise = vec![Vec::new(); n];
    for i in 1..n {
        pairwise[i] = (0..t)
            .map(|l| (0..t).map(|k| (alpha[i - 1][l] + p.trans[i][l][k] + p.emit[i][k] + beta[i][k] - log_z).exp()).collect())
            .collect();
    }
    Marginals { log_z, unary, pairwise }
}

/// Highest-scoring path and its score. Equal scores resolve toward the lower
/// tag index, which puts O first.
pub fn viterbi(p: &Potentials) -> (Vec<usize>, f64) {
    let (n, t) = (p.len(), p.num_tags());
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let mut delta: Vec<f64> = (0..t).map(|k| p.start[k] + p.emit[0][k]).collect();
    let mut back = vec![vec![0usize; t]; n];
    for i in 1..n {
        let mut next = vec![f64::NEG_INFINITY; t];
        for k in 0..t {
            let mut best = 0;
            for l in 1..t {
                if delta[l] + p.trans[i][l][k] > delta[best] + p.trans[i][best][k] {
                    best = l;
                }
            }
            back[i][k] = best;
            next[k] = delta[best] + p.trans[i][best][k] + p.emit[i][k];
        }
        delta = next;
    }
    let mut last = 0;
    for k in 1..t {
        if delta[k] > delta[last] {
            last = k;
        }
    }
    let score = delta[last];
    let mut path = vec![last; n];
    for i in (1..n).rev() {
        path[i - 1] = back[i][path[i]];
    }
    (path, score)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_potentials(rng: &mut ChaCha8Rng, n: usize, t: usize) -> Potentials {
        let mut g = || rng.gen_range(-2.0..2.0);
        let emit = (0..n).map(|_| (0..t).map(|_| g()).collect()).collect();
        let start = (0..t).map(|_| g()).collect();
        let trans = (0..n).map(|_| (0..t).map(|_| (0..t).map(|_| g()).collect()).collect()).collect();
        Potentials { emit, start, trans }
    }

    pub(crate) fn all_paths(n: usize, t: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|p: Vec<usize>| {
                    (0..t).map(move |k| {
                        let mut q = p.clone();
                        q.push(k);
                        q
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for n in 1..=4 {
            for t in 2..=4 {
                let p = random_potentials(&mut rng, n, t);
                let paths = all_paths(n, t);
                let scores: Vec<f64> = paths.iter().map(|y| p.score(y)).collect();
                assert!((log_partition(&p, None) - logsumexp(&scores)).abs() < 1e-9);
                let best = (0..paths.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
                let (vp, vs) = viterbi(&p);
                assert_eq!(vp, paths[best]);
                assert!((vs - scores[best]).abs() < 1e-9);
                let total: f64 = paths.iter().map(|y| sequence_logprob(&p, y).exp()).sum();
                assert!((total - 1.0).abs() < 1e-9);

                let m = marginals(&p, None);
                for i in 0..n {
                    for k in 0..t {
                        let brute: f64 = paths.iter().filter(|y| y[i] == k).map(|y| sequence_logprob(&p, y).exp()).sum();
                        assert!((m.unary[i][k] - brute).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn masked_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_potentials(&mut rng, 3, 3);
        let mask = vec![vec![true, false, false], vec![true, true, true], vec![false, true, false]];
        let brute: Vec<f64> =
            all_paths(3, 3).into_iter().filter(|y| y.iter().enumerate().all(|(i, &k)| mask[i][k])).map(|y| p.score(&y)).collect();
        assert!((log_partition(&p, Some(&mask)) - logsumexp(&brute)).abs() < 1e-9);
        let m = marginals(&p, Some(&mask));
        assert!(m.unary[0][1] == 0.0 && (m.unary[0][0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ties_go_to_o() {
        let p = Potentials { emit: vec![vec![0.0; 3]; 2], start: vec![0.0; 3], trans: vec![vec![vec![0.0; 3]; 3]; 2] };
        assert_eq!(viterbi(&p).0, vec![0, 0]);
        let mut q = p.clone();
        q.emit[1] = vec![0.0, 1.0, 1.0];
        assert_eq!(viterbi(&q).0, vec![0, 1]);
    }
}
