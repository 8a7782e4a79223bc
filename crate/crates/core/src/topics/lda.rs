use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TopicError;
use crate::vectorize::{VectorSpace, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaConfig {
    pub topics: usize,
    /// Symmetric document-topic prior; `None` means `50 / topics`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            topics: 20,
            alpha: None,
            beta: 0.01,
            iterations: 500,
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }
}

/// Sampler state: count tables plus the topic of every token.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaState {
    pub topic_word: Array2<u32>,
    pub doc_topic: Array2<u32>,
    pub topic_totals: Vec<u64>,
    /// Word id of each token, grouped by document.
    pub tokens: Vec<Vec<u32>>,
    pub assignments: Vec<Vec<u32>>,
}

impl LdaState {
    /// Checks the bookkeeping identities against the assignments, exactly.
    pub fn counts_consistent(&self) -> bool {
        let (k, v) = self.topic_word.dim();
        let mut tw = Array2::<u32>::zeros((k, v));
        let mut dt = Array2::<u32>::zeros((self.tokens.len(), k));
        for (d, (words, topics)) in self.tokens.iter().zip(&self.assignments).enumerate() {
            if words.len() != topics.len() {
                return false;
            }
            for (&w, &z) in words.iter().zip(topics) {
                tw[[z as usize, w as usize]] += 1;
                dt[[d, z as usize]] += 1;
            }
        }
        let totals_ok = (0..k).all(|t| self.topic_word.row(t).iter().map(|&c| c as u64).sum::<u64>() == self.topic_totals[t]);
        let rows_ok = self
            .tokens
            .iter()
            .enumerate()
            .all(|(d, w)| self.doc_topic.row(d).iter().map(|&c| c as usize).sum::<usize>() == w.len());
        tw == self.topic_word && dt == self.doc_topic && totals_ok && rows_ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub topic_word_counts: Array2<u32>,
    pub doc_topic_counts: Array2<u32>,
    pub topic_totals: Vec<u64>,
    pub vocabulary: Vocabulary,
}

impl LdaModel {
    pub fn vocab_size(&self) -> usize {
        self.topic_word_counts.ncols()
    }

    /// Smoothed topic-word distributions `(n_kw + beta) / (n_k + V beta)`.
    pub fn topic_word_distribution(&self) -> Array2<f64> {
        let v = self.vocab_size() as f64;
        let mut phi = self.topic_word_counts.mapv(|c| c as f64 + self.beta);
        for (k, mut row) in phi.outer_iter_mut().enumerate() {
            row /= self.topic_totals[k] as f64 + v * self.beta;
        }
        phi
    }
}

pub fn lda_fit(space: &VectorSpace, config: &LdaConfig) -> Result<LdaModel, TopicError> {
    lda_fit_observed(space, config, |_, _| {})
}

/// Collapsed Gibbs sampling. `observer` is called after every sweep with the sweep number.
///
/// Each token's topic is resampled from
/// `p(z = k) ∝ (n_dk + alpha) (n_kw + beta) / (n_k + V beta)` with the token itself
/// removed from the counts.
pub fn lda_fit_observed<F>(space: &VectorSpace, config: &LdaConfig, mut observer: F) -> Result<LdaModel, TopicError>
where
    F: FnMut(usize, &LdaState),
{
    if !space.is_integer_counts() {
        return Err(TopicError::WeightingMismatch);
    }
    if config.topics < 1 {
        return Err(TopicError::InvalidConfig("topic count must be at least 1".into()));
    }
    if config.iterations < 1 {
        return Err(TopicError::InvalidConfig("iterations must be at least 1".into()));
    }
    let alpha = config.alpha();
    let beta = config.beta;
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(TopicError::InvalidConfig("alpha and beta must be positive".into()));
    }

    let k = config.topics;
    let v = space.matrix.cols();
    let n = space.matrix.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let tokens: Vec<Vec<u32>> = (0..n)
        .map(|d| {
            let (idx, val) = space.matrix.row(d);
            idx.iter()
                .zip(val)
                .flat_map(|(&w, &c)| std::iter::repeat_n(w as u32, c as usize))
                .collect()
        })
        .collect();

    let mut state = LdaState {
        topic_word: Array2::zeros((k, v)),
        doc_topic: Array2::zeros((n, k)),
        topic_totals: vec![0; k],
        assignments: Vec::with_capacity(n),
        tokens,
    };
    for d in 0..n {
        let z: Vec<u32> = state.tokens[d].iter().map(|_| rng.random_range(0..k as u32)).collect();
        for (&w, &t) in state.tokens[d].iter().zip(&z) {
            state.topic_word[[t as usize, w as usize]] += 1;
            state.doc_topic[[d, t as usize]] += 1;
            state.topic_totals[t as usize] += 1;
        }
        state.assignments.push(z);
    }

    let vbeta = v as f64 * beta;
    let mut weights = vec![0.0f64; k];
    for sweep in 0..config.iterations {
        for d in 0..n {
            for i in 0..state.tokens[d].len() {
                let w = state.tokens[d][i] as usize;
                let old = state.assignments[d][i] as usize;
                state.topic_word[[old, w]] -= 1;
                state.doc_topic[[d, old]] -= 1;
                state.topic_totals[old] -= 1;

                let mut total = 0.0;
                for (t, slot) in weights.iter_mut().enumerate() {
                    let p = (state.doc_topic[[d, t]] as f64 + alpha) * (state.topic_word[[t, w]] as f64 + beta)
                        / (state.topic_totals[t] as f64 + vbeta);
                    total += p;
                    *slot = total;
                }
                let u = rng.random::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                state.topic_word[[new, w]] += 1;
                state.doc_topic[[d, new]] += 1;
                state.topic_totals[new] += 1;
                state.assignments[d][i] = new as u32;
            }
        }
        observer(sweep, &state);
    }

    Ok(LdaModel {
        topics: k,
        alpha,
        beta,
        iterations: config.iterations,
        seed: config.seed,
        topic_word_counts: state.topic_word,
        doc_topic_counts: state.doc_topic,
        topic_totals: state.topic_totals,
        vocabulary: space.vocabulary.clone(),
    })
}

/// Document-topic proportions `(n_dk + alpha) / (len_d + K alpha)`; rows sum to 1.
pub fn lda_embed(model: &LdaModel) -> Array2<f64> {
    let k = model.topics as f64;
    let mut out = model.doc_topic_counts.mapv(|c| c as f64 + model.alpha);
    for (mut row, counts) in out.outer_iter_mut().zip(model.doc_topic_counts.outer_iter()) {
        let len = counts.iter().map(|&c| c as u64).sum::<u64>() as f64;
        row /= len + k * model.alpha;
    }
    out
}
