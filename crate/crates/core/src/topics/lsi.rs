use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::svd::randomized_svd;
use super::TopicError;
use crate::vectorize::{RowNorm, VectorSpace, Vocabulary, Weighting};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LsiConfig {
    pub k: usize,
    pub oversample: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl Default for LsiConfig {
    fn default() -> Self {
        LsiConfig {
            k: 100,
            oversample: 10,
            power_iterations: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsiModel {
    pub config: LsiConfig,
    pub singular_values: Array1<f64>,
    /// `V x k`, orthonormal columns.
    pub term_factors: Array2<f64>,
    pub vocabulary: Vocabulary,
    pub weighting: Weighting,
    pub row_norm: RowNorm,
    /// Number of nonzero singular values among the first `k`.
    pub effective_rank: usize,
}

impl LsiModel {
    /// `true` when fewer than `k` nonzero singular values exist.
    pub fn rank_deficient(&self) -> bool {
        self.effective_rank < self.config.k
    }
}

/// Top-`k` singular triplets of the weighted matrix. Deterministic given the seed.
/// Rank deficiency is flagged on the model, not returned as an error.
pub fn lsi_fit(space: &VectorSpace, config: &LsiConfig) -> Result<LsiModel, TopicError> {
    let max = space.matrix.rows().min(space.matrix.cols());
    if config.k < 1 || config.k > max {
        return Err(TopicError::InvalidComponents { k: config.k, max });
    }
    let svd = randomized_svd(
        &space.matrix,
        config.k,
        config.oversample,
        config.power_iterations,
        config.seed,
    );
    let effective_rank = svd.s.iter().filter(|&&s| s > 0.0).count();
    if effective_rank < config.k {
        tracing::warn!(k = config.k, effective_rank, "matrix has fewer nonzero singular values than k");
    }
    Ok(LsiModel {
        config: config.clone(),
        singular_values: svd.s,
        term_factors: svd.v,
        vocabulary: space.vocabulary.clone(),
        weighting: space.weighting,
        row_norm: space.row_norm,
        effective_rank,
    })
}

/// Projects documents onto the components: `X * term_factors` (`N x k`).
pub fn lsi_embed(model: &LsiModel, space: &VectorSpace) -> Result<Array2<f64>, TopicError> {
    if model.vocabulary.terms != space.vocabulary.terms {
        return Err(TopicError::VocabularyMismatch);
    }
    Ok(space.matrix.mul_dense(&model.term_factors))
}
