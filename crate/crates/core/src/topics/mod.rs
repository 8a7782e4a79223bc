//! Topic models producing low-dimensional document representations:
//! LSI (truncated SVD of the weighted matrix) and LDA (collapsed Gibbs sampling).

mod lda;
mod lsi;
mod persist;
pub mod svd;

use thiserror::Error;

pub use lda::{lda_embed, lda_fit, lda_fit_observed, LdaConfig, LdaModel, LdaState};
pub use lsi::{lsi_embed, lsi_fit, LsiConfig, LsiModel};

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("k = {k} must be in 1..={max}")]
    InvalidComponents { k: usize, max: usize },
    #[error("model vocabulary does not match the vector space")]
    VocabularyMismatch,
    #[error("sampler needs integer counts without normalization")]
    WeightingMismatch,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("bad model file: {0}")]
    BadModelFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
