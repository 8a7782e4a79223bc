//! End-to-end embedding runs: corpus -> vectors -> topic model -> t-SNE layout,
//! and images -> pixels -> t-SNE layout.

use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{EmbeddingLayout, Provenance, Subsample, TopicModelSpec};
use crate::mnist::ImageSet;
use crate::newsgroups::Corpus;
use crate::par::Exec;
use crate::topics::{lda_embed, lda_fit, lsi_embed, lsi_fit, LdaConfig, LsiConfig, TopicError};
use crate::tsne::{tsne, TsneConfig, TsneError};
use crate::vectorize::{build_from_texts, flatten_images, QuoteLines, VectorizeError, VectorizerConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Tsne(#[from] TsneError),
    #[error("subsample of {size} exceeds the {available} available samples")]
    SubsampleTooLarge { size: usize, available: usize },
    #[error("raw vectors are not supported for text; choose lsi or lda")]
    RawText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextPipeline {
    pub vectorizer: VectorizerConfig,
    pub model: TopicModelSpec,
    pub tsne: TsneConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<Subsample>,
}

impl TextPipeline {
    /// TF-IDF, LSI with `k` components, Barnes-Hut t-SNE.
    pub fn lsi(k: usize, seed: u64) -> Self {
        TextPipeline {
            vectorizer: VectorizerConfig::default(),
            model: TopicModelSpec::Lsi(LsiConfig {
                k,
                seed,
                ..LsiConfig::default()
            }),
            tsne: TsneConfig {
                seed,
                ..TsneConfig::barnes_hut()
            },
            subsample: None,
        }
    }

    /// Raw counts, LDA with `topics` topics, Barnes-Hut t-SNE.
    pub fn lda(topics: usize, iterations: usize, seed: u64) -> Self {
        TextPipeline {
            vectorizer: VectorizerConfig::counts(),
            model: TopicModelSpec::Lda(LdaConfig {
                topics,
                iterations,
                seed,
                ..LdaConfig::default()
            }),
            tsne: TsneConfig {
                seed,
                ..TsneConfig::barnes_hut()
            },
            subsample: None,
        }
    }
}

/// Coarse phases of a run, reported as each one starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Vectorize,
    TopicModel,
    Layout,
}

impl Stage {
    /// Share of a typical run finished when this stage starts.
    pub fn fraction(self) -> f64 {
        match self {
            Stage::Vectorize => 0.0,
            Stage::TopicModel => 0.1,
            Stage::Layout => 0.4,
        }
    }
}

/// Topic-space features and the layout computed from them; rows align with `layout.ids`.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub features: Array2<f64>,
    pub layout: EmbeddingLayout,
    pub kl_after_exaggeration: Option<f64>,
}

/// Sorted positions of a seeded uniform subsample.
pub fn subsample_positions(available: usize, spec: &Subsample) -> Result<Vec<usize>, PipelineError> {
    if spec.size > available {
        return Err(PipelineError::SubsampleTooLarge {
            size: spec.size,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut picked = sample(&mut rng, available, spec.size).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

pub fn embed_corpus(corpus: &Corpus, cfg: &TextPipeline, exec: Exec) -> Result<PipelineOutput, PipelineError> {
    embed_corpus_observed(corpus, cfg, exec, |_| {})
}

pub fn embed_corpus_observed(
    corpus: &Corpus,
    cfg: &TextPipeline,
    exec: Exec,
    mut progress: impl FnMut(Stage),
) -> Result<PipelineOutput, PipelineError> {
    progress(Stage::Vectorize);
    let positions: Vec<usize> = match &cfg.subsample {
        Some(s) => subsample_positions(corpus.len(), s)?,
        None => (0..corpus.len()).collect(),
    };
    let docs: Vec<_> = positions.iter().map(|&i| &corpus.documents[i]).collect();
    let include = cfg.vectorizer.quote_lines == QuoteLines::Include;
    let texts = exec.map_slice(&docs, |d| d.body_text(include));
    let ids: Vec<u64> = docs.iter().map(|d| d.id).collect();
    let labels: Vec<String> = docs.iter().map(|d| d.label.clone()).collect();
    let space = build_from_texts(ids.clone(), labels.clone(), &texts, &cfg.vectorizer, exec)?;
    tracing::info!(
        documents = space.n_documents(),
        terms = space.vocabulary.len(),
        "vectorized"
    );

    progress(Stage::TopicModel);
    let features = match &cfg.model {
        TopicModelSpec::Lsi(c) => lsi_embed(&lsi_fit(&space, c)?, &space)?,
        TopicModelSpec::Lda(c) => lda_embed(&lda_fit(&space, c)?),
        TopicModelSpec::Raw => return Err(PipelineError::RawText),
    };
    progress(Stage::Layout);
    let mut tsne_cfg = cfg.tsne.clone();
    tsne_cfg.exec = exec;
    let run = tsne(&features, &tsne_cfg)?;
    let provenance = Provenance {
        dataset: "20ng".into(),
        dataset_version: corpus.version.as_str().into(),
        vectorizer: Some(cfg.vectorizer.clone()),
        topic_model: cfg.model.clone(),
        tsne: cfg.tsne.clone(),
        seed: cfg.tsne.seed,
        subsample: cfg.subsample.clone(),
    };
    let kl_after_exaggeration = run.kl_after_exaggeration;
    Ok(PipelineOutput {
        layout: EmbeddingLayout::from_run(ids, labels, &run, provenance),
        features,
        kl_after_exaggeration,
    })
}

/// Lays out raw pixel vectors. Ids are the samples' 0-based positions in the split.
pub fn embed_images(
    set: &ImageSet,
    tsne_cfg: &TsneConfig,
    subsample: Option<&Subsample>,
    exec: Exec,
) -> Result<PipelineOutput, PipelineError> {
    embed_images_observed(set, tsne_cfg, subsample, exec, |_| {})
}

pub fn embed_images_observed(
    set: &ImageSet,
    tsne_cfg: &TsneConfig,
    subsample: Option<&Subsample>,
    exec: Exec,
    mut progress: impl FnMut(Stage),
) -> Result<PipelineOutput, PipelineError> {
    progress(Stage::Vectorize);
    let all = flatten_images(set);
    let positions: Vec<usize> = match subsample {
        Some(s) => subsample_positions(set.len(), s)?,
        None => (0..set.len()).collect(),
    };
    let features = all.select(Axis(0), &positions);
    let ids: Vec<u64> = positions.iter().map(|&p| set.samples[p].index as u64).collect();
    let labels: Vec<String> = positions.iter().map(|&p| set.samples[p].label.to_string()).collect();
    progress(Stage::Layout);
    let mut cfg = tsne_cfg.clone();
    cfg.exec = exec;
    let run = tsne(&features, &cfg)?;
    let provenance = Provenance {
        dataset: "mnist".into(),
        dataset_version: set.split.as_str().into(),
        vectorizer: None,
        topic_model: TopicModelSpec::Raw,
        tsne: tsne_cfg.clone(),
        seed: tsne_cfg.seed,
        subsample: subsample.cloned(),
    };
    let kl_after_exaggeration = run.kl_after_exaggeration;
    Ok(PipelineOutput {
        layout: EmbeddingLayout::from_run(ids, labels, &run, provenance),
        features,
        kl_after_exaggeration,
    })
}

/// Mean pairwise layout distance within `label` and between `label` and all other points.
pub fn intra_inter_distance(layout: &EmbeddingLayout, label: &str) -> Option<(f64, f64)> {
    let inside: Vec<usize> = (0..layout.len()).filter(|&i| layout.labels[i] == label).collect();
    let outside: Vec<usize> = (0..layout.len()).filter(|&i| layout.labels[i] != label).collect();
    if inside.len() < 2 || outside.is_empty() {
        return None;
    }
    let p = &layout.points;
    let d = |a: usize, b: usize| ((p[[a, 0]] - p[[b, 0]]).powi(2) + (p[[a, 1]] - p[[b, 1]]).powi(2)).sqrt();
    let mut intra = 0.0;
    let mut pairs = 0usize;
    for (x, &a) in inside.iter().enumerate() {
        for &b in &inside[x + 1..] {
            intra += d(a, b);
            pairs += 1;
        }
    }
    let mut inter = 0.0;
    for &a in &inside {
        for &b in &outside {
            inter += d(a, b);
        }
    }
    Some((intra / pairs as f64, inter / (inside.len() * outside.len()) as f64))
}
