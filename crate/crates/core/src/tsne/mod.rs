//! t-SNE: perplexity-calibrated affinities, KL-divergence gradient descent with
//! momentum and adaptive gains, exact or Barnes-Hut gradients.

mod affinity;
pub mod barnes_hut;
mod exact;
mod quality;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Exec;

pub use affinity::{compute_affinities, compute_sparse_affinities, knn, AffinityMatrix, SparseAffinities};
pub use exact::{gradient_flat, kl_divergence, kl_divergence_flat, kl_gradient};
pub use quality::trustworthiness;

#[derive(Debug, Error, PartialEq)]
pub enum TsneError {
    #[error("perplexity {perplexity} must lie strictly between 1 and N = {n}")]
    PerplexityOutOfRange { perplexity: f64, n: usize },
    #[error("t-SNE needs at least 5 points, got {0}")]
    TooFewPoints(usize),
    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GradientMethod {
    Exact,
    BarnesHut { theta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    /// `None` uses `N / 12`.
    pub learning_rate: Option<f64>,
    pub iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub adaptive_gains: bool,
    pub init_std: f64,
    pub seed: u64,
    pub method: GradientMethod,
    /// Record the KL divergence every this many iterations (0 disables the trace).
    pub kl_every: usize,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            learning_rate: None,
            iterations: 1000,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            adaptive_gains: true,
            init_std: 1e-4,
            seed: 0,
            method: GradientMethod::Exact,
            kl_every: 0,
            exec: Exec::default(),
        }
    }
}

impl TsneConfig {
    /// Barnes-Hut with `theta = 0.5`, the usual choice for large inputs.
    pub fn barnes_hut() -> Self {
        TsneConfig {
            method: GradientMethod::BarnesHut { theta: 0.5 },
            ..Self::default()
        }
    }

    pub fn learning_rate_for(&self, n: usize) -> f64 {
        self.learning_rate.unwrap_or(n as f64 / 12.0)
    }
}

/// Output of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct TsneRun {
    /// `N x 2`.
    pub points: Array2<f64>,
    pub final_kl: f64,
    /// KL (unexaggerated) at the end of the early-exaggeration phase.
    pub kl_after_exaggeration: Option<f64>,
    pub kl_trace: Vec<(usize, f64)>,
}

/// Affinities in either representation.
#[derive(Debug, Clone)]
pub enum Affinities {
    Dense(AffinityMatrix),
    Sparse(SparseAffinities),
}

impl Affinities {
    fn n(&self) -> usize {
        match self {
            Affinities::Dense(a) => a.p.nrows(),
            Affinities::Sparse(s) => s.n,
        }
    }
}

/// Embeds the rows of `x` in two dimensions.
pub fn tsne(x: &Array2<f64>, config: &TsneConfig) -> Result<TsneRun, TsneError> {
    let n = x.nrows();
    if n < 5 {
        return Err(TsneError::TooFewPoints(n));
    }
    let aff = match config.method {
        GradientMethod::Exact => Affinities::Dense(compute_affinities(x, config.perplexity, config.exec)?),
        GradientMethod::BarnesHut { .. } => {
            Affinities::Sparse(compute_sparse_affinities(x, config.perplexity, config.exec)?)
        }
    };
    optimize(&aff, config)
}

fn objective(aff: &Affinities, y: &[f64], config: &TsneConfig) -> f64 {
    match (aff, config.method) {
        (Affinities::Dense(a), _) => kl_divergence_flat(&a.p, y, config.exec),
        (Affinities::Sparse(s), GradientMethod::BarnesHut { theta }) => barnes_hut::kl_bh(s, y, theta, config.exec),
        (Affinities::Sparse(s), GradientMethod::Exact) => barnes_hut::kl_bh(s, y, 0.0, config.exec),
    }
}

/// Gradient descent on precomputed affinities.
pub fn optimize(aff: &Affinities, config: &TsneConfig) -> Result<TsneRun, TsneError> {
    let n = aff.n();
    if n < 5 {
        return Err(TsneError::TooFewPoints(n));
    }
    if config.iterations == 0 {
        return Err(TsneError::InvalidConfig("iterations must be positive".into()));
    }
    let lr = config.learning_rate_for(n);
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(TsneError::InvalidConfig(format!("learning rate {lr} must be positive")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, config.init_std)
        .map_err(|e| TsneError::InvalidConfig(format!("init_std: {e}")))?;
    let mut y: Vec<f64> = (0..2 * n).map(|_| normal.sample(&mut rng)).collect();
    let mut update = vec![0.0; 2 * n];
    let mut gains = vec![1.0f64; 2 * n];
    let mut grad = vec![0.0; 2 * n];
    let mut kl_trace = Vec::new();
    let mut kl_after_exaggeration = None;

    for iter in 0..config.iterations {
        let exaggerating = iter < config.exaggeration_iterations;
        let exaggeration = if exaggerating { config.early_exaggeration } else { 1.0 };
        let momentum = if iter < config.momentum_switch {
            config.initial_momentum
        } else {
            config.final_momentum
        };

        match (aff, config.method) {
            (Affinities::Dense(a), _) => gradient_flat(&a.p, &y, exaggeration, &mut grad, config.exec),
            (Affinities::Sparse(s), GradientMethod::BarnesHut { theta }) => {
                barnes_hut::gradient_bh(s, &y, exaggeration, theta, &mut grad, config.exec);
            }
            (Affinities::Sparse(s), GradientMethod::Exact) => {
                barnes_hut::gradient_bh(s, &y, exaggeration, 0.0, &mut grad, config.exec);
            }
        }

        for d in 0..2 * n {
            if config.adaptive_gains {
                gains[d] = if (grad[d] > 0.0) != (update[d] > 0.0) {
                    gains[d] + 0.2
                } else {
                    (gains[d] * 0.8).max(0.01)
                };
            }
            update[d] = momentum * update[d] - lr * gains[d] * grad[d];
            y[d] += update[d];
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(TsneError::NonFiniteLoss { iteration: iter });
        }
        // translation does not change the objective
        for axis in 0..2 {
            let mean = (0..n).map(|i| y[2 * i + axis]).sum::<f64>() / n as f64;
            for i in 0..n {
                y[2 * i + axis] -= mean;
            }
        }

        let at_exaggeration_end = config.exaggeration_iterations > 0 && iter + 1 == config.exaggeration_iterations;
        let traced = config.kl_every > 0 && (iter + 1) % config.kl_every == 0;
        if at_exaggeration_end || traced {
            let kl = objective(aff, &y, config);
            if !kl.is_finite() {
                return Err(TsneError::NonFiniteLoss { iteration: iter });
            }
            if at_exaggeration_end {
                kl_after_exaggeration = Some(kl);
            }
            if traced {
                kl_trace.push((iter + 1, kl));
            }
        }
    }

    let final_kl = objective(aff, &y, config);
    if !final_kl.is_finite() {
        return Err(TsneError::NonFiniteLoss {
            iteration: config.iterations,
        });
    }
    Ok(TsneRun {
        points: Array2::from_shape_vec((n, 2), y).expect("2N coordinates"),
        final_kl,
        kl_after_exaggeration,
        kl_trace,
    })
}
