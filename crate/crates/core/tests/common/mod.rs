//! Independent oracles and synthetic fixtures shared by the integration and
//! acceptance tests. Nothing here calls into the code under test except to
//! build inputs.
#![allow(dead_code)]

use datascope::tsne::{AffinityMatrix, TsneError};
use datascope::vectorize::{
    build_from_texts, CsrMatrix, RowNorm, VectorSpace, VectorizerConfig, Vocabulary, Weighting,
};
use datascope::Exec;
use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// Wraps a dense matrix as a vector space with synthetic term names.
pub fn space_from_dense(a: &Array2<f64>) -> VectorSpace {
    let (n, v) = a.dim();
    let terms: Vec<String> = (0..v).map(|j| format!("t{j:04}")).collect();
    let df = (0..v).map(|j| (0..n).filter(|&i| a[[i, j]] != 0.0).count()).collect();
    VectorSpace {
        vocabulary: Vocabulary {
            terms,
            document_frequency: df,
            n_documents: n,
        },
        matrix: CsrMatrix::from_dense(a),
        weighting: Weighting::Tfidf,
        row_norm: RowNorm::None,
        ids: (0..n as u64).collect(),
        labels: vec!["x".into(); n],
    }
}

/// Full SVD through nalgebra, singular values descending. Returns `(s, V)` with
/// `V` as `cols x min(rows, cols)`.
pub fn full_svd_oracle(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let (m, n) = a.dim();
    let dm = DMatrix::from_fn(m, n, |i, j| a[[i, j]]);
    let svd = dm.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = Array2::from_shape_fn((n, order.len()), |(r, c)| vt[(order[c], r)]);
    (s, v)
}

/// Largest entrywise difference between columns of `a` and `b`, allowing each
/// column a sign flip.
pub fn max_diff_up_to_sign(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    (0..a.ncols())
        .map(|c| {
            let plus = a.column(c).iter().zip(b.column(c)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let minus = a.column(c).iter().zip(b.column(c)).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
            plus.min(minus)
        })
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Perplexity `2^H` of row `i` recomputed directly from its bandwidth.
pub fn row_perplexity_from_sigma(x: &Array2<f64>, i: usize, sigma: f64) -> f64 {
    let n = x.nrows();
    let d2: Vec<f64> = (0..n)
        .map(|j| x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect();
    let w: Vec<f64> = (0..n)
        .map(|j| if j == i { 0.0 } else { (-d2[j] / (2.0 * sigma * sigma)).exp() })
        .collect();
    let z: f64 = w.iter().sum();
    let h: f64 = w
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let p = v / z;
            -p * p.log2()
        })
        .sum();
    2f64.powf(h)
}

/// KL(P || Q) straight from the definition.
pub fn kl_oracle(p: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let n = p.nrows();
    let mut num = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d2: f64 = y.row(i).iter().zip(y.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                num[[i, j]] = 1.0 / (1.0 + d2);
            }
        }
    }
    let z: f64 = num.sum();
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && p[[i, j]] > 0.0 {
                kl += p[[i, j]] * (p[[i, j]] / (num[[i, j]] / z)).ln();
            }
        }
    }
    kl
}

/// Central finite differences of `f` at `y` with step `h`.
pub fn finite_difference_gradient<F: Fn(&Array2<f64>) -> f64>(f: F, y: &Array2<f64>, h: f64) -> Array2<f64> {
    let mut g = Array2::zeros(y.raw_dim());
    let mut yp = y.clone();
    for idx in 0..y.len() {
        let (r, c) = (idx / y.ncols(), idx % y.ncols());
        let orig = yp[[r, c]];
        yp[[r, c]] = orig + h;
        let fp = f(&yp);
        yp[[r, c]] = orig - h;
        let fm = f(&yp);
        yp[[r, c]] = orig;
        g[[r, c]] = (fp - fm) / (2.0 * h);
    }
    g
}

/// `n` points split evenly between two isotropic Gaussians whose means are
/// `separation` apart along every axis.
pub fn gaussian_blobs(n: usize, d: usize, separation: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n / 2)).collect();
    let x = Array2::from_shape_fn((n, d), |(i, _)| normal.sample(&mut rng) + separation * labels[i] as f64);
    (x, labels)
}

/// Several Gaussian clusters with random means.
pub fn gaussian_mixture(n: usize, d: usize, clusters: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let means: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..d).map(|_| rng.random_range(-8.0..8.0)).collect())
        .collect();
    Array2::from_shape_fn((n, d), |(i, j)| means[i % clusters][j] + normal.sample(&mut rng))
}

/// Lloyd's algorithm with k = 2 seeded by the farthest pair from point 0.
pub fn two_means(points: &Array2<f64>) -> Vec<usize> {
    let n = points.nrows();
    let dist = |a: &[f64], i: usize| -> f64 {
        points.row(i).iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    let row = |i: usize| points.row(i).to_vec();
    let far_a = (0..n).max_by(|&a, &b| dist(&row(0), a).total_cmp(&dist(&row(0), b))).unwrap();
    let far_b = (0..n)
        .max_by(|&a, &b| dist(&row(far_a), a).total_cmp(&dist(&row(far_a), b)))
        .unwrap();
    let mut centers = [row(far_a), row(far_b)];
    let mut assign = vec![0usize; n];
    for _ in 0..100 {
        let next: Vec<usize> = (0..n)
            .map(|i| usize::from(dist(&centers[1], i) < dist(&centers[0], i)))
            .collect();
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| next[i] == c).collect();
            if !members.is_empty() {
                for (k, v) in center.iter_mut().enumerate() {
                    *v = members.iter().map(|&i| points[[i, k]]).sum::<f64>() / members.len() as f64;
                }
            }
        }
        if next == assign {
            break;
        }
        assign = next;
    }
    assign
}

/// Fraction of points on which two 2-way partitions agree, up to relabeling.
pub fn agreement(a: &[usize], b: &[usize]) -> f64 {
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64;
    same.max(1.0 - same)
}

pub struct TwoTopicCorpus {
    pub space: VectorSpace,
    /// Generating word distributions, one row per topic, columns in vocabulary order.
    pub generators: Array2<f64>,
}

/// Documents drawn from two topics over disjoint halves of a 20-word vocabulary.
pub fn two_topic_corpus(docs: usize, tokens_per_doc: usize, seed: u64) -> TwoTopicCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<String> = (0..20).map(|i| format!("w{i:02}")).collect();
    let mut texts = Vec::with_capacity(docs);
    for _ in 0..docs {
        let share: f64 = rng.random_range(0.0..1.0);
        let mut doc = Vec::with_capacity(tokens_per_doc);
        for _ in 0..tokens_per_doc {
            let topic = usize::from(rng.random::<f64>() >= share);
            doc.push(words[topic * 10 + rng.random_range(0..10)].clone());
        }
        texts.push(doc.join(" "));
    }
    let cfg = VectorizerConfig {
        min_df: 1,
        max_df_fraction: 1.0,
        stopwords: false,
        ..VectorizerConfig::counts()
    };
    let space = build_from_texts(
        (0..docs as u64).collect(),
        vec!["x".into(); docs],
        &texts,
        &cfg,
        Exec::Sequential,
    )
    .unwrap();
    let mut generators = Array2::zeros((2, space.vocabulary.len()));
    for (j, term) in space.vocabulary.terms.iter().enumerate() {
        let idx: usize = term[1..].parse().unwrap();
        generators[[idx / 10, j]] = 0.1;
    }
    TwoTopicCorpus { space, generators }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Best mean cosine between recovered and generating rows over both pairings.
pub fn two_topic_match(recovered: &Array2<f64>, generators: &Array2<f64>) -> f64 {
    let c = |r: usize, g: usize| cosine(&recovered.row(r).to_vec(), &generators.row(g).to_vec());
    let straight = c(0, 0).min(c(1, 1));
    let swapped = c(0, 1).min(c(1, 0));
    straight.max(swapped)
}

/// Asserts the `AffinityMatrix` invariants: symmetry, zero diagonal, unit sum.
pub fn affinity_invariants(a: &Result<AffinityMatrix, TsneError>) -> Result<(), String> {
    let a = a.as_ref().map_err(|e| e.to_string())?;
    let n = a.p.nrows();
    let sum: f64 = a.p.sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(format!("sum {sum}"));
    }
    for i in 0..n {
        if a.p[[i, i]] != 0.0 {
            return Err(format!("diagonal {i}"));
        }
        for j in 0..n {
            if a.p[[i, j]] != a.p[[j, i]] || a.p[[i, j]] < 0.0 {
                return Err(format!("entry {i},{j}"));
            }
        }
    }
    Ok(())
}
