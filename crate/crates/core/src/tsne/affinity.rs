//! High-dimensional affinities with per-point bandwidth calibration.

use ndarray::{Array2, ArrayView1};

use super::TsneError;
use crate::par::Exec;

const ENTROPY_TOL: f64 = 1e-5;
const MAX_BISECTION_STEPS: usize = 200;

/// Joint affinities `P`: symmetric, zero diagonal, summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub p: Array2<f64>,
    pub perplexity: f64,
    /// Gaussian bandwidth of each point's conditional distribution.
    pub sigmas: Vec<f64>,
}

/// Sparse symmetric affinities over k-nearest-neighbor graphs, row-compressed.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAffinities {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub perplexity: f64,
    pub sigmas: Vec<f64>,
}

impl SparseAffinities {
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut p = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                p[[i, j]] = v;
            }
        }
        p
    }
}

pub(crate) fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Conditional distribution over `dists` (squared distances to the other points)
/// whose base-2 entropy matches `log2(perplexity)`. Returns `(probabilities, beta)`
/// where `beta = 1 / (2 sigma^2)`.
pub(crate) fn calibrate_row(dists: &[f64], perplexity: f64) -> (Vec<f64>, f64) {
    let target = perplexity.log2();
    let dmin = dists.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut beta = 1.0;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut probs = vec![0.0; dists.len()];
    let mut best = (f64::INFINITY, beta);

    for _ in 0..MAX_BISECTION_STEPS {
        let entropy = row_entropy(dists, dmin, beta, &mut probs);
        let diff = entropy - target;
        if diff.abs() < best.0 {
            best = (diff.abs(), beta);
        }
        if diff.abs() < ENTROPY_TOL {
            return (probs, beta);
        }
        if diff > 0.0 {
            // too flat: sharpen
            lo = beta;
            beta = if hi.is_infinite() { beta * 2.0 } else { (beta + hi) / 2.0 };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
    }
    let beta = best.1;
    row_entropy(dists, dmin, beta, &mut probs);
    (probs, beta)
}

/// Fills `probs` with the normalized Gaussian kernel and returns its base-2 entropy.
fn row_entropy(dists: &[f64], dmin: f64, beta: f64, probs: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    for (p, &d) in probs.iter_mut().zip(dists) {
        *p = (-(d - dmin) * beta).exp();
        sum += *p;
    }
    let mut h = 0.0;
    for p in probs.iter_mut() {
        *p /= sum;
        if *p > 0.0 {
            h -= *p * p.log2();
        }
    }
    h
}

fn check_perplexity(perplexity: f64, n: usize) -> Result<(), TsneError> {
    if !(perplexity > 1.0 && perplexity < n as f64) {
        return Err(TsneError::PerplexityOutOfRange { perplexity, n });
    }
    Ok(())
}

/// Dense joint affinities `p_ij = (p_{j|i} + p_{i|j}) / 2N`.
pub fn compute_affinities(x: &Array2<f64>, perplexity: f64, exec: Exec) -> Result<AffinityMatrix, TsneError> {
    let n = x.nrows();
    check_perplexity(perplexity, n)?;
    let rows: Vec<(Vec<f64>, f64)> = exec.map_range(n, |i| {
        let dists: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| squared_distance(x.row(i), x.row(j)))
            .collect();
        calibrate_row(&dists, perplexity)
    });
    let mut cond = Array2::zeros((n, n));
    let mut sigmas = Vec::with_capacity(n);
    for (i, (probs, beta)) in rows.into_iter().enumerate() {
        let others = (0..n).filter(|&j| j != i);
        for (j, p) in others.zip(probs) {
            cond[[i, j]] = p;
        }
        sigmas.push((1.0 / (2.0 * beta)).sqrt());
    }
    let denom = 2.0 * n as f64;
    let p = Array2::from_shape_fn((n, n), |(i, j)| (cond[[i, j]] + cond[[j, i]]) / denom);
    Ok(AffinityMatrix { p, perplexity, sigmas })
}

/// Indices of the `k` nearest other points to each row, nearest first (ties by index).
pub fn knn(x: &Array2<f64>, k: usize, exec: Exec) -> Vec<Vec<(usize, f64)>> {
    let n = x.nrows();
    exec.map_range(n, |i| {
        let mut d: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, squared_distance(x.row(i), x.row(j))))
            .collect();
        let cmp = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
        if k < d.len() {
            d.select_nth_unstable_by(k, cmp);
            d.truncate(k);
        }
        d.sort_by(cmp);
        d
    })
}

/// Affinities restricted to each point's `floor(3 * perplexity)` nearest neighbors.
pub fn compute_sparse_affinities(x: &Array2<f64>, perplexity: f64, exec: Exec) -> Result<SparseAffinities, TsneError> {
    let n = x.nrows();
    check_perplexity(perplexity, n)?;
    let k = ((3.0 * perplexity) as usize).clamp(1, n - 1);
    let neighbors = knn(x, k, exec);
    let rows: Vec<(Vec<f64>, f64)> = exec.map_slice(&neighbors, |nb| {
        let dists: Vec<f64> = nb.iter().map(|&(_, d)| d).collect();
        calibrate_row(&dists, perplexity.min(k as f64 - 1e-9).max(1.0 + 1e-9))
    });

    // symmetrize: collect (i, j, p_{j|i}) in both directions
    let mut triplets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut sigmas = Vec::with_capacity(n);
    for (i, (nb, (probs, beta))) in neighbors.iter().zip(rows).enumerate() {
        for (&(j, _), p) in nb.iter().zip(probs) {
            triplets[i].push((j, p));
            triplets[j].push((i, p));
        }
        sigmas.push((1.0 / (2.0 * beta)).sqrt());
    }
    let denom = 2.0 * n as f64;
    let mut indptr = vec![0];
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for row in &mut triplets {
        row.sort_by_key(|&(j, _)| j);
        let mut last: Option<usize> = None;
        for &(j, p) in row.iter() {
            if last == Some(j) {
                *values.last_mut().unwrap() += p / denom;
            } else {
                indices.push(j);
                values.push(p / denom);
                last = Some(j);
            }
        }
        indptr.push(indices.len());
    }
    Ok(SparseAffinities {
        n,
        indptr,
        indices,
        values,
        perplexity,
        sigmas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn equilateral_triangle_rows_are_uniform() {
        let h = 3f64.sqrt() / 2.0;
        let x = array![[0.0, 0.0], [1.0, 0.0], [0.5, h]];
        let a = compute_affinities(&x, 2.0, Exec::Sequential).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 1.0 / 6.0 };
                assert!((a.p[[i, j]] - want).abs() < 1e-12, "{i},{j}: {}", a.p[[i, j]]);
            }
        }
    }

    #[test]
    fn perplexity_bounds() {
        let x = array![[0.0], [1.0], [3.0]];
        assert!(compute_affinities(&x, 1.0, Exec::Sequential).is_err());
        assert!(compute_affinities(&x, 3.0, Exec::Sequential).is_err());
        assert!(compute_affinities(&x, f64::NAN, Exec::Sequential).is_err());
    }

    #[test]
    fn sparse_matches_dense_when_all_neighbors_kept() {
        let x = Array2::from_shape_fn((8, 3), |(i, j)| ((i * 7 + j * 3) % 5) as f64 + 0.1 * i as f64);
        let dense = compute_affinities(&x, 2.5, Exec::Sequential).unwrap();
        let sparse = compute_sparse_affinities(&x, 2.5, Exec::Sequential).unwrap();
        let sd = sparse.to_dense();
        assert!((sd.sum() - 1.0).abs() < 1e-12);
        for (a, b) in dense.p.iter().zip(sd.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn knn_orders_by_distance_then_index() {
        let x = array![[0.0], [1.0], [-1.0], [5.0]];
        let nb = knn(&x, 2, Exec::Sequential);
        assert_eq!(nb[0], vec![(1, 1.0), (2, 1.0)]);
        assert_eq!(nb[3].iter().map(|p| p.0).collect::<Vec<_>>(), vec![1, 0]);
    }
}
