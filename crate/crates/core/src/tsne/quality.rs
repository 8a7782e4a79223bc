//! Layout quality: rank-based trustworthiness.

use ndarray::Array2;

use super::affinity::squared_distance;
use crate::par::Exec;

/// Neighbor order of every point, nearest first, ties broken by index.
fn neighbor_orders(x: &Array2<f64>, exec: Exec) -> Vec<Vec<usize>> {
    let n = x.nrows();
    exec.map_range(n, |i| {
        let mut d: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, squared_distance(x.row(i), x.row(j))))
            .collect();
        d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        d.into_iter().map(|(j, _)| j).collect()
    })
}

/// Trustworthiness of `layout` with respect to `original` at neighborhood size `k`.
///
/// Penalizes points that enter a point's `k` nearest layout neighbors while
/// ranking beyond `k` in the original space, by their excess rank. The penalty is
/// normalized by its worst case, `n * sum_{r = max(k+1, n-k)}^{n-1} (r - k)`, which
/// equals the usual `n k (2n - 3k - 1) / 2` for `k < n/2` and stays valid up to
/// `k = n - 1` (where the penalty is always zero and the result is 1).
pub fn trustworthiness(original: &Array2<f64>, layout: &Array2<f64>, k: usize, exec: Exec) -> f64 {
    let n = original.nrows();
    assert_eq!(n, layout.nrows(), "layout and original must have the same rows");
    assert!(k >= 1 && k < n, "k = {k} must be in 1..{n}");

    let orig = neighbor_orders(original, exec);
    let low = neighbor_orders(layout, exec);
    let penalties: Vec<u64> = exec.map_range(n, |i| {
        let mut rank = vec![0usize; n];
        for (r, &j) in orig[i].iter().enumerate() {
            rank[j] = r + 1;
        }
        low[i][..k]
            .iter()
            .map(|&j| rank[j])
            .filter(|&r| r > k)
            .map(|r| (r - k) as u64)
            .sum()
    });
    let penalty: u64 = penalties.iter().sum();
    let worst_per_point: u64 = ((k + 1).max(n - k)..n).map(|r| (r - k) as u64).sum();
    let worst = worst_per_point * n as u64;
    if worst == 0 {
        return 1.0;
    }
    1.0 - penalty as f64 / worst as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_case_normalizer_matches_closed_form() {
        for n in 4..30usize {
            for k in 1..n {
                if 2 * k < n {
                    let sum: usize = ((k + 1).max(n - k)..n).map(|r| r - k).sum();
                    assert_eq!(2 * sum, k * (2 * n - 3 * k - 1));
                }
            }
        }
    }

    #[test]
    fn identical_spaces_score_one() {
        let x = Array2::from_shape_fn((12, 2), |(i, j)| (i * i + 3 * j) as f64);
        assert_eq!(trustworthiness(&x, &x, 3, Exec::Sequential), 1.0);
        assert_eq!(trustworthiness(&x, &x, 11, Exec::Sequential), 1.0);
    }

    #[test]
    fn reversed_line_is_penalized() {
        // points on a line; layout folds the ends together
        let x = Array2::from_shape_fn((10, 1), |(i, _)| i as f64);
        let folded = Array2::from_shape_fn((10, 1), |(i, _)| ((i as f64) - 4.5).abs());
        let t = trustworthiness(&x, &folded, 2, Exec::Sequential);
        assert!((0.0..1.0).contains(&t));
    }
}
