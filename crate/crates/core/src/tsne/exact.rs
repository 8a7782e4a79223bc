//! Exact O(N^2) objective and gradient.

use ndarray::Array2;

use crate::par::Exec;

/// Student-t kernel `1 / (1 + |y_i - y_j|^2)` on flat 2-D coordinates.
#[inline]
pub(crate) fn kernel(y: &[f64], i: usize, j: usize) -> f64 {
    let dx = y[2 * i] - y[2 * j];
    let dy = y[2 * i + 1] - y[2 * j + 1];
    1.0 / (1.0 + dx * dx + dy * dy)
}

fn normalizer(y: &[f64], n: usize, exec: Exec) -> f64 {
    exec.map_range(n, |i| (0..n).filter(|&j| j != i).map(|j| kernel(y, i, j)).sum::<f64>())
        .into_iter()
        .sum()
}

/// `KL(P || Q)` for a flat `2N` layout.
pub fn kl_divergence_flat(p: &Array2<f64>, y: &[f64], exec: Exec) -> f64 {
    let n = p.nrows();
    let z = normalizer(y, n, exec);
    exec.map_range(n, |i| {
        let mut acc = 0.0;
        for j in 0..n {
            let pij = p[[i, j]];
            if j != i && pij > 0.0 {
                let q = kernel(y, i, j) / z;
                acc += pij * (pij / q).ln();
            }
        }
        acc
    })
    .into_iter()
    .sum()
}

/// Gradient `4 sum_j (s p_ij - q_ij)(y_i - y_j) / (1 + |y_i - y_j|^2)`, where
/// `s` is the exaggeration factor. Written into `grad` (length `2N`).
pub fn gradient_flat(p: &Array2<f64>, y: &[f64], exaggeration: f64, grad: &mut [f64], exec: Exec) {
    let n = p.nrows();
    let z = normalizer(y, n, exec);
    exec.for_each_chunk_mut(grad, 2, |i, g| {
        let (mut gx, mut gy) = (0.0, 0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            let num = kernel(y, i, j);
            let mult = (exaggeration * p[[i, j]] - num / z) * num;
            gx += mult * (y[2 * i] - y[2 * j]);
            gy += mult * (y[2 * i + 1] - y[2 * j + 1]);
        }
        g[0] = 4.0 * gx;
        g[1] = 4.0 * gy;
    });
}

/// `KL(P || Q)` for an `N x 2` layout.
pub fn kl_divergence(p: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let flat: Vec<f64> = y.iter().cloned().collect();
    kl_divergence_flat(p, &flat, Exec::Sequential)
}

/// Gradient of `KL(P || Q)` with respect to an `N x 2` layout.
pub fn kl_gradient(p: &Array2<f64>, y: &Array2<f64>) -> Array2<f64> {
    let flat: Vec<f64> = y.iter().cloned().collect();
    let mut g = vec![0.0; flat.len()];
    gradient_flat(p, &flat, 1.0, &mut g, Exec::Sequential);
    Array2::from_shape_vec(y.raw_dim(), g).expect("shape preserved")
}
