//! Dense and randomized singular value decompositions.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::vectorize::CsrMatrix;

/// Thin SVD `a = u * diag(s) * vt^T` with `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    /// Right singular vectors as columns (`n x r`).
    pub v: Array2<f64>,
}

/// One-sided Jacobi SVD of an `m x n` matrix with `m >= n`.
///
/// Orthogonalizes the columns of `a` by plane rotations; converged column norms
/// are the singular values. Columns for zero singular values are left as zeros in `u`.
pub fn jacobi_svd(a: &Array2<f64>) -> Svd {
    let (m, n) = a.dim();
    assert!(m >= n, "jacobi_svd expects a tall matrix, got {m}x{n}");
    let mut w = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let eps = 1e-15;

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (x, y) = (w[[i, p]], w[[i, q]]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[[i, p]], w[[i, q]]);
                    w[[i, p]] = c * x - s * y;
                    w[[i, q]] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[[i, p]], v[[i, q]]);
                    v[[i, p]] = c * x - s * y;
                    v[[i, q]] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| w.column(j).dot(&w.column(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));
    let smax = norms.iter().cloned().fold(0.0, f64::max);

    let mut u = Array2::zeros((m, n));
    let mut vs = Array2::zeros((n, n));
    let mut s = Array1::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = norms[src];
        vs.column_mut(dst).assign(&v.column(src));
        if norms[src] > smax * 1e-14 && norms[src] > 0.0 {
            u.column_mut(dst).assign(&(&w.column(src) / norms[src]));
        }
    }
    Svd { u, s, v: vs }
}

/// Modified Gram-Schmidt, applied twice. Columns that vanish are zeroed.
pub fn orthonormalize(y: &mut Array2<f64>) {
    let k = y.ncols();
    for _pass in 0..2 {
        for j in 0..k {
            for i in 0..j {
                let proj = y.column(i).dot(&y.column(j));
                let ci = y.column(i).to_owned();
                y.column_mut(j).scaled_add(-proj, &ci);
            }
            let norm = y.column(j).dot(&y.column(j)).sqrt();
            if norm > 1e-12 {
                y.column_mut(j).mapv_inplace(|x| x / norm);
            } else {
                y.column_mut(j).fill(0.0);
            }
        }
    }
}

/// Replaces zero columns of `q` (beyond `keep`) by random unit vectors orthogonal to the rest.
pub fn complete_basis(q: &mut Array2<f64>, rng: &mut ChaCha8Rng) {
    let (m, k) = q.dim();
    for j in 0..k {
        if q.column(j).iter().any(|&x| x != 0.0) {
            continue;
        }
        loop {
            let mut cand: Array1<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
            for _pass in 0..2 {
                for i in 0..k {
                    if i == j {
                        continue;
                    }
                    let proj = q.column(i).dot(&cand);
                    cand.scaled_add(-proj, &q.column(i));
                }
            }
            let norm = cand.dot(&cand).sqrt();
            if norm > 1e-8 {
                q.column_mut(j).assign(&(cand / norm));
                break;
            }
        }
    }
}

/// Randomized truncated SVD of a sparse matrix (range finder + power iterations).
///
/// Returns `k` components; singular values below `1e-12 * s_max` are reported as 0
/// and their right vectors completed to an orthonormal set.
pub fn randomized_svd(a: &CsrMatrix, k: usize, oversample: usize, power_iterations: usize, seed: u64) -> Svd {
    let (rows, cols) = (a.rows(), a.cols());
    let l = (k + oversample).min(rows.min(cols)).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = Array2::from_shape_fn((cols, l), |_| StandardNormal.sample(&mut rng));

    let mut q = a.mul_dense(&omega);
    orthonormalize(&mut q);
    for _ in 0..power_iterations {
        let mut z = a.t_mul_dense(&q);
        orthonormalize(&mut z);
        q = a.mul_dense(&z);
        orthonormalize(&mut q);
    }

    // B^T = A^T Q is cols x l; its SVD gives B = W S U'^T.
    let bt = a.t_mul_dense(&q);
    let (svd_u, svd_s, svd_v) = if cols >= l {
        let s = jacobi_svd(&bt);
        (s.v, s.s, s.u)
    } else {
        // Wide case: factor B (l x cols) directly.
        let b = bt.t().to_owned();
        let s = jacobi_svd(&b);
        (s.u, s.s, s.v)
    };
    // svd_u: l x r (rotates Q), svd_v: cols x r (right vectors of A)
    let left = q.dot(&svd_u);
    let r = k.min(svd_s.len());
    let smax = svd_s.iter().cloned().fold(0.0, f64::max);
    let mut s = svd_s.slice(ndarray::s![..r]).to_owned();
    let mut v = svd_v.slice(ndarray::s![.., ..r]).to_owned();
    let mut u = left.slice(ndarray::s![.., ..r]).to_owned();
    for j in 0..r {
        if s[j] <= smax * 1e-12 {
            s[j] = 0.0;
            v.column_mut(j).fill(0.0);
            u.column_mut(j).fill(0.0);
        }
    }
    complete_basis(&mut v, &mut rng);

    // Sign convention: largest-magnitude entry of each right vector is positive.
    for j in 0..r {
        let col = v.column(j);
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, &x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
        if v[[imax, j]] < 0.0 {
            v.column_mut(j).mapv_inplace(|x| -x);
            u.column_mut(j).mapv_inplace(|x| -x);
        }
    }
    Svd { u, s, v }
}
