//! Reference computations used as test oracles. Nothing here calls into the
//! code paths it is used to check.

#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;

use radsgd_core::linalg::{ComplexValue, DenseMatrix};
use radsgd_core::topology::Graph;

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(m: &DenseMatrix) -> f64 {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut det = 1.0;
    for k in 0..n {
        let pivot = (k..n).max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs())).unwrap();
        if a[pivot][k] == 0.0 {
            return 0.0;
        }
        if pivot != k {
            a.swap(pivot, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    det
}

/// Circulant matrix with the given first row: `C[i][j] = c[(j - i) mod n]`.
pub fn circulant(first_row: &[f64]) -> DenseMatrix {
    let n = first_row.len();
    DenseMatrix::from_fn(n, n, |i, j| first_row[(j + n - i) % n])
}

/// Eigenvalues of a circulant matrix: `lambda_k = sum_j c_j w^{jk}`, `w = exp(2 pi i / n)`.
pub fn circulant_eigenvalues(first_row: &[f64]) -> Vec<ComplexValue> {
    let n = first_row.len();
    (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, c) in first_row.iter().enumerate() {
                let angle = 2.0 * PI * (j * k % n) as f64 / n as f64;
                re += c * angle.cos();
                im += c * angle.sin();
            }
            ComplexValue::new(re, im)
        })
        .collect()
}

/// Largest distance in an optimal-by-greedy pairing of two eigenvalue multisets.
pub fn multiset_distance(a: &[ComplexValue], b: &[ComplexValue]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x.re - y.re).hypot(x.im - y.im)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// Spectral radius by power iteration (ratio of successive norms).
pub fn power_iteration_radius(m: &DenseMatrix, iterations: usize) -> f64 {
    let n = m.rows();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64 + (i as f64).sin()).collect();
    let mut ratio = 0.0;
    for _ in 0..iterations {
        let y: Vec<f64> = (0..n).map(|i| m.row(i).iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ny == 0.0 {
            return 0.0;
        }
        ratio = ny / nx;
        x = y.into_iter().map(|v| v / ny).collect();
    }
    ratio
}

/// Success indicator from the product form:
/// `T_ij = b_j (1 - b_i) prod_{k in N(i) \ j} (1 - b_k)` for `i != j`.
pub fn success_indicator(g: &Graph, b: &[bool], i: usize, j: usize) -> f64 {
    if i == j {
        return 1.0;
    }
    if !g.has_edge(i, j) {
        return 0.0;
    }
    let bit = |k: usize| if b[k] { 1.0 } else { 0.0 };
    let mut t = bit(j) * (1.0 - bit(i));
    for &k in g.neighbors(i) {
        if k != j {
            t *= 1.0 - bit(k);
        }
    }
    t
}

/// `E[Wbar]` by summing compensated matrices over all `2^n` broadcast vectors,
/// with `W = I - eps L` built from the graph directly.
pub fn enumerated_expected_matrix(g: &Graph, epsilon: f64, probs: &[f64]) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut acc = vec![vec![0.0; n]; n];
    for mask in 0u32..(1 << n) {
        let b: Vec<bool> = (0..n).map(|k| mask & (1 << k) != 0).collect();
        let weight: f64 = (0..n).map(|k| if b[k] { probs[k] } else { 1.0 - probs[k] }).product();
        if weight == 0.0 {
            continue;
        }
        for i in 0..n {
            let mut kept = 0.0;
            for j in 0..n {
                if i != j && g.has_edge(i, j) {
                    let w = epsilon * success_indicator(g, &b, i, j);
                    acc[i][j] += weight * w;
                    kept += w;
                }
            }
            acc[i][i] += weight * (1.0 - kept);
        }
    }
    acc
}

/// Central finite-difference gradient.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
