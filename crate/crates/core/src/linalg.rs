//! Dense real matrices and a nonsymmetric eigenvalue solver.
//!
//! Eigenvalues are computed by Householder reduction to upper Hessenberg
//! form followed by the Francis double-shift QR iteration. Complex
//! conjugate pairs are read off converged 2x2 diagonal blocks.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// Largest accepted dimension for [`eigenvalues`].
pub const MAX_EIGEN_DIM: usize = 512;

/// Relative threshold for declaring a subdiagonal entry negligible.
const DEFLATION_TOL: f64 = 1e-12;

/// Row-major dense matrix of finite `f64` entries.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dimension(format!("{} entries for {rows}x{cols}", rows * cols), data.len()));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / cols.max(1), col: k % cols.max(1) });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::dimension(format!("rows of length {c}"), bad.len()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from a closure. Panics if the closure yields a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                assert!(v.is_finite(), "non-finite entry at ({i}, {j})");
                data.push(v);
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(v.is_finite());
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::dimension(format!("{} rows on the right operand", self.cols), other.rows));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entrywise difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// A complex number, used for eigenvalues of nonsymmetric matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl ComplexValue {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re, im: -self.im }
    }
}

fn require_square(m: &DenseMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::dimension("square matrix", format!("{}x{}", m.rows, m.cols)))
    }
}

/// All `n` eigenvalues of a square matrix, with multiplicity.
///
/// Complex eigenvalues of the real input come out in conjugate pairs,
/// positive imaginary part second.
pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<ComplexValue>> {
    require_square(m)?;
    let n = m.rows;
    if n == 0 || n > MAX_EIGEN_DIM {
        return Err(Error::InvalidSize { n, reason: "eigenvalues need 1 <= n <= 512" });
    }
    let mut h = m.data.clone();
    reduce_to_hessenberg(&mut h, n);
    hessenberg_qr(&mut h, n)
}

/// Maximum eigenvalue modulus.
pub fn spectral_radius(m: &DenseMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(ComplexValue::modulus).fold(0.0, f64::max))
}

/// `m - (1/N) 1 1^T`.
pub fn subtract_uniform_projector(m: &DenseMatrix) -> Result<DenseMatrix> {
    require_square(m)?;
    let shift = 1.0 / m.rows as f64;
    Ok(DenseMatrix { rows: m.rows, cols: m.cols, data: m.data.iter().map(|v| v - shift).collect() })
}

/// Householder similarity reduction of the row-major `n x n` matrix `a` to
/// upper Hessenberg form, in place.
fn reduce_to_hessenberg(a: &mut [f64], n: usize) {
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let scale: f64 = (k + 1..n).map(|i| a[i * n + k].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut norm2 = 0.0;
        for i in k + 1..n {
            v[i] = a[i * n + k] / scale;
            norm2 += v[i] * v[i];
        }
        let alpha = -norm2.sqrt().copysign(v[k + 1]);
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // A <- (I - beta v v^T) A
        for j in k..n {
            let s: f64 = (k + 1..n).map(|i| v[i] * a[i * n + j]).sum();
            let s = s * beta;
            for i in k + 1..n {
                a[i * n + j] -= s * v[i];
            }
        }
        // A <- A (I - beta v v^T)
        for i in 0..n {
            let row = &mut a[i * n..(i + 1) * n];
            let s: f64 = (k + 1..n).map(|j| row[j] * v[j]).sum();
            let s = s * beta;
            for j in k + 1..n {
                row[j] -= s * v[j];
            }
        }
        for i in k + 2..n {
            a[i * n + k] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
fn hessenberg_qr(a: &mut [f64], n: usize) -> Result<Vec<ComplexValue>> {
    let idx = |i: usize, j: usize| i * n + j;
    let budget = 100 * n;
    let mut total_sweeps = 0usize;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[idx(i, j)].abs();
        }
    }

    // accumulated exceptional shifts
    let mut shift = 0.0;
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let hi = nn as usize;
        let mut its = 0;
        loop {
            // find the start of the active unreduced block
            let mut l = hi;
            while l >= 1 {
                let mut s = a[idx(l - 1, l - 1)].abs() + a[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[idx(l, l - 1)].abs() <= DEFLATION_TOL * s {
                    a[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }

            let mut x = a[idx(hi, hi)];
            if l == hi {
                wr[hi] = x + shift;
                wi[hi] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[idx(hi - 1, hi - 1)];
            let mut w = a[idx(hi, hi - 1)] * a[idx(hi - 1, hi)];
            if l == hi - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    wr[hi - 1] = x + z;
                    wr[hi] = if z != 0.0 { x - w / z } else { x + z };
                    wi[hi - 1] = 0.0;
                    wi[hi] = 0.0;
                } else {
                    wr[hi - 1] = x + p;
                    wr[hi] = x + p;
                    wi[hi - 1] = -z;
                    wi[hi] = z;
                }
                nn -= 2;
                break;
            }

            if total_sweeps >= budget {
                return Err(Error::Convergence { iterations: total_sweeps, residual: a[idx(hi, hi - 1)].abs() });
            }
            if its == 10 || its == 20 {
                shift += x;
                for i in 0..=hi {
                    a[idx(i, i)] -= x;
                }
                let s = a[idx(hi, hi - 1)].abs() + a[idx(hi - 1, hi - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total_sweeps += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = hi - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[idx(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[idx(m + 1, m)] + a[idx(m, m + 1)];
                q = a[idx(m + 1, m + 1)] - z - rr - ss;
                r = a[idx(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[idx(m - 1, m - 1)].abs() + z.abs() + a[idx(m + 1, m + 1)].abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=hi {
                a[idx(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[idx(i, i - 3)] = 0.0;
                }
            }

            // double-shift QR step on rows/columns l..=hi
            let mut k = m;
            while k < hi {
                if k != m {
                    p = a[idx(k, k - 1)];
                    q = a[idx(k + 1, k - 1)];
                    r = if k + 1 != hi { a[idx(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[idx(k, k - 1)] = -a[idx(k, k - 1)];
                        }
                    } else {
                        a[idx(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=hi {
                        let mut pp = a[idx(k, j)] + q * a[idx(k + 1, j)];
                        if k + 1 != hi {
                            pp += r * a[idx(k + 2, j)];
                            a[idx(k + 2, j)] -= pp * z;
                        }
                        a[idx(k + 1, j)] -= pp * y;
                        a[idx(k, j)] -= pp * x;
                    }
                    let mmin = hi.min(k + 3);
                    for i in l..=mmin {
                        let mut pp = x * a[idx(i, k)] + y * a[idx(i, k + 1)];
                        if k + 1 != hi {
                            pp += z * a[idx(i, k + 2)];
                            a[idx(i, k + 2)] -= pp * r;
                        }
                        a[idx(i, k + 1)] -= pp * q;
                        a[idx(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }

    Ok(wr.into_iter().zip(wi).map(|(re, im)| ComplexValue { re, im }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_real(mut v: Vec<ComplexValue>) -> Vec<f64> {
        assert!(v.iter().all(|z| z.im.abs() < 1e-12), "unexpected complex eigenvalue: {v:?}");
        v.sort_by(|a, b| a.re.total_cmp(&b.re));
        v.into_iter().map(|z| z.re).collect()
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let ev = sorted_real(eigenvalues(&DenseMatrix::identity(3)).unwrap());
        assert_eq!(ev, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn swap_matrix_has_plus_minus_one() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let ev = sorted_real(eigenvalues(&m).unwrap());
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14, "{ev:?}");
    }

    #[test]
    fn rotation_gives_conjugate_pair() {
        let m = DenseMatrix::from_rows(&[vec![0.0, -2.0], vec![2.0, 0.0]]).unwrap();
        let ev = eigenvalues(&m).unwrap();
        assert_eq!(ev.len(), 2);
        assert!(ev[0].re.abs() < 1e-14 && ev[1].re.abs() < 1e-14);
        assert!((ev[0].im + 2.0).abs() < 1e-14 && (ev[1].im - 2.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_radius_of_zero_and_nilpotent() {
        assert_eq!(spectral_radius(&DenseMatrix::zeros(4, 4)).unwrap(), 0.0);
        let nil = DenseMatrix::from_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(spectral_radius(&nil).unwrap(), 0.0);
    }

    #[test]
    fn uniform_projector_subtraction() {
        let third = DenseMatrix::from_fn(3, 3, |_, _| 1.0 / 3.0);
        assert!(subtract_uniform_projector(&third).unwrap().max_abs_diff(&DenseMatrix::zeros(3, 3)) < 1e-15);

        let two = subtract_uniform_projector(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(two.as_slice(), &[0.5, -0.5, -0.5, 0.5]);

        let four = subtract_uniform_projector(&DenseMatrix::identity(4)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(four[(i, j)], if i == j { 0.75 } else { -0.25 });
            }
        }
    }

    #[test]
    fn rejects_non_square_and_oversized() {
        let rect = DenseMatrix::zeros(2, 3);
        assert!(matches!(eigenvalues(&rect), Err(Error::Dimension { .. })));
        assert!(matches!(subtract_uniform_projector(&rect), Err(Error::Dimension { .. })));
        assert!(matches!(eigenvalues(&DenseMatrix::zeros(0, 0)), Err(Error::InvalidSize { .. })));
        assert!(matches!(eigenvalues(&DenseMatrix::zeros(513, 513)), Err(Error::InvalidSize { .. })));
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = DenseMatrix::new(2, 2, vec![1.0, f64::NAN, 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn upper_triangular_eigenvalues_are_diagonal() {
        let m = DenseMatrix::from_fn(6, 6, |i, j| if j >= i { (i + 1) as f64 + 0.1 * j as f64 } else { 0.0 });
        let ev = sorted_real(eigenvalues(&m).unwrap());
        let expected: Vec<f64> = (0..6).map(|i| (i + 1) as f64 + 0.1 * i as f64).collect();
        for (a, b) in ev.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn hessenberg_reduction_preserves_trace() {
        let n = 7;
        let m = DenseMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let mut h = m.as_slice().to_vec();
        reduce_to_hessenberg(&mut h, n);
        for i in 0..n {
            for j in 0..i.saturating_sub(1) {
                assert_eq!(h[i * n + j], 0.0);
            }
        }
        let tr: f64 = (0..n).map(|i| h[i * n + i]).sum();
        assert!((tr - m.trace()).abs() < 1e-12);
    }
}
