//! Small dense and banded kernels used by the spectral code.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Cyclic Jacobi eigen decomposition of a symmetric `n x n` row-major matrix.
///
/// Returns ascending eigenvalues and the eigenvectors as columns of a
/// row-major `n x n` matrix (`vecs[i * n + j]` is entry `i` of vector `j`).
pub fn jacobi_eigen<T: Real>(a: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    if n > 1 {
        let eps = T::epsilon();
        for _sweep in 0..100 {
            let mut off = T::zero();
            let mut diag = T::zero();
            for i in 0..n {
                diag += m[i * n + i] * m[i * n + i];
                for j in (i + 1)..n {
                    off += m[i * n + j] * m[i * n + j];
                }
            }
            if off <= eps * eps * diag || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[p * n + q];
                    if apq == T::zero() {
                        continue;
                    }
                    let app = m[p * n + p];
                    let aqq = m[q * n + q];
                    let theta = (aqq - app) / (T::lit(2.0) * apq);
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    let t = sign / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[k * n + p];
                        let mkq = m[k * n + q];
                        m[k * n + p] = c * mkp - s * mkq;
                        m[k * n + q] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[p * n + k];
                        let mqk = m[q * n + k];
                        m[p * n + k] = c * mpk - s * mqk;
                        m[q * n + k] = s * mpk + c * mqk;
                    }
                    m[p * n + q] = T::zero();
                    m[q * n + p] = T::zero();
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![T::zero(); n * n];
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + col] = v[r * n + src];
        }
    }
    (vals, vecs)
}

/// Dense symmetric eigen decomposition in `f64`, ascending.
/// Eigenvectors are returned as separate vectors.
pub fn dense_eigh(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = DMatrix::from_row_slice(n, n, a);
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (vals, vecs)
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Modified Gram-Schmidt, applied twice. Returns `false` if a vector collapsed.
pub fn orthonormalize<T: Real>(vs: &mut [Vec<T>]) -> bool {
    let mut ok = true;
    for i in 0..vs.len() {
        let scale = norm(&vs[i]);
        for _ in 0..2 {
            for j in 0..i {
                let (head, tail) = vs.split_at_mut(i);
                let c = dot(&head[j], &tail[0]);
                for (x, &y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= c * y;
                }
            }
        }
        let nv = norm(&vs[i]);
        if !(nv > T::lit(1e-10) * scale) || nv == T::zero() {
            ok = false;
            continue;
        }
        for x in vs[i].iter_mut() {
            *x /= nv;
        }
    }
    ok
}

/// Cholesky factor of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky<T> {
    n: usize,
    bw: usize,
    /// Row `i` holds `L[i][i - bw ..= i]`, left padded.
    l: Vec<T>,
}

impl<T: Real> BandCholesky<T> {
    /// `lower(i, j)` must return `A[i][j]` for `i - bw <= j <= i`.
    pub fn factor(n: usize, bw: usize, lower: impl Fn(usize, usize) -> T) -> Result<Self> {
        let w = bw + 1;
        let mut l = vec![T::zero(); n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = lower(i, j);
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if j == i {
                    if !(s > T::zero()) {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s.as_f64() });
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (k + bw - i)] * x[k];
            }
            x[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= self.l[k * w + (i + bw - k)] * x[k];
            }
            x[i] = s / self.l[i * w + bw];
        }
    }
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// diagonal `diag` and off-diagonal `off` (Sturm sequence).
pub fn sturm_count<T: Real>(diag: &[T], off: &[T], x: T) -> usize {
    let tiny = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut q = T::one();
    for i in 0..diag.len() {
        let b2 = if i == 0 { T::zero() } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { T::zero() } else { b2 / q };
        if q == T::zero() {
            q = -tiny;
        }
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// Gershgorin enclosure of a symmetric tridiagonal spectrum.
pub fn tridiag_bounds<T: Real>(diag: &[T], off: &[T]) -> (T, T) {
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..diag.len() {
        let r = if i > 0 { off[i - 1].abs() } else { T::zero() } + if i < off.len() { off[i].abs() } else { T::zero() };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// All eigenvalues of a symmetric tridiagonal matrix by bisection, ascending.
pub fn tridiag_eigenvalues<T: Real>(diag: &[T], off: &[T]) -> Vec<T> {
    let n = diag.len();
    let (lo, hi) = tridiag_bounds(diag, off);
    let span = (hi - lo).max(T::one());
    let (lo, hi) = (lo - T::lit(1e-3) * span, hi + T::lit(1e-3) * span);
    (0..n).map(|k| kth_eigenvalue(diag, off, k, lo, hi)).collect()
}

/// `k`-th (0-based) eigenvalue by bisection inside `[lo, hi]`.
pub fn kth_eigenvalue<T: Real>(diag: &[T], off: &[T], k: usize, mut lo: T, mut hi: T) -> T {
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo + hi) / T::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_two_by_two() {
        let (vals, vecs) = jacobi_eigen(&[2.0f64, 1.0, 1.0, 2.0], 2);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        assert!((vecs[0].abs() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn band_cholesky_solves() {
        let n = 6;
        let a = |i: usize, j: usize| if i == j { 2.0f64 } else if i.abs_diff(j) == 1 { -1.0 } else { 0.0 };
        let f = BandCholesky::factor(n, 1, a).unwrap();
        let mut x = vec![1.0; n];
        f.solve_in_place(&mut x);
        for i in 0..n {
            let mut s = 2.0 * x[i];
            if i > 0 {
                s -= x[i - 1];
            }
            if i + 1 < n {
                s -= x[i + 1];
            }
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sturm_matches_closed_form() {
        let n = 20;
        let vals = tridiag_eigenvalues(&vec![2.0f64; n], &vec![-1.0; n - 1]);
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12);
        }
    }
}
