//! Finite difference operators `-div(A grad) + c + V + t W` with Dirichlet
//! conditions, and their lowest eigenpairs.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::{CoefficientField, GridSpec};
use crate::geometry::{sensing_mask, EquidistributedSeq};
use crate::linalg::{dense_eigh, dot, jacobi_eigen, norm, orthonormalize, BandCholesky};
use crate::scalar::Real;

/// Symmetric sparse matrix in compressed rows, both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymCsr<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<T>,
}

impl<T: Real> SymCsr<T> {
    /// Builds from per-row `(col, value)` lists, summing duplicates.
    pub fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in r {
                if last == Some(c) {
                    let end = vals.len() - 1;
                    vals[end] += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        SymCsr { n, row_ptr, cols, vals }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let slice = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match slice.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => T::zero(),
        }
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row(i).fold(T::zero(), |s, (j, v)| s + v * x[j]);
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn bandwidth(&self) -> usize {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }

    pub fn max_abs(&self) -> T {
        self.vals.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `max |M_ij - M_ji|`.
    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Gershgorin lower bound of the spectrum.
    pub fn gershgorin_lower(&self) -> T {
        (0..self.n)
            .map(|i| {
                let (mut diag, mut off) = (T::zero(), T::zero());
                for (j, v) in self.row(i) {
                    if j == i {
                        diag += v;
                    } else {
                        off += v.abs();
                    }
                }
                diag - off
            })
            .fold(T::infinity(), T::min)
    }

    pub fn to_dense_f64(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[i * self.n + j] = v.as_f64();
            }
        }
        m
    }
}

/// Assembled operator on a grid.
#[derive(Debug, Clone)]
pub struct DiscreteOperator<T> {
    pub grid: GridSpec<T>,
    pub matrix: SymCsr<T>,
    /// Constant added to the diagonal after assembly.
    pub shift: T,
}

/// The sensing perturbation `t W` with `W` the indicator of `mask`.
#[derive(Debug, Clone, Copy)]
pub struct Perturbation<'a, T> {
    pub t: T,
    pub mask: &'a [bool],
}

/// Assembles `-div(A grad) + c + V (+ t W)`.
pub fn assemble<T: Real>(field: &CoefficientField<T>, perturbation: Option<Perturbation<'_, T>>) -> Result<DiscreteOperator<T>> {
    assemble_with(field, None, perturbation)
}

/// As [`assemble`] with an extra node potential added to the diagonal.
///
/// Diagonal second-order terms use conservative flux differences with
/// `a_kk` sampled at half nodes from the generator. A cross pair `i < j`
/// couples `p` to the four corners `q = p ± e_i ± e_j` with weight
/// `∓(a_ij(p) + a_ij(q)) / (4h²)` (minus on `++`/`--`), and the diagonal
/// takes the negated sum of the four weights, so the cross part annihilates
/// constants and stays second order for variable `a_ij`.
pub fn assemble_with<T: Real>(
    field: &CoefficientField<T>,
    extra: Option<&[T]>,
    perturbation: Option<Perturbation<'_, T>>,
) -> Result<DiscreteOperator<T>> {
    let grid = field.grid;
    let (d, n, len) = (grid.d, grid.n, grid.len());
    if let Some(e) = extra {
        if e.len() != len {
            return Err(Error::GridMismatch(format!("extra potential has {} entries, grid {}", e.len(), len)));
        }
    }
    if let Some(p) = perturbation {
        if p.mask.len() != len {
            return Err(Error::GridMismatch(format!("mask has {} entries, grid {}", p.mask.len(), len)));
        }
    }
    let h = grid.h();
    let h2 = h * h;
    let half = h / T::lit(2.0);
    let four_h2 = T::lit(4.0) * h2;
    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::with_capacity(1 + 2 * d + 2 * d * d); len];
    let mut x = vec![T::zero(); d];
    let mut idx = vec![0i64; d];
    let mut corner = vec![T::zero(); d];

    for p in 0..len {
        let m = grid.multi(p);
        grid.coords_into(p, &mut x);
        let mut diag = field.c[p] + field.v[p];
        if let Some(e) = extra {
            diag += e[p];
        }
        if let Some(pert) = perturbation {
            if pert.mask[p] {
                diag += pert.t;
            }
        }
        rows[p].push((p, diag));

        for k in 0..d {
            let mut xh = x.clone();
            xh[k] = x[k] + half;
            let a_fwd = field.generator.eval(&xh).a[k * d + k] / h2;
            rows[p].push((p, a_fwd));
            if m[k] < n {
                let q = p + grid.stride(k);
                rows[p].push((q, -a_fwd));
                rows[q].push((p, -a_fwd));
                rows[q].push((q, a_fwd));
            }
            if m[k] == 1 {
                xh[k] = x[k] - half;
                rows[p].push((p, field.generator.eval(&xh).a[k * d + k] / h2));
            }
        }

        for i in 0..d {
            for j in (i + 1)..d {
                let a_p = field.a_at(p)[i * d + j];
                let mut row_sum = T::zero();
                for (si, sj) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
                    for (kk, id) in idx.iter_mut().enumerate() {
                        *id = m[kk] as i64;
                    }
                    idx[i] += si;
                    idx[j] += sj;
                    let sign = if si == sj { -T::one() } else { T::one() };
                    let inside = grid.linear(&idx);
                    let a_q = match inside {
                        Some(q) => field.a_at(q)[i * d + j],
                        None => {
                            for (c, &id) in corner.iter_mut().zip(&idx) {
                                *c = -grid.l / T::lit(2.0) + T::lit(id as f64) * h;
                            }
                            field.generator.eval(&corner).a[i * d + j]
                        }
                    };
                    let w = sign * (a_p + a_q) / four_h2;
                    row_sum += w;
                    if si == 1 {
                        if let Some(q) = inside {
                            rows[p].push((q, w));
                            rows[q].push((p, w));
                        }
                    }
                }
                rows[p].push((p, -row_sum));
            }
        }
    }
    Ok(DiscreteOperator { grid, matrix: SymCsr::from_rows(rows), shift: T::zero() })
}

impl<T: Real> DiscreteOperator<T> {
    pub fn dim(&self) -> usize {
        self.matrix.n
    }

    /// `H x` including the recorded shift.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = self.matrix.apply(x);
        if self.shift != T::zero() {
            for (yi, &xi) in y.iter_mut().zip(x) {
                *yi += self.shift * xi;
            }
        }
        y
    }

    /// Same operator with `s` added to the spectrum.
    pub fn shifted(&self, s: T) -> Self {
        let mut out = self.clone();
        out.shift += s;
        out
    }

    pub fn diag(&self, i: usize) -> T {
        self.matrix.get(i, i) + self.shift
    }

    /// Diagonal and off-diagonal when the matrix is tridiagonal.
    pub fn tridiagonal(&self) -> Option<(Vec<T>, Vec<T>)> {
        if self.matrix.bandwidth() > 1 {
            return None;
        }
        let n = self.dim();
        let diag = (0..n).map(|i| self.diag(i)).collect();
        let off = (0..n.saturating_sub(1)).map(|i| self.matrix.get(i + 1, i)).collect();
        Some((diag, off))
    }

    /// MatrixMarket `coordinate real symmetric`, lower triangle, 1-based.
    pub fn to_matrix_market(&self) -> String {
        let n = self.dim();
        let mut entries = Vec::new();
        for i in 0..n {
            for (j, v) in self.matrix.row(i) {
                if j <= i {
                    let v = if i == j { v + self.shift } else { v };
                    entries.push((i, j, v));
                }
            }
        }
        let mut s = String::new();
        let _ = writeln!(s, "%%MatrixMarket matrix coordinate real symmetric");
        let _ = writeln!(s, "% d={} L={} n={}", self.grid.d, self.grid.l, self.grid.n);
        let _ = writeln!(s, "{n} {n} {}", entries.len());
        for (i, j, v) in entries {
            let _ = writeln!(s, "{} {} {:.17e}", i + 1, j + 1, v.as_f64());
        }
        s
    }
}

/// Lowest eigenpairs with residual certificates.
///
/// `λ_∞`, the bottom of the essential spectrum, has no finite grid analogue
/// and is not represented.
#[derive(Debug, Clone)]
pub struct SpectralResult<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: Vec<Vec<T>>,
    /// `‖H ψ - λ ψ‖₂` per pair.
    pub residuals: Vec<T>,
    pub tol: T,
    /// Operator dimension.
    pub dim: usize,
    pub iterations: usize,
}

impl<T: Real> SpectralResult<T> {
    pub fn certified(&self) -> bool {
        self.eigenvalues
            .iter()
            .zip(&self.residuals)
            .all(|(l, r)| *r <= self.tol * l.abs() + self.tol)
    }

    /// `true` when every eigenvalue of the operator is below the list's end.
    pub fn complete(&self) -> bool {
        self.eigenvalues.len() == self.dim
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,lambda,residual\n");
        for (k, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            let _ = writeln!(s, "{},{:.17e},{:.3e}", k + 1, l.as_f64(), r.as_f64());
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "eigenvalues": self.eigenvalues.iter().map(|v| v.as_f64()).collect::<Vec<_>>(),
            "residuals": self.residuals.iter().map(|v| v.as_f64()).collect::<Vec<_>>(),
            "tol": self.tol.as_f64(),
            "dim": self.dim,
            "iterations": self.iterations,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    /// Dense below 400 unknowns, shift-invert otherwise.
    Auto,
    /// Dense symmetric solve (at most 2000 unknowns).
    Dense,
    /// Block shift-invert subspace iteration with banded Cholesky.
    ShiftInvert,
}

#[derive(Debug, Clone)]
pub struct EigOptions<T> {
    pub k: usize,
    pub tol: T,
    pub seed: u64,
    pub method: SolverMethod,
    pub max_iter: usize,
    /// Starting vectors, e.g. eigenvectors of a nearby operator.
    pub warm: Option<Vec<Vec<T>>>,
    /// A value believed to lie below the lowest eigenvalue; used as the
    /// first shift when the factorization succeeds.
    pub shift_hint: Option<T>,
}

impl<T: Real> EigOptions<T> {
    pub fn new(k: usize, tol: T, seed: u64) -> Self {
        EigOptions { k, tol, seed, method: SolverMethod::Auto, max_iter: 2000, warm: None, shift_hint: None }
    }
}

pub const DENSE_AUTO_MAX: usize = 400;
pub const DENSE_MAX: usize = 2000;

/// The `k` smallest eigenpairs.
pub fn eigs_lowest<T: Real>(op: &DiscreteOperator<T>, k: usize, tol: T, seed: u64) -> Result<SpectralResult<T>> {
    eigs_lowest_with(op, &EigOptions::new(k, tol, seed))
}

pub fn eigs_lowest_with<T: Real>(op: &DiscreteOperator<T>, opts: &EigOptions<T>) -> Result<SpectralResult<T>> {
    let n = op.dim();
    if opts.k == 0 || opts.k > n {
        return Err(Error::InvalidParams(format!("k = {} not in 1..={n}", opts.k)));
    }
    let dense = match opts.method {
        SolverMethod::Auto => n <= DENSE_AUTO_MAX,
        SolverMethod::Dense => {
            if n > DENSE_MAX {
                return Err(Error::InvalidParams(format!("dense solve limited to {DENSE_MAX} unknowns, got {n}")));
            }
            true
        }
        SolverMethod::ShiftInvert => false,
    };
    let mut opts = opts.clone();
    opts.tol = effective_tol(op, opts.tol);
    let opts = &opts;
    let res = if dense { solve_dense(op, opts) } else { solve_shift_invert(op, opts)? };
    if !res.certified() {
        return Err(Error::NoConvergence {
            iterations: res.iterations,
            residuals: res.residuals.iter().map(|r| r.as_f64()).collect(),
        });
    }
    Ok(res)
}

/// Requested tolerance clamped below by the round-off level `64 eps ||H||_inf`.
pub fn effective_tol<T: Real>(op: &DiscreteOperator<T>, tol: T) -> T {
    let m = &op.matrix;
    let row_max = (0..m.n)
        .map(|i| m.row(i).fold(T::zero(), |s, (_, v)| s + v.abs()))
        .fold(T::zero(), T::max);
    tol.max(T::lit(64.0) * T::epsilon() * (row_max + op.shift.abs()))
}

fn residual<T: Real>(hx: &[T], x: &[T], lambda: T) -> T {
    hx.iter().zip(x).fold(T::zero(), |s, (&a, &b)| {
        let r = a - lambda * b;
        s + r * r
    })
    .sqrt()
}

fn finish<T: Real>(op: &DiscreteOperator<T>, vals: Vec<T>, vecs: Vec<Vec<T>>, tol: T, iterations: usize) -> SpectralResult<T> {
    let residuals = vals.iter().zip(&vecs).map(|(&l, v)| residual(&op.apply(v), v, l)).collect();
    SpectralResult { eigenvalues: vals, eigenvectors: vecs, residuals, tol, dim: op.dim(), iterations }
}

fn solve_dense<T: Real>(op: &DiscreteOperator<T>, opts: &EigOptions<T>) -> SpectralResult<T> {
    let n = op.dim();
    let mut a = op.matrix.to_dense_f64();
    let s = op.shift.as_f64();
    for i in 0..n {
        a[i * n + i] += s;
    }
    let (_, vecs) = dense_eigh(&a, n);
    let mut out_vals = Vec::with_capacity(opts.k);
    let mut out_vecs = Vec::with_capacity(opts.k);
    for v in vecs.into_iter().take(opts.k) {
        let mut v: Vec<T> = v.into_iter().map(T::lit).collect();
        // Fix the sign so that the largest entry is positive.
        let big = v.iter().fold(T::zero(), |m, &x| if x.abs() > m.abs() { x } else { m });
        if big < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let hv = op.apply(&v);
        out_vals.push(dot(&v, &hv));
        out_vecs.push(v);
    }
    finish(op, out_vals, out_vecs, opts.tol, 1)
}

fn factor_shifted<T: Real>(op: &DiscreteOperator<T>, bw: usize, sigma: T) -> Result<BandCholesky<T>> {
    BandCholesky::factor(op.dim(), bw, |i, j| {
        let v = op.matrix.get(i, j);
        if i == j {
            v + op.shift - sigma
        } else {
            v
        }
    })
}

fn solve_shift_invert<T: Real>(op: &DiscreteOperator<T>, opts: &EigOptions<T>) -> Result<SpectralResult<T>> {
    let n = op.dim();
    let k = opts.k;
    let p = n.min((2 * k).max(k + 8));
    let bw = op.matrix.bandwidth();
    let lower = op.matrix.gershgorin_lower() + op.shift;
    let mut sigma = lower - T::lit(1e-3) * lower.abs().max(T::one());
    let mut chol = None;
    if let Some(hint) = opts.shift_hint {
        if hint > sigma {
            if let Ok(c) = factor_shifted(op, bw, hint) {
                chol = Some(c);
                sigma = hint;
            }
        }
    }
    let mut chol = match chol {
        Some(c) => c,
        None => factor_shifted(op, bw, sigma)?,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<T>> = Vec::with_capacity(p);
    if let Some(w) = &opts.warm {
        for v in w.iter().take(p) {
            if v.len() == n {
                x.push(v.clone());
            }
        }
    }
    while x.len() < p {
        x.push((0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect());
    }
    orthonormalize(&mut x);

    let mut vals = vec![T::zero(); p];
    let mut res = vec![T::infinity(); p];
    let mut last_shift_iter = 0usize;
    let mut iterations = 0;
    for iter in 1..=opts.max_iter {
        iterations = iter;
        for v in x.iter_mut() {
            chol.solve_in_place(v);
        }
        if !orthonormalize(&mut x) {
            for v in x.iter_mut() {
                if !norm(v).is_finite() || norm(v) < T::lit(0.5) {
                    *v = (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
                }
            }
            orthonormalize(&mut x);
        }
        let hy: Vec<Vec<T>> = x.iter().map(|v| op.apply(v)).collect();
        let mut proj = vec![T::zero(); p * p];
        for i in 0..p {
            for j in i..p {
                let v = dot(&x[i], &hy[j]);
                proj[i * p + j] = v;
                proj[j * p + i] = v;
            }
        }
        for i in 0..p {
            for j in 0..i {
                let avg = (proj[i * p + j] + proj[j * p + i]) / T::lit(2.0);
                proj[i * p + j] = avg;
                proj[j * p + i] = avg;
            }
        }
        let (theta, w) = jacobi_eigen(&proj, p);
        let mut nx = vec![vec![T::zero(); n]; p];
        let mut nhx = vec![vec![T::zero(); n]; p];
        for c in 0..p {
            for r in 0..p {
                let wrc = w[r * p + c];
                if wrc == T::zero() {
                    continue;
                }
                for (dst, &src) in nx[c].iter_mut().zip(&x[r]) {
                    *dst += wrc * src;
                }
                for (dst, &src) in nhx[c].iter_mut().zip(&hy[r]) {
                    *dst += wrc * src;
                }
            }
        }
        x = nx;
        vals = theta;
        for c in 0..p {
            res[c] = residual(&nhx[c], &x[c], vals[c]);
        }
        let done = (0..k).all(|c| res[c] <= opts.tol * vals[c].abs() + opts.tol);
        if done {
            break;
        }
        // Move the shift towards the wanted cluster once the Ritz values settle.
        if iter >= 3 && iter - last_shift_iter >= 5 {
            let spread = (vals[k - 1] - vals[0]).max(T::lit(1e-3) * vals[0].abs()).max(T::lit(1e-8));
            let margin = (T::lit(0.1) * spread).max(T::lit(2.0) * res[0]);
            let mut target = vals[0] - margin;
            if target > sigma + T::lit(1e-3) * (vals[0] - sigma) {
                for _ in 0..8 {
                    match factor_shifted(op, bw, target) {
                        Ok(c) => {
                            chol = c;
                            sigma = target;
                            break;
                        }
                        Err(_) => target = sigma + (target - sigma) / T::lit(2.0),
                    }
                }
            }
            last_shift_iter = iter;
        }
        if iter == opts.max_iter {
            return Err(Error::NoConvergence {
                iterations: iter,
                residuals: res[..k].iter().map(|r| r.as_f64()).collect(),
            });
        }
    }
    let mut out_vecs: Vec<Vec<T>> = x.into_iter().take(k).collect();
    for v in out_vecs.iter_mut() {
        let big = v.iter().fold(T::zero(), |m, &y| if y.abs() > m.abs() { y } else { m });
        if big < T::zero() {
            v.iter_mut().for_each(|y| *y = -*y);
        }
    }
    vals.truncate(k);
    Ok(finish(op, vals, out_vecs, opts.tol, iterations))
}

/// Weights of a sample in `Ran χ_I(H)`.
#[derive(Debug, Clone)]
pub enum ProjectorWeights<T> {
    Given(Vec<T>),
    Random(u64),
}

#[derive(Debug, Clone)]
pub struct ProjectorSample<T> {
    pub psi: Vec<T>,
    /// Unit-norm weights in the eigenbasis.
    pub weights: Vec<T>,
    /// Indices into the spectral result of the eigenvalues in `I`.
    pub indices: Vec<usize>,
}

/// Unit vector `Σ w_k ψ_k` over eigenvalues in `[e - eps, e + eps]`.
pub fn projector_sample<T: Real>(spec: &SpectralResult<T>, e: T, eps: T, weights: ProjectorWeights<T>) -> Result<ProjectorSample<T>> {
    let hi = e + eps;
    let lo = e - eps;
    let top = spec.eigenvalues.last().copied().unwrap_or(T::neg_infinity());
    if !spec.complete() && top <= hi {
        return Err(Error::Unresolved(format!(
            "largest computed eigenvalue {} does not exceed the window end {}",
            top, hi
        )));
    }
    let indices: Vec<usize> = (0..spec.eigenvalues.len())
        .filter(|&i| spec.eigenvalues[i] >= lo && spec.eigenvalues[i] <= hi)
        .collect();
    if indices.is_empty() {
        return Err(Error::EmptyInterval);
    }
    let mut w = match weights {
        ProjectorWeights::Given(w) => {
            if w.len() != indices.len() {
                return Err(Error::InvalidParams(format!("{} weights for {} eigenvalues", w.len(), indices.len())));
            }
            w
        }
        ProjectorWeights::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            indices.iter().map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect()
        }
    };
    let nw = norm(&w);
    if !(nw > T::zero()) {
        return Err(Error::InvalidParams("zero weight vector".into()));
    }
    w.iter_mut().for_each(|x| *x /= nw);
    let dim = spec.eigenvectors[0].len();
    let mut psi = vec![T::zero(); dim];
    for (&wi, &i) in w.iter().zip(&indices) {
        for (p, &v) in psi.iter_mut().zip(&spec.eigenvectors[i]) {
            *p += wi * v;
        }
    }
    Ok(ProjectorSample { psi, weights: w, indices })
}

/// Central difference of `λ₁(t)` against the pairing `⟨ψ₁, W ψ₁⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HellmannFeynman<T> {
    pub numeric_deriv: T,
    pub pairing: T,
    pub lambda: T,
    pub gap: T,
}

/// Hellmann-Feynman check for the sensing set of `z`.
pub fn hellmann_feynman<T: Real>(
    field: &CoefficientField<T>,
    z: &EquidistributedSeq<T>,
    t: T,
    h_t: T,
    opts: &EigOptions<T>,
) -> Result<HellmannFeynman<T>> {
    let mask = sensing_mask(z, &field.grid)?;
    hellmann_feynman_mask(field, &mask, t, h_t, opts)
}

/// Hellmann-Feynman check for an explicit node mask.
pub fn hellmann_feynman_mask<T: Real>(
    field: &CoefficientField<T>,
    mask: &[bool],
    t: T,
    h_t: T,
    opts: &EigOptions<T>,
) -> Result<HellmannFeynman<T>> {
    let mut o = opts.clone();
    o.k = o.k.max(2).min(field.grid.len());
    let at = |s: T, warm: Option<Vec<Vec<T>>>| -> Result<SpectralResult<T>> {
        let op = assemble(field, Some(Perturbation { t: s, mask }))?;
        let mut oo = o.clone();
        oo.warm = warm;
        eigs_lowest_with(&op, &oo)
    };
    let mid = at(t, opts.warm.clone())?;
    let lambda = mid.eigenvalues[0];
    let gap = if mid.eigenvalues.len() > 1 { mid.eigenvalues[1] - lambda } else { T::infinity() };
    let gap_tol = T::lit(1e-6) * lambda.abs();
    if gap <= gap_tol {
        return Err(Error::Degenerate { t: t.as_f64(), gap: gap.as_f64(), gap_tol: gap_tol.as_f64() });
    }
    let psi = &mid.eigenvectors[0];
    let pairing = psi.iter().zip(mask).fold(T::zero(), |s, (&v, &m)| if m { s + v * v } else { s });
    let up = at(t + h_t, Some(mid.eigenvectors.clone()))?;
    let down = at(t - h_t, Some(mid.eigenvectors.clone()))?;
    let numeric_deriv = (up.eigenvalues[0] - down.eigenvalues[0]) / (T::lit(2.0) * h_t);
    Ok(HellmannFeynman { numeric_deriv, pairing, lambda, gap })
}

/// `Σ_{mask} ψ²`.
pub fn masked_norm_sq<T: Real>(psi: &[T], mask: &[bool]) -> T {
    psi.iter().zip(mask).fold(T::zero(), |s, (&v, &m)| if m { s + v * v } else { s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{sample_field, Identity};
    use std::sync::Arc;

    #[test]
    fn laplacian_stencil() {
        let grid = GridSpec::new(2, 4.0f64, 3).unwrap();
        let f = sample_field(Arc::new(Identity { d: 2 }), grid).unwrap();
        let op = assemble(&f, None).unwrap();
        assert_eq!(op.matrix.get(4, 4), 4.0);
        assert_eq!(op.matrix.get(4, 3), -1.0);
        assert_eq!(op.matrix.get(4, 1), -1.0);
        assert_eq!(op.matrix.get(4, 0), 0.0);
        assert_eq!(op.matrix.max_asymmetry(), 0.0);
    }
}
