//! Sensing sets, annuli, covering counts and chain paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::{self, AnnuliRadii, ModelParams};
use crate::error::{Error, Result};
use crate::fields::GridSpec;
use crate::scalar::Real;

/// How points are placed inside their cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Centered,
    SeededRandom(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell<T> {
    /// Multi-index of the cell inside the cube, `0..L/G` per axis.
    pub index: Vec<i64>,
    pub center: Vec<T>,
    pub z: Vec<T>,
}

/// One point per cell of side `g`, each carrying a ball of radius `delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquidistributedSeq<T> {
    pub d: usize,
    pub g: T,
    pub delta: T,
    /// Side of the cube tiled by the cells.
    pub l: T,
    /// The cube is a finite window of an unbounded sequence.
    pub unbounded: bool,
    pub cells: Vec<Cell<T>>,
}

/// Number of cells per axis, checking that `l` is a multiple of `g`.
pub fn cells_per_axis<T: Real>(l: T, g: T) -> Result<usize> {
    let q = (l / g).as_f64();
    let k = q.round();
    if k < 1.0 || (q - k).abs() > 1e-9 * q.max(1.0) {
        return Err(Error::InvalidParams(format!("L = {l} is not a positive multiple of G = {g}")));
    }
    Ok(k as usize)
}

fn multi_index(mut lin: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(d);
    for _ in 0..d {
        out.push(lin % n);
        lin /= n;
    }
    out
}

/// Builds a `(G, delta)`-equidistributed sequence on the cube of side `l`.
pub fn make_equidistributed<T: Real>(
    d: usize,
    g: T,
    delta: T,
    l: T,
    placement: Placement,
) -> Result<EquidistributedSeq<T>> {
    let half = g / T::lit(2.0);
    if !(delta > T::zero() && delta < half) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, G/2)")));
    }
    let per = cells_per_axis(l, g)?;
    let mut rng = match placement {
        Placement::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Placement::Centered => None,
    };
    let total = per.pow(d as u32);
    let lo = -l / T::lit(2.0);
    let slack = half - delta;
    let mut cells = Vec::with_capacity(total);
    for lin in 0..total {
        let idx = multi_index(lin, per, d);
        let center: Vec<T> = idx
            .iter()
            .map(|&i| lo + (T::from_count(i) + T::lit(0.5)) * g)
            .collect();
        let z = match rng.as_mut() {
            None => center.clone(),
            Some(r) => center
                .iter()
                .map(|&c| c + slack * T::lit(r.gen_range(-1.0..=1.0)))
                .collect(),
        };
        cells.push(Cell { index: idx.iter().map(|&i| i as i64).collect(), center, z });
    }
    Ok(EquidistributedSeq { d, g, delta, l, unbounded: false, cells })
}

/// Ball containment `B(z_j, delta) ⊆ Λ_G(j)` for every cell (closed convention).
pub fn validate_equidistributed<T: Real>(z: &EquidistributedSeq<T>) -> bool {
    let half = z.g / T::lit(2.0);
    let tol = T::lit(4.0) * T::epsilon() * z.g;
    z.cells.iter().all(|c| {
        c.z.len() == z.d
            && c.z
                .iter()
                .zip(&c.center)
                .all(|(&zi, &ci)| (zi - ci).abs() + z.delta <= half + tol)
    })
}

/// Grid nodes lying in the union of the balls.
pub fn sensing_mask<T: Real>(z: &EquidistributedSeq<T>, grid: &GridSpec<T>) -> Result<Vec<bool>> {
    if grid.d != z.d {
        return Err(Error::GridMismatch(format!("grid d = {} vs sequence d = {}", grid.d, z.d)));
    }
    let per = cells_per_axis(z.l, z.g)?;
    let lo = -z.l / T::lit(2.0);
    let d2 = z.delta * z.delta;
    let mut mask = vec![false; grid.len()];
    let mut node = vec![T::zero(); grid.d];
    let offsets = 3usize.pow(grid.d as u32);
    for (lin, m) in mask.iter_mut().enumerate() {
        grid.coords_into(lin, &mut node);
        'cells: for off in 0..offsets {
            let mut cell_lin = 0usize;
            let mut stride = 1usize;
            for (k, &x) in node.iter().enumerate() {
                let base = ((x - lo) / z.g).floor().as_f64() as i64;
                let o = ((off / 3usize.pow(k as u32)) % 3) as i64 - 1;
                let ci = base + o;
                if ci < 0 || ci >= per as i64 {
                    continue 'cells;
                }
                cell_lin += ci as usize * stride;
                stride *= per;
            }
            let c = &z.cells[cell_lin];
            let r2 = node.iter().zip(&c.z).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b));
            if r2 <= d2 {
                *m = true;
                break;
            }
        }
    }
    Ok(mask)
}

/// Open annulus `r_inner < |x - center| < r_outer`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Annulus<T> {
    pub center: Vec<T>,
    pub r_inner: T,
    pub r_outer: T,
}

impl<T: Real> Annulus<T> {
    pub fn new(center: Vec<T>, r_inner: T, r_outer: T) -> Result<Self> {
        if !(r_inner > T::zero() && r_inner < r_outer) {
            return Err(Error::InvalidRadii(format!("annulus ({r_inner}, {r_outer})")));
        }
        Ok(Annulus { center, r_inner, r_outer })
    }

    pub fn contains(&self, x: &[T]) -> bool {
        let r = dist(x, &self.center);
        r > self.r_inner && r < self.r_outer
    }
}

fn dist<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b)).sqrt()
}

/// Ordered chain `z^0, ..., z^m` with steps in `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainPath<T> {
    pub points: Vec<Vec<T>>,
    pub a: T,
    pub b: T,
    pub m: usize,
}

/// A failed chain invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainViolation {
    Count { expected: usize, got: usize },
    Start,
    End,
    Step { index: usize, length: f64 },
    Containment { index: usize },
    NotAtTarget { index: usize },
}

/// Chain length for unit cells, `2 floor(sqrt(d)/(b - a)) + 2`.
pub fn chain_steps<T: Real>(d: usize, a: T, b: T) -> usize {
    let q = (T::from_count(d).sqrt() / (b - a)).floor().as_f64();
    2 * q as usize + 2
}

/// Unit vector from `target` towards `from`; `-e_1` if they coincide.
fn away<T: Real>(from: &[T], target: &[T]) -> Vec<T> {
    let r = dist(from, target);
    if r > T::zero() {
        from.iter().zip(target).map(|(&f, &t)| (f - t) / r).collect()
    } else {
        let mut u = vec![T::zero(); from.len()];
        u[0] = -T::one();
        u
    }
}

fn step<T: Real>(x: &[T], u: &[T], len: T) -> Vec<T> {
    x.iter().zip(u).map(|(&xi, &ui)| xi + len * ui).collect()
}

/// Chain from `z` to `y` (both in the unit cell around the origin): double
/// steps that gain `b - a` on the target, two steps onto the target, then
/// back and forth with steps of length `a`.
pub fn chain_path<T: Real>(z: &[T], y: &[T], a: T, b: T) -> Result<ChainPath<T>> {
    if !(a > T::zero() && a < b) {
        return Err(Error::Domain(format!("need 0 < a < b, got a = {a}, b = {b}")));
    }
    if z.len() != y.len() || z.is_empty() {
        return Err(Error::Domain("points must share a positive dimension".into()));
    }
    let d = z.len();
    let m = chain_steps(d, a, b);
    let gain = b - a;
    let mu = 2 * (dist(z, y) / gain).floor().as_f64() as usize;
    if mu + 2 > m {
        return Err(Error::Domain("points are farther apart than the unit cell allows".into()));
    }
    let mut pts = vec![z.to_vec()];
    let mut cur = z.to_vec();
    for _ in 0..mu / 2 {
        let out = step(&cur, &away(&cur, y), a);
        let toward: Vec<T> = away(&out, y).iter().map(|&u| -u).collect();
        cur = step(&out, &toward, b);
        pts.push(out);
        pts.push(cur.clone());
    }
    pts.push(step(&cur, &away(&cur, y), a));
    pts.push(y.to_vec());
    while pts.len() < m + 1 {
        pts.push(step(y, &away(y, y), a));
        pts.push(y.to_vec());
    }
    Ok(ChainPath { points: pts, a, b, m })
}

impl<T: Real> ChainPath<T> {
    /// All violated invariants; lengths are compared with relative slack `tol`.
    pub fn violations(&self, start: &[T], end: &[T], tol: T) -> Vec<ChainViolation> {
        let mut out = Vec::new();
        let d = start.len();
        let m = chain_steps(d, self.a, self.b);
        if self.m != m || self.points.len() != m + 1 {
            out.push(ChainViolation::Count { expected: m + 1, got: self.points.len() });
            return out;
        }
        if self.points[0].as_slice() != start {
            out.push(ChainViolation::Start);
        }
        if self.points[m].as_slice() != end {
            out.push(ChainViolation::End);
        }
        let slack = tol * self.b.max(T::one());
        let bound = (T::one() + T::lit(2.0) * self.a) / T::lit(2.0) + slack;
        for (i, w) in self.points.windows(2).enumerate() {
            let len = dist(&w[0], &w[1]);
            if len < self.a - slack || len > self.b + slack {
                out.push(ChainViolation::Step { index: i, length: len.as_f64() });
            }
        }
        for (i, p) in self.points.iter().enumerate() {
            if p.iter().any(|x| x.abs() > bound) {
                out.push(ChainViolation::Containment { index: i });
            }
        }
        let mu = 2 * (dist(start, end) / (self.b - self.a)).floor().as_f64() as usize;
        for k in ((mu + 2)..=m).step_by(2) {
            if self.points[k].as_slice() != end {
                out.push(ChainViolation::NotAtTarget { index: k });
            }
        }
        out
    }
}

/// Covering counts `(K_d, M, N)`.
pub fn covering_counts<T: Real>(p: &ModelParams<T>, radii: &AnnuliRadii<T>) -> (T, T, T) {
    let kd = constants::covering_factor::<T>(p.d);
    let (_, big_m) = constants::chain_margin(p.d, radii);
    let n = constants::covering_base(p.d, radii).powi(p.d as i32);
    (kd, big_m, n)
}

/// Sampled check that the middle annuli around arbitrary points of the
/// lattice cells cover space: every sample `x` of the closed unit cell must
/// lie in `Z_2(z_j)` for some nearby cell `j` and every placement of `z_j`.
pub fn annuli_partition_check<T: Real>(d: usize, radii: &AnnuliRadii<T>, spacing: T) -> bool {
    let half = T::lit(0.5);
    // the lattice is symmetric, so sampling [0, 1/2]^d suffices
    let steps = (half / spacing).ceil().as_f64() as usize;
    let samples = steps + 1;
    let total = samples.pow(d as u32);
    let reach = 2i64;
    let width = (2 * reach + 1) as usize;
    let offsets: Vec<Vec<i64>> = (0..width.pow(d as u32))
        .map(|k| multi_index(k, width, d).iter().map(|&o| o as i64 - reach).collect())
        .collect();
    let r2 = radii.r2 * radii.r2;
    let big2 = radii.big_r2 * radii.big_r2;
    let mut x = vec![T::zero(); d];
    for lin in 0..total {
        for (k, i) in multi_index(lin, samples, d).into_iter().enumerate() {
            x[k] = half * T::from_count(i) / T::from_count(steps);
        }
        let covered = offsets.iter().any(|off| {
            let (mut near, mut far) = (T::zero(), T::zero());
            for (k, &o) in off.iter().enumerate() {
                let lo = T::lit(o as f64) - half;
                let hi = T::lit(o as f64) + half;
                let xi = x[k];
                let dn = if xi < lo { lo - xi } else if xi > hi { xi - hi } else { T::zero() };
                let df = (xi - lo).abs().max((hi - xi).abs());
                near += dn * dn;
                far += df * df;
            }
            near >= r2 && far <= big2
        });
        if !covered {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_chain() {
        let p = chain_path(&[0.0f64], &[0.4], 0.25, 0.75).unwrap();
        assert_eq!(p.m, 6);
        let xs: Vec<f64> = p.points.iter().map(|v| v[0]).collect();
        let expect = [0.0, -0.25, 0.4, 0.15, 0.4, 0.15, 0.4];
        for (a, b) in xs.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(p.violations(&[0.0], &[0.4], 1e-12).is_empty());
    }

    #[test]
    fn centered_cells() {
        let z = make_equidistributed(1, 1.0f64, 0.1, 2.0, Placement::Centered).unwrap();
        let zs: Vec<f64> = z.cells.iter().map(|c| c.z[0]).collect();
        assert_eq!(zs, vec![-0.5, 0.5]);
    }
}
