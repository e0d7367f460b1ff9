//! Coefficient fields on cube grids.
//!
//! A field stores `A`, `c` and `V` at the interior nodes of a Dirichlet grid
//! on `(-L/2, L/2)^d` and keeps the generating closure, so half-node values
//! and extensions are evaluated exactly rather than interpolated.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::scalar::Real;

/// Interior nodes `x_i = -L/2 + i h`, `i = 1..n` per axis, `h = L/(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec<T> {
    pub d: usize,
    pub l: T,
    pub n: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn new(d: usize, l: T, n: usize) -> Result<Self> {
        if d == 0 || n < 2 || !(l > T::zero()) {
            return Err(Error::InvalidParams(format!("grid needs d >= 1, n >= 2, L > 0 (d={d}, n={n}, L={l})")));
        }
        Ok(GridSpec { d, l, n })
    }

    pub fn h(&self) -> T {
        self.l / T::from_count(self.n + 1)
    }

    /// Number of nodes `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stride of axis `k` in the linear index (axis 0 fastest).
    pub fn stride(&self, k: usize) -> usize {
        self.n.pow(k as u32)
    }

    /// Per-axis node numbers `1..=n` of a linear index.
    pub fn multi(&self, mut lin: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            out.push(lin % self.n + 1);
            lin /= self.n;
        }
        out
    }

    /// Linear index of per-axis node numbers `1..=n`; `None` on the boundary or outside.
    pub fn linear(&self, idx: &[i64]) -> Option<usize> {
        let mut lin = 0usize;
        for (k, &i) in idx.iter().enumerate() {
            if i < 1 || i > self.n as i64 {
                return None;
            }
            lin += (i as usize - 1) * self.stride(k);
        }
        Some(lin)
    }

    pub fn coord(&self, i: usize) -> T {
        -self.l / T::lit(2.0) + T::from_count(i) * self.h()
    }

    pub fn coords_into(&self, lin: usize, out: &mut [T]) {
        let mut r = lin;
        for o in out.iter_mut().take(self.d) {
            *o = self.coord(r % self.n + 1);
            r /= self.n;
        }
    }

    pub fn coords(&self, lin: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.d];
        self.coords_into(lin, &mut v);
        v
    }
}

/// Coefficients at one point; `a` is `d x d` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients<T> {
    pub a: Vec<T>,
    pub c: T,
    pub v: T,
}

/// Declared bounds of a generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Declared<T> {
    pub theta_e: T,
    pub theta_l: T,
    pub norm_c: T,
    pub norm_v: T,
}

/// Pure map `x -> (A(x), c(x), V(x))`.
pub trait Generator<T>: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[T]) -> Coefficients<T>;
    fn name(&self) -> String;
    fn declared(&self) -> Declared<T>;
}

/// `A = I`, `c = V = 0`.
#[derive(Debug, Clone)]
pub struct Identity {
    pub d: usize,
}

impl<T: Real> Generator<T> for Identity {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, _x: &[T]) -> Coefficients<T> {
        let mut a = vec![T::zero(); self.d * self.d];
        for i in 0..self.d {
            a[i * self.d + i] = T::one();
        }
        Coefficients { a, c: T::zero(), v: T::zero() }
    }
    fn name(&self) -> String {
        "identity".into()
    }
    fn declared(&self) -> Declared<T> {
        Declared { theta_e: T::one(), theta_l: T::zero(), norm_c: T::zero(), norm_v: T::zero() }
    }
}

/// Diagonal `a_ii(x) = 2 + cos(s_i x_i)`.
#[derive(Debug, Clone)]
pub struct Homogenization<T> {
    pub scales: Vec<T>,
}

impl<T: Real> Generator<T> for Homogenization<T> {
    fn dim(&self) -> usize {
        self.scales.len()
    }
    fn eval(&self, x: &[T]) -> Coefficients<T> {
        let d = self.scales.len();
        let mut a = vec![T::zero(); d * d];
        for i in 0..d {
            a[i * d + i] = T::lit(2.0) + (self.scales[i] * x[i]).cos();
        }
        Coefficients { a, c: T::zero(), v: T::zero() }
    }
    fn name(&self) -> String {
        let s: Vec<String> = self.scales.iter().map(|s| s.to_string()).collect();
        format!("homogenization[{}]", s.join(","))
    }
    fn declared(&self) -> Declared<T> {
        let lip = self.scales.iter().fold(T::zero(), |m, s| m.max(s.abs()));
        Declared { theta_e: T::lit(3.0), theta_l: lip, norm_c: T::zero(), norm_v: T::zero() }
    }
}

/// Smooth `d = 2` field whose cross term vanishes on the faces of `Λ_L`.
/// Diagonal entries and `V` are even across every face, so all reflections
/// are smooth.
#[derive(Debug, Clone)]
pub struct DirCross<T> {
    pub l: T,
}

impl<T: Real> Generator<T> for DirCross<T> {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &[T]) -> Coefficients<T> {
        let k1 = T::pi() / self.l;
        let k2 = T::lit(2.0) * k1;
        let (c1, c2) = ((k2 * x[0]).cos(), (k2 * x[1]).cos());
        let a11 = T::lit(2.0) + T::lit(0.5) * c1 * c2;
        let a22 = T::lit(2.0) + T::lit(0.4) * c1 + T::lit(0.3) * c2;
        let a12 = T::lit(0.3) * (k1 * x[0]).cos() * (k1 * x[1]).cos();
        Coefficients { a: vec![a11, a12, a12, a22], c: T::zero(), v: T::one() + T::lit(0.5) * c1 * c2 }
    }
    fn name(&self) -> String {
        format!("dir-cross[L={}]", self.l)
    }
    fn declared(&self) -> Declared<T> {
        Declared {
            theta_e: T::lit(3.0),
            theta_l: T::lit(1.3) * T::pi() * T::lit(2.0).sqrt() / self.l,
            norm_c: T::zero(),
            norm_v: T::lit(1.5),
        }
    }
}

/// Constant `A = [[2, v], [v, 2]]`; violates the boundary condition on the
/// cross term whenever `v != 0`.
#[derive(Debug, Clone)]
pub struct ConstCross<T> {
    pub value: T,
}

impl<T: Real> Generator<T> for ConstCross<T> {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, _x: &[T]) -> Coefficients<T> {
        let two = T::lit(2.0);
        Coefficients { a: vec![two, self.value, self.value, two], c: T::zero(), v: T::zero() }
    }
    fn name(&self) -> String {
        format!("const-cross[{}]", self.value)
    }
    fn declared(&self) -> Declared<T> {
        let v = self.value.abs();
        Declared { theta_e: T::lit(2.0) + v, theta_l: T::zero(), norm_c: T::zero(), norm_v: T::zero() }
    }
}

type CoeffFn<T> = dyn Fn(&[T]) -> Coefficients<T> + Send + Sync;

/// Generator from a closure.
pub struct FnGenerator<T> {
    pub d: usize,
    pub label: String,
    pub declared: Declared<T>,
    pub f: Box<CoeffFn<T>>,
}

impl<T: Real> Generator<T> for FnGenerator<T> {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, x: &[T]) -> Coefficients<T> {
        (self.f)(x)
    }
    fn name(&self) -> String {
        self.label.clone()
    }
    fn declared(&self) -> Declared<T> {
        self.declared
    }
}

/// Adds a constant to `V`.
pub struct Shifted<T> {
    pub inner: Arc<dyn Generator<T>>,
    pub shift: T,
}

impl<T: Real> Generator<T> for Shifted<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &[T]) -> Coefficients<T> {
        let mut c = self.inner.eval(x);
        c.v += self.shift;
        c
    }
    fn name(&self) -> String {
        format!("{}+{}", self.inner.name(), self.shift)
    }
    fn declared(&self) -> Declared<T> {
        let mut d = self.inner.declared();
        d.norm_v += self.shift.abs();
        d
    }
}

/// Builds a generator from a registry name and parameters.
pub fn generator_by_name<T: Real>(name: &str, d: usize, l: T, params: &[T]) -> Result<Arc<dyn Generator<T>>> {
    let g: Arc<dyn Generator<T>> = match name {
        "identity" => Arc::new(Identity { d }),
        "homogenization" => {
            let scales = if params.is_empty() { vec![T::one(); d] } else { params.to_vec() };
            if scales.len() != d {
                return Err(Error::InvalidParams(format!("homogenization needs {d} scales")));
            }
            Arc::new(Homogenization { scales })
        }
        "dir-cross" if d == 2 => Arc::new(DirCross { l }),
        "const-cross" if d == 2 => Arc::new(ConstCross { value: params.first().copied().unwrap_or(T::lit(0.1)) }),
        _ => return Err(Error::InvalidParams(format!("unknown generator '{name}' for d = {d}"))),
    };
    Ok(g)
}

/// Node-sampled coefficients plus the generating closure.
#[derive(Clone)]
pub struct CoefficientField<T> {
    pub grid: GridSpec<T>,
    /// `d x d` blocks per node.
    pub a: Vec<T>,
    pub c: Vec<T>,
    pub v: Vec<T>,
    pub generator: Arc<dyn Generator<T>>,
}

impl<T: Real> std::fmt::Debug for CoefficientField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientField")
            .field("grid", &self.grid)
            .field("generator", &self.generator.name())
            .finish()
    }
}

fn check_symmetric<T: Real>(a: &[T], d: usize, x: &[T]) -> Result<()> {
    let scale = a.iter().fold(T::one(), |m, v| m.max(v.abs()));
    for i in 0..d {
        for j in 0..i {
            if (a[i * d + j] - a[j * d + i]).abs() > T::lit(1e-14) * scale {
                return Err(Error::Asymmetric { at: x.iter().map(|v| v.as_f64()).collect() });
            }
        }
    }
    Ok(())
}

/// Samples the generator at all interior nodes.
pub fn sample_field<T: Real>(generator: Arc<dyn Generator<T>>, grid: GridSpec<T>) -> Result<CoefficientField<T>> {
    if generator.dim() != grid.d {
        return Err(Error::GridMismatch(format!("generator d = {} vs grid d = {}", generator.dim(), grid.d)));
    }
    let d = grid.d;
    let n = grid.len();
    let mut a = Vec::with_capacity(n * d * d);
    let mut c = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut x = vec![T::zero(); d];
    for lin in 0..n {
        grid.coords_into(lin, &mut x);
        let co = generator.eval(&x);
        check_symmetric(&co.a, d, &x)?;
        a.extend_from_slice(&co.a);
        c.push(co.c);
        v.push(co.v);
    }
    Ok(CoefficientField { grid, a, c, v, generator })
}

impl<T: Real> CoefficientField<T> {
    pub fn a_at(&self, lin: usize) -> &[T] {
        let dd = self.grid.d * self.grid.d;
        &self.a[lin * dd..(lin + 1) * dd]
    }

    /// JSON header followed by a CSV node table.
    pub fn to_json_csv(&self) -> (String, String) {
        let dec = self.generator.declared();
        let header = serde_json::json!({
            "d": self.grid.d,
            "L": self.grid.l.as_f64(),
            "n": self.grid.n,
            "generator": self.generator.name(),
            "declared": {
                "thetaE": dec.theta_e.as_f64(),
                "thetaL": dec.theta_l.as_f64(),
                "normC": dec.norm_c.as_f64(),
                "normV": dec.norm_v.as_f64(),
            }
        });
        let d = self.grid.d;
        let mut csv = String::new();
        let xs: Vec<String> = (0..d).map(|k| format!("x{k}")).collect();
        let aa: Vec<String> = (0..d * d).map(|k| format!("a{}{}", k / d + 1, k % d + 1)).collect();
        let _ = writeln!(csv, "{},{},c,V", xs.join(","), aa.join(","));
        for lin in 0..self.grid.len() {
            let x: Vec<String> = self.grid.coords(lin).iter().map(|v| format!("{:e}", v.as_f64())).collect();
            let a: Vec<String> = self.a_at(lin).iter().map(|v| format!("{:e}", v.as_f64())).collect();
            let _ = writeln!(csv, "{},{},{:e},{:e}", x.join(","), a.join(","), self.c[lin].as_f64(), self.v[lin].as_f64());
        }
        (serde_json::to_string_pretty(&header).unwrap_or_default(), csv)
    }
}

/// Measured ellipticity range and Lipschitz estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasuredTheta<T> {
    pub theta_e_minus: T,
    pub theta_e_plus: T,
    pub theta_l_hat: T,
}

/// Row-sum norm of a difference of two `d x d` blocks.
fn row_sum_diff<T: Real>(a: &[T], b: &[T], d: usize) -> T {
    (0..d)
        .map(|i| (0..d).fold(T::zero(), |s, j| s + (a[i * d + j] - b[i * d + j]).abs()))
        .fold(T::zero(), T::max)
}

/// Eigenvalue range over the given nodes.
pub fn eigen_range<T: Real>(field: &CoefficientField<T>, nodes: impl IntoIterator<Item = usize>) -> (T, T) {
    let d = field.grid.d;
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    for lin in nodes {
        let (vals, _) = jacobi_eigen(field.a_at(lin), d);
        lo = lo.min(vals[0]);
        hi = hi.max(vals[d - 1]);
    }
    (lo, hi)
}

/// Min/max eigenvalue of `A` over nodes and the adjacent-pair Lipschitz estimate.
pub fn measure_theta<T: Real>(field: &CoefficientField<T>) -> MeasuredTheta<T> {
    let (lo, hi) = eigen_range(field, 0..field.grid.len());
    MeasuredTheta { theta_e_minus: lo, theta_e_plus: hi, theta_l_hat: lipschitz_hat(field) }
}

/// `max ||A(x) - A(y)||_inf / h` over axis-adjacent node pairs.
pub fn lipschitz_hat<T: Real>(field: &CoefficientField<T>) -> T {
    let g = &field.grid;
    let d = g.d;
    let h = g.h();
    let mut best = T::zero();
    for lin in 0..g.len() {
        let m = g.multi(lin);
        for (k, &mk) in m.iter().enumerate() {
            if mk < g.n {
                let other = lin + g.stride(k);
                best = best.max(row_sum_diff(field.a_at(lin), field.a_at(other), d) / h);
            }
        }
    }
    best
}

/// Boundary condition on the cross terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirVariant {
    /// All off-diagonal entries vanish on the boundary.
    Dir,
    /// On the face `x_k = ±L/2` only `a_ik = a_ki`, `i != k`, vanish.
    DirPrime,
}

/// Largest offending off-diagonal magnitude on a boundary sample.
pub fn dir_defect<T: Real>(field: &CoefficientField<T>, variant: DirVariant) -> T {
    let g = &field.grid;
    let d = g.d;
    let half = g.l / T::lit(2.0);
    let per = g.n + 2;
    let mut worst = T::zero();
    let mut x = vec![T::zero(); d];
    for k in 0..d {
        for side in [-half, half] {
            for lin in 0..per.pow((d - 1) as u32) {
                let mut r = lin;
                for (ax, xa) in x.iter_mut().enumerate() {
                    if ax == k {
                        *xa = side;
                    } else {
                        *xa = -half + T::from_count(r % per) * g.h();
                        r /= per;
                    }
                }
                let co = field.generator.eval(&x);
                for i in 0..d {
                    for j in 0..d {
                        let relevant = i != j
                            && match variant {
                                DirVariant::Dir => true,
                                DirVariant::DirPrime => i == k || j == k,
                            };
                        if relevant {
                            worst = worst.max(co.a[i * d + j].abs());
                        }
                    }
                }
            }
        }
    }
    worst
}

/// `true` iff the off-diagonal entries vanish on the boundary to `1e-12`.
pub fn check_dir<T: Real>(field: &CoefficientField<T>, variant: DirVariant) -> bool {
    dir_defect(field, variant) <= T::lit(1e-12)
}

/// Odd reflection of the cube `Λ_L` into `Λ_{factor L}`, per axis.
pub struct Reflected<T> {
    pub inner: Arc<dyn Generator<T>>,
    pub l: T,
}

impl<T: Real> Reflected<T> {
    /// Folded coordinates and per-axis parities.
    pub fn fold(&self, x: &[T]) -> (Vec<T>, Vec<bool>) {
        let mut u = Vec::with_capacity(x.len());
        let mut odd = Vec::with_capacity(x.len());
        for &xi in x {
            let gamma = (xi / self.l).round();
            let mut ui = xi - gamma * self.l;
            let o = (gamma.as_f64() as i64).rem_euclid(2) == 1;
            if o {
                ui = -ui;
            }
            u.push(ui);
            odd.push(o);
        }
        (u, odd)
    }
}

impl<T: Real> Generator<T> for Reflected<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &[T]) -> Coefficients<T> {
        let (u, odd) = self.fold(x);
        let mut co = self.inner.eval(&u);
        let d = u.len();
        for i in 0..d {
            for j in 0..d {
                if odd[i] != odd[j] {
                    co.a[i * d + j] = -co.a[i * d + j];
                }
            }
        }
        co
    }
    fn name(&self) -> String {
        format!("reflected[{}]", self.inner.name())
    }
    fn declared(&self) -> Declared<T> {
        self.inner.declared()
    }
}

/// A field extended by antisymmetric reflection.
#[derive(Clone)]
pub struct Extension<T> {
    pub source: CoefficientField<T>,
    pub factor: usize,
    pub result: CoefficientField<T>,
    /// Source node of each result node with its sign; `None` on interfaces.
    pub origin: Vec<Option<(usize, bool)>>,
}

impl<T: Real> std::fmt::Debug for Extension<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Extension").field("source", &self.source).field("factor", &self.factor).finish()
    }
}

impl<T: Real> Extension<T> {
    /// Result nodes that are reflections of source nodes.
    pub fn reflected_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.origin.iter().enumerate().filter_map(|(i, o)| o.map(|_| i))
    }
}

/// Extends field and node function `psi` to `Λ_{factor L}` (`factor` 3 or 9).
pub fn reflect_extend<T: Real>(
    field: &CoefficientField<T>,
    psi: &[T],
    factor: usize,
) -> Result<(Extension<T>, Vec<T>)> {
    if factor != 3 && factor != 9 {
        return Err(Error::InvalidParams(format!("reflection factor {factor} not in {{3, 9}}")));
    }
    if psi.len() != field.grid.len() {
        return Err(Error::GridMismatch("psi length differs from the grid".into()));
    }
    let defect = dir_defect(field, DirVariant::Dir);
    if defect > T::lit(1e-12) {
        return Err(Error::DirViolated { max_offdiag: defect.as_f64() });
    }
    reflect_extend_unchecked(field, psi, factor)
}

/// [`reflect_extend`] without the boundary condition check. Used to exhibit
/// the jump of the cross terms when the condition fails.
pub fn reflect_extend_unchecked<T: Real>(
    field: &CoefficientField<T>,
    psi: &[T],
    factor: usize,
) -> Result<(Extension<T>, Vec<T>)> {
    if factor != 3 && factor != 9 {
        return Err(Error::InvalidParams(format!("reflection factor {factor} not in {{3, 9}}")));
    }
    if psi.len() != field.grid.len() {
        return Err(Error::GridMismatch("psi length differs from the grid".into()));
    }
    let src = &field.grid;
    let d = src.d;
    let n = src.n;
    let big = GridSpec::new(d, src.l * T::from_count(factor), factor * (n + 1) - 1)?;
    let centre = (factor as i64 - 1) / 2;
    let gen: Arc<dyn Generator<T>> = Arc::new(Reflected { inner: field.generator.clone(), l: src.l });

    let total = big.len();
    let dd = d * d;
    let mut a = Vec::with_capacity(total * dd);
    let mut c = Vec::with_capacity(total);
    let mut v = Vec::with_capacity(total);
    let mut origin = Vec::with_capacity(total);
    let mut out_psi = Vec::with_capacity(total);
    let mut src_idx = vec![0i64; d];
    let mut x = vec![T::zero(); d];
    for lin in 0..total {
        let m = big.multi(lin);
        let mut interface = false;
        let mut odd = vec![false; d];
        for k in 0..d {
            let q = m[k] / (n + 1);
            let r = m[k] % (n + 1);
            if r == 0 {
                interface = true;
                break;
            }
            let gamma = q as i64 - centre;
            odd[k] = gamma.rem_euclid(2) == 1;
            src_idx[k] = if odd[k] { (n + 1 - r) as i64 } else { r as i64 };
        }
        if interface {
            big.coords_into(lin, &mut x);
            let co = gen.eval(&x);
            a.extend_from_slice(&co.a);
            c.push(T::zero());
            v.push(T::zero());
            origin.push(None);
            out_psi.push(T::zero());
            continue;
        }
        let s = src.linear(&src_idx).expect("folded index inside source grid");
        let block = field.a_at(s);
        for i in 0..d {
            for j in 0..d {
                let val = block[i * d + j];
                a.push(if odd[i] != odd[j] { -val } else { val });
            }
        }
        c.push(field.c[s]);
        v.push(field.v[s]);
        let negative = odd.iter().filter(|&&o| o).count() % 2 == 1;
        origin.push(Some((s, negative)));
        out_psi.push(if negative { -psi[s] } else { psi[s] });
    }
    let result = CoefficientField { grid: big, a, c, v, generator: gen };
    Ok((Extension { source: field.clone(), factor, result, origin }, out_psi))
}

/// Pull back `x -> G y`: coefficients on `Λ_{L/G}` with `c, V` scaled by `G^2`.
pub struct Rescaled<T> {
    pub inner: Arc<dyn Generator<T>>,
    pub g: T,
}

impl<T: Real> Generator<T> for Rescaled<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, y: &[T]) -> Coefficients<T> {
        let x: Vec<T> = y.iter().map(|&v| v * self.g).collect();
        let mut co = self.inner.eval(&x);
        let g2 = self.g * self.g;
        co.c *= g2;
        co.v *= g2;
        co
    }
    fn name(&self) -> String {
        format!("rescaled[{}, G={}]", self.inner.name(), self.g)
    }
    fn declared(&self) -> Declared<T> {
        let d = self.inner.declared();
        let g2 = self.g * self.g;
        Declared { theta_e: d.theta_e, theta_l: d.theta_l * self.g, norm_c: d.norm_c * g2, norm_v: d.norm_v * g2 }
    }
}

/// Rescales a field on `Λ_L` with cells of size `g` to unit cells on `Λ_{L/G}`.
pub fn rescale<T: Real>(field: &CoefficientField<T>, g: T) -> Result<CoefficientField<T>> {
    crate::geometry::cells_per_axis(field.grid.l, g)?;
    if g == T::one() {
        return Ok(field.clone());
    }
    let grid = GridSpec::new(field.grid.d, field.grid.l / g, field.grid.n)?;
    sample_field(Arc::new(Rescaled { inner: field.generator.clone(), g }), grid)
}

/// Continuum `(H u)(x) = -div(A grad u) + (c + V) u` by nested fourth order
/// central differences with step `eta`; used as an independent reference.
pub fn apply_continuum<T: Real>(gen: &dyn Generator<T>, u: &dyn Fn(&[T]) -> T, x: &[T], eta: T) -> T {
    let d = x.len();
    let weights = [
        (T::lit(-2.0), T::lit(1.0 / 12.0)),
        (T::lit(-1.0), T::lit(-8.0 / 12.0)),
        (T::lit(1.0), T::lit(8.0 / 12.0)),
        (T::lit(2.0), T::lit(-1.0 / 12.0)),
    ];
    let shifted = |p: &[T], k: usize, s: T| -> Vec<T> {
        let mut q = p.to_vec();
        q[k] += s * eta;
        q
    };
    let grad_j = |p: &[T], j: usize| -> T {
        weights.iter().fold(T::zero(), |acc, &(s, w)| acc + w * u(&shifted(p, j, s))) / eta
    };
    let flux_i = |p: &[T], i: usize| -> T {
        let co = gen.eval(p);
        (0..d).fold(T::zero(), |acc, j| acc + co.a[i * d + j] * grad_j(p, j))
    };
    let mut div = T::zero();
    for i in 0..d {
        div += weights.iter().fold(T::zero(), |acc, &(s, w)| acc + w * flux_i(&shifted(x, i, s), i)) / eta;
    }
    let co = gen.eval(x);
    -div + (co.c + co.v) * u(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_indexing() {
        let g = GridSpec::new(2, 4.0f64, 3).unwrap();
        assert_eq!(g.h(), 1.0);
        assert_eq!(g.coords(0), vec![-1.0, -1.0]);
        assert_eq!(g.coords(5), vec![1.0, 0.0]);
        assert_eq!(g.linear(&[3, 2]), Some(5));
        assert_eq!(g.linear(&[0, 2]), None);
    }

    #[test]
    fn reflection_fold() {
        let r = Reflected::<f64> { inner: Arc::new(Identity { d: 1 }), l: 2.0 };
        let (u, odd) = r.fold(&[1.5]);
        assert!((u[0] - 0.5).abs() < 1e-15 && odd[0]);
        let (u, odd) = r.fold(&[4.2]);
        assert!((u[0] - 0.2).abs() < 1e-12 && !odd[0]);
    }
}
