//! Randomized checks of the two finite dimensional operator inequalities.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Big, CaseRecord, ExperimentReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaConfig {
    pub dim: usize,
    pub draws: usize,
    pub seed: u64,
    /// Probability of the equality case (`B = beta I`, `T3 = I`).
    pub equality_rate: f64,
    pub tol: f64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        LemmaConfig { dim: 8, draws: 10_000, seed: 0, equality_rate: 0.1, tol: 1e-10 }
    }
}

fn rng_for(seed: u64, stream: u64, i: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream * 1_000_003 + i as u64);
    r
}

fn gaussian(n: usize, m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = gaussian(n, n, rng);
    (&g + g.transpose()) * 0.5
}

fn psd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let rank = rng.gen_range(1..=n);
    let g = gaussian(n, rank, rng);
    &g * g.transpose() / n as f64
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let e = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

fn min_eig(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn columns(vecs: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(vecs.nrows(), idx.len(), |r, c| vecs[(r, idx[c])])
}

/// Returns the slack of one draw of the lowest-eigenvalue comparison, or
/// `None` when the window is empty.
fn ground_state_draw(n: usize, rng: &mut ChaCha8Rng, eq_rate: f64) -> (f64, bool) {
    let a = symmetric(n, rng);
    let equality = rng.gen_bool(eq_rate);
    let b = if equality {
        DMatrix::identity(n, n) * rng.gen_range(0.0..2.0)
    } else {
        psd(n, rng)
    };
    let eps0 = 10f64.powf(rng.gen_range(-3.0..0.5));
    let (va, _) = sorted_eigen(a.clone());
    let (vs, qs) = sorted_eigen(&a + &b);
    let idx: Vec<usize> = (0..n).filter(|&i| vs[i] <= vs[0] + eps0).collect();
    let q = columns(&qs, &idx);
    let nu = min_eig(q.transpose() * &b * &q);
    (vs[0] - va[0] - nu, equality)
}

fn projector_draw(n: usize, rng: &mut ChaCha8Rng, eq_rate: f64) -> (Option<f64>, bool) {
    let t1 = symmetric(n, rng);
    let t2 = psd(n, rng);
    let equality = rng.gen_bool(eq_rate);
    let t3 = if equality { DMatrix::identity(n, n) } else { psd(n, rng) };
    let t = 10f64.powf(rng.gen_range(-1.0..0.5));
    let gamma = min_eig(&t1 + &t3 * t);
    let (vh, qh) = sorted_eigen(&t1 + &t2);
    let e0 = rng.gen_range(vh[0] - 0.5..vh[n - 1] + 0.5);
    let w = 10f64.powf(rng.gen_range(-2.0..0.5));
    let idx: Vec<usize> = (0..n).filter(|&i| vh[i] >= e0 - w && vh[i] <= e0).collect();
    if idx.is_empty() {
        return (None, equality);
    }
    let q = columns(&qh, &idx);
    let k = idx.len();
    let m = q.transpose() * &t3 * &q - DMatrix::identity(k, k) * ((gamma - e0) / t);
    (Some(min_eig(m)), equality)
}

pub fn abstract_lemma_tests(cfg: &LemmaConfig) -> Result<ExperimentReport> {
    if cfg.dim == 0 || cfg.draws == 0 || !(0.0..=1.0).contains(&cfg.equality_rate) {
        return Err(Error::InvalidParams("lemma tests need dim, draws > 0 and a rate in [0, 1]".into()));
    }
    let n = cfg.dim;
    let first: Vec<(f64, bool)> =
        (0..cfg.draws).into_par_iter().map(|i| ground_state_draw(n, &mut rng_for(cfg.seed, 1, i), cfg.equality_rate)).collect();
    let second: Vec<(Option<f64>, bool)> =
        (0..cfg.draws).into_par_iter().map(|i| projector_draw(n, &mut rng_for(cfg.seed, 2, i), cfg.equality_rate)).collect();

    let mut cases = Vec::new();
    for (name, slacks) in [
        ("ground-state", first.iter().map(|&(s, e)| (Some(s), e)).collect::<Vec<_>>()),
        ("projector", second),
    ] {
        for equality in [false, true] {
            let sel: Vec<Option<f64>> = slacks.iter().filter(|s| s.1 == equality).map(|s| s.0).collect();
            let vacuous = sel.iter().filter(|s| s.is_none()).count();
            let worst = sel.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            let violations = sel.iter().flatten().filter(|&&s| s < -cfg.tol).count();
            let label = if equality { "equality" } else { "generic" };
            let mut c = CaseRecord::new(
                format!("{name}/{label}"),
                if name == "ground-state" { "eigenvalue-lower-bound" } else { "projector-lower-bound" },
                json!({"dim": n, "draws": sel.len(), "vacuous": vacuous, "violations": violations}),
            );
            c.x = sel.len() as f64;
            c.observed = worst;
            c.bound_log10 = Big::F(-cfg.tol);
            c.margin_log10 = Big::F(worst + cfg.tol);
            c.pass = violations == 0;
            c.vacuous = vacuous == sel.len();
            cases.push(c);
        }
    }
    Ok(ExperimentReport::new("lemmas", cases, json!({"dim": n, "draws": cfg.draws, "seed": cfg.seed, "tol": cfg.tol})))
}
