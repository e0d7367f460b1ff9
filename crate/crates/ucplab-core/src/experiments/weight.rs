//! Pointwise bounds of the Carleman weight on balls.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Big, CaseRecord, ExperimentReport};
use crate::constants::{mu_pair, ModelParams};
use crate::error::{Error, Result};
use crate::special::{ein, ein_quadrature};

/// One parameter set `(d, thetaE, thetaL, rho, eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSet {
    pub d: usize,
    pub theta_e: f64,
    pub theta_l: f64,
    pub rho: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub sets: Vec<WeightSet>,
    pub points: usize,
    /// Points per set on which the series is compared with quadrature.
    pub quadrature_points: usize,
    pub seed: u64,
    pub slack: f64,
    pub quadrature_tol: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            sets: vec![
                WeightSet { d: 1, theta_e: 1.0, theta_l: 0.0, rho: 1.0, eps: 1.0 },
                WeightSet { d: 2, theta_e: 2.0, theta_l: 0.5, rho: 0.5, eps: 0.5 },
                WeightSet { d: 2, theta_e: 1.5, theta_l: 0.0, rho: 2.0, eps: 0.1 },
                WeightSet { d: 3, theta_e: 4.0, theta_l: 0.1, rho: 0.25, eps: 2.0 },
            ],
            points: 10_000,
            quadrature_points: 200,
            seed: 0,
            slack: 1e-12,
            quadrature_tol: 1e-12,
        }
    }
}

/// `w(x) = phi(sigma(x)/rho)` with `phi(r) = r exp(-Ein(mu r))` and
/// `sigma(x) = sqrt(x^T A0^{-1} x)`.
pub fn carleman_weight_eval(x: &[f64], a0_inv: &DMatrix<f64>, rho: f64, mu: f64) -> f64 {
    let v = DVector::from_column_slice(x);
    let sigma = v.dot(&(a0_inv * &v)).max(0.0).sqrt();
    let r = sigma / rho;
    r * (-ein(mu * r)).exp()
}

fn random_spd_inverse(d: usize, theta_e: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let lo = theta_e.recip();
    // include both ends of the admissible spectrum when there is room
    let eig: Vec<f64> = (0..d)
        .map(|i| match (i, d) {
            (0, _) => lo,
            (1, _) => theta_e,
            _ => rng.gen_range(lo..=theta_e),
        })
        .collect();
    let inv = DMatrix::from_diagonal(&DVector::from_iterator(d, eig.iter().map(|e| e.recip())));
    &q * inv * q.transpose()
}

fn uniform_ball(d: usize, rho: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r = rho * rng.gen::<f64>().powf(1.0 / d as f64);
    dir.iter().map(|x| r * x / n).collect()
}

pub fn carleman_weight(cfg: &WeightConfig) -> Result<ExperimentReport> {
    let mut cases = Vec::new();
    for (si, s) in cfg.sets.iter().enumerate() {
        if !(s.rho > 0.0 && s.eps > 0.0) {
            return Err(Error::InvalidParams("rho and eps must be positive".into()));
        }
        let p = ModelParams::new(s.d, s.theta_e, s.theta_l)?;
        let (mu, mu1) = mu_pair(s.rho, s.eps, &p);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(si as u64);
        let a0_inv = random_spd_inverse(s.d, s.theta_e, &mut rng);
        let pts: Vec<Vec<f64>> = (0..cfg.points).map(|_| uniform_ball(s.d, s.rho, &mut rng)).collect();

        // (lower slack, upper slack) per point, both nonnegative on success
        let slacks: Vec<(f64, f64)> = pts
            .par_iter()
            .map(|x| {
                let v = DVector::from_column_slice(x);
                let sigma = v.dot(&(&a0_inv * &v)).max(0.0).sqrt();
                let w = carleman_weight_eval(x, &a0_inv, s.rho, mu);
                let hi = sigma / s.rho;
                let lo = hi / mu1;
                (w - lo + cfg.slack, hi - w + cfg.slack)
            })
            .collect();
        let worst_lo = slacks.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let worst_hi = slacks.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let key = format!("set{si}");
        let base = json!({"d": s.d, "theta_e": s.theta_e, "theta_l": s.theta_l, "rho": s.rho, "eps": s.eps, "mu": mu, "mu1": mu1});

        for (side, worst) in [("lower", worst_lo), ("upper", worst_hi)] {
            let mut c = CaseRecord::new(format!("{key}/{side}"), "carleman-weight", base.clone());
            c.x = s.rho;
            c.observed = worst;
            c.margin_log10 = Big::F(worst);
            c.pass = worst >= 0.0;
            cases.push(c);
        }

        let worst_q = pts
            .par_iter()
            .take(cfg.quadrature_points)
            .map(|x| {
                let v = DVector::from_column_slice(x);
                let z = mu * v.dot(&(&a0_inv * &v)).max(0.0).sqrt() / s.rho;
                let a = ein(z);
                let b = ein_quadrature(z);
                if a == 0.0 && b == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / a.abs().max(b.abs())
                }
            })
            .reduce(|| 0.0, f64::max);
        let mut c = CaseRecord::new(format!("{key}/quadrature"), "carleman-weight", base);
        c.x = s.rho;
        c.observed = worst_q;
        c.bound_log10 = Big::F(cfg.quadrature_tol.log10());
        c.margin_log10 = Big::F(cfg.quadrature_tol.log10() - worst_q.max(1e-300).log10());
        c.pass = worst_q <= cfg.quadrature_tol;
        cases.push(c);
    }
    Ok(ExperimentReport::new("weight", cases, json!({"points": cfg.points, "seed": cfg.seed})))
}
