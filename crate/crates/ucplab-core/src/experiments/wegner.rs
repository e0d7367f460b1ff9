//! Monte Carlo eigenvalue counts for random breather and alloy models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::spectral::fit_slope;
use super::{Big, CaseRecord, ExperimentReport};
use crate::error::{Error, Result};
use crate::linalg::{kth_eigenvalue, sturm_count, tridiag_bounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomModel {
    /// `u_t = 1` on the interval of radius `t` around the site.
    Breather,
    /// `u_t = t * max(0, 1 - 2|x|)`.
    Alloy,
}

/// One random Schrödinger operator on `(-L/2, L/2)` with one site per unit cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomModelConfig {
    pub model: RandomModel,
    pub l: f64,
    pub h: f64,
    /// Couplings are uniform on `[0, omega_max]`.
    pub omega_max: f64,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        RandomModelConfig { model: RandomModel::Breather, l: 8.0, h: 1.0 / 32.0, omega_max: 0.25 }
    }
}

impl RandomModelConfig {
    fn nodes(&self) -> usize {
        (self.l / self.h).round() as usize - 1
    }

    fn sites(&self) -> Vec<f64> {
        let k = self.l.round() as usize;
        (0..k).map(|j| -self.l / 2.0 + j as f64 + 0.5).collect()
    }

    /// Diagonal and off-diagonal of the discretized operator at couplings `omega`.
    pub fn tridiagonal(&self, omega: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes();
        let h2 = self.h * self.h;
        let sites = self.sites();
        let diag = (0..n)
            .map(|i| {
                let x = -self.l / 2.0 + (i + 1) as f64 * self.h;
                let v: f64 = sites
                    .iter()
                    .zip(omega)
                    .map(|(&z, &w)| match self.model {
                        RandomModel::Breather => f64::from(u8::from((x - z).abs() < w)),
                        RandomModel::Alloy => w * (1.0 - 2.0 * (x - z).abs()).max(0.0),
                    })
                    .sum();
                2.0 / h2 + v
            })
            .collect();
        (diag, vec![-1.0 / h2; n - 1])
    }

    fn validate(&self) -> Result<()> {
        if !(self.l >= 1.0 && (self.l - self.l.round()).abs() < 1e-12) {
            return Err(Error::InvalidParams("L must be a positive integer".into()));
        }
        if !(self.h > 0.0 && self.nodes() >= 2) || !(self.omega_max > 0.0 && self.omega_max < 0.5) {
            return Err(Error::InvalidParams("need h > 0 and omega_max in (0, 1/2)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WegnerConfig {
    pub models: Vec<RandomModel>,
    pub lengths: Vec<f64>,
    pub h: f64,
    pub omega_max: f64,
    pub samples: usize,
    pub energy: f64,
    /// Window half-widths, `logspace(eps_lo, eps_hi, eps_count)`.
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub eps_count: usize,
    /// Indices of the half-widths used in the slope fit.
    pub fit_range: (usize, usize),
    pub bootstrap: usize,
    pub min_slope: f64,
    /// Upper bound of the range of the per-sample monotonicity check.
    pub monotone_top: f64,
    /// Largest componentwise coupling increase in the monotonicity check.
    pub monotone_step: f64,
    pub seed: u64,
}

impl Default for WegnerConfig {
    fn default() -> Self {
        WegnerConfig {
            models: vec![RandomModel::Breather, RandomModel::Alloy],
            lengths: vec![8.0, 16.0],
            h: 1.0 / 32.0,
            omega_max: 0.25,
            samples: 200,
            energy: 1.55,
            eps_lo: -2.0,
            eps_hi: 0.0,
            eps_count: 9,
            fit_range: (2, 6),
            bootstrap: 1000,
            min_slope: 0.2,
            monotone_top: 10.0,
            monotone_step: 0.05,
            seed: 0,
        }
    }
}

impl WegnerConfig {
    pub fn eps(&self) -> Vec<f64> {
        let k = self.eps_count.max(2) - 1;
        (0..self.eps_count).map(|i| 10f64.powf(self.eps_lo + (self.eps_hi - self.eps_lo) * i as f64 / k as f64)).collect()
    }
}

fn sample_rng(seed: u64, stream: u64, i: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream.wrapping_mul(1_000_003).wrapping_add(i as u64));
    r
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

struct SampleOutcome {
    counts: Vec<usize>,
    /// Smallest `lambda_k(omega + step) - lambda_k(omega)` below the top, with slack added.
    monotone_margin: f64,
}

fn run_sample(m: &RandomModelConfig, cfg: &WegnerConfig, eps: &[f64], rng: &mut ChaCha8Rng) -> SampleOutcome {
    let k = m.sites().len();
    let omega: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..=m.omega_max)).collect();
    let (diag, off) = m.tridiagonal(&omega);
    let counts = eps
        .iter()
        .map(|&e| sturm_count(&diag, &off, cfg.energy + e) - sturm_count(&diag, &off, cfg.energy - e))
        .collect();

    let bumped: Vec<f64> = omega.iter().map(|w| w + rng.gen_range(0.0..=cfg.monotone_step)).collect();
    let (d2, o2) = m.tridiagonal(&bumped);
    let (lo, hi) = tridiag_bounds(&d2, &o2);
    let (lo, hi) = (lo.min(tridiag_bounds(&diag, &off).0) - 1.0, hi + 1.0);
    let slack = 8.0 * f64::EPSILON * hi.abs().max(lo.abs());
    let below = sturm_count(&diag, &off, cfg.monotone_top);
    let mut margin = f64::INFINITY;
    for j in 0..below {
        let a = kth_eigenvalue(&diag, &off, j, lo, hi);
        let b = kth_eigenvalue(&d2, &o2, j, lo, hi);
        margin = margin.min(b - a + slack);
    }
    SampleOutcome { counts, monotone_margin: margin }
}

pub fn wegner_monte_carlo(cfg: &WegnerConfig) -> Result<ExperimentReport> {
    let eps = cfg.eps();
    let (f0, f1) = cfg.fit_range;
    if cfg.samples < 2 || cfg.eps_count < 2 || f1 >= eps.len() || f0 >= f1 || cfg.bootstrap == 0 {
        return Err(Error::InvalidParams("bad sampling or fit range".into()));
    }
    let fit_eps = &eps[f0..=f1];
    let mut cases = Vec::new();
    let mut curves = Vec::new();
    for (mi, &model) in cfg.models.iter().enumerate() {
        for &l in &cfg.lengths {
            let m = RandomModelConfig { model, l, h: cfg.h, omega_max: cfg.omega_max };
            m.validate()?;
            let stream = (mi as u64) << 32 | l as u64;
            let outcomes: Vec<SampleOutcome> = (0..cfg.samples)
                .into_par_iter()
                .map(|i| run_sample(&m, cfg, &eps, &mut sample_rng(cfg.seed, stream, i)))
                .collect();
            let mean = |idx: &[usize], j: usize| idx.iter().map(|&i| outcomes[i].counts[j] as f64).sum::<f64>() / idx.len() as f64;
            let all: Vec<usize> = (0..cfg.samples).collect();
            let n_hat: Vec<f64> = (0..eps.len()).map(|j| mean(&all, j)).collect();
            let slope = fit_slope(fit_eps, &n_hat[f0..=f1]);

            let mut brng = sample_rng(cfg.seed, stream ^ 0xB007, 0);
            let mut boot: Vec<f64> = (0..cfg.bootstrap)
                .map(|_| {
                    let idx: Vec<usize> = (0..cfg.samples).map(|_| brng.gen_range(0..cfg.samples)).collect();
                    let y: Vec<f64> = (f0..=f1).map(|j| mean(&idx, j)).collect();
                    fit_slope(fit_eps, &y)
                })
                .filter(|s| s.is_finite())
                .collect();
            boot.sort_by(f64::total_cmp);
            let (ci_lo, ci_hi) = if boot.is_empty() { (f64::NAN, f64::NAN) } else { (percentile(&boot, 0.025), percentile(&boot, 0.975)) };

            let tag = match model {
                RandomModel::Breather => "breather",
                RandomModel::Alloy => "alloy",
            };
            let key = format!("{tag}/L{l}");
            let base = json!({"model": tag, "L": l, "samples": cfg.samples, "energy": cfg.energy});

            let mut c = CaseRecord::new(format!("{key}/slope"), "wegner", base.clone());
            c.x = l;
            c.observed = slope;
            c.bound_log10 = Big::F(cfg.min_slope);
            c.margin_log10 = Big::F(slope - cfg.min_slope);
            c.inputs["ci"] = json!([ci_lo, ci_hi]);
            c.pass = slope >= cfg.min_slope && ci_lo > 0.0;
            cases.push(c);

            let nested = n_hat.windows(2).all(|w| w[0] <= w[1]);
            let mut c = CaseRecord::new(format!("{key}/nested"), "wegner", base.clone());
            c.x = l;
            c.observed = n_hat[0];
            c.pass = nested;
            cases.push(c);

            let worst = outcomes.iter().map(|o| o.monotone_margin).fold(f64::INFINITY, f64::min);
            let mut c = CaseRecord::new(format!("{key}/monotone"), "monotone-coupling", base);
            c.x = l;
            c.observed = worst;
            c.margin_log10 = Big::F(worst);
            c.pass = worst >= 0.0;
            cases.push(c);

            curves.push(json!({"case": key, "eps": eps, "n_hat": n_hat, "slope": slope, "ci": [ci_lo, ci_hi]}));
        }
    }
    Ok(ExperimentReport::new("wegner", cases, json!({"curves": curves, "seed": cfg.seed})))
}
