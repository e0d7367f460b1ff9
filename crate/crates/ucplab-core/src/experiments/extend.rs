//! Reflection of coefficient fields and chains between cell points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::spectral::fit_slope;
use super::{Big, CaseRecord, ExperimentReport};
use crate::constants::{self, ModelParams, RadiiScheme};
use crate::discrete::assemble;
use crate::error::{Error, Result};
use crate::fields::{
    apply_continuum, eigen_range, generator_by_name, lipschitz_hat, reflect_extend, reflect_extend_unchecked,
    sample_field, GridSpec,
};
use crate::geometry::{chain_path, chain_steps};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtendConfig {
    pub generator: String,
    pub l: f64,
    /// Interior nodes per axis, refined by halving `h`.
    pub grids: Vec<usize>,
    pub factor: usize,
    /// Step of the continuum reference operator.
    pub eta: f64,
    pub order_min: f64,
    pub order_max: f64,
    /// Off-diagonal value of the field that violates the boundary condition.
    pub control_value: f64,
}

impl Default for ExtendConfig {
    fn default() -> Self {
        ExtendConfig {
            generator: "dir-cross".into(),
            l: 2.0,
            grids: vec![15, 31, 63],
            factor: 3,
            eta: 1e-3,
            order_min: 1.7,
            order_max: 2.3,
            control_value: 0.1,
        }
    }
}

struct GridOutcome {
    h: f64,
    transport_err: f64,
    ellipticity_equal: bool,
    lip_src: f64,
    lip_ext: f64,
    restriction_equal: bool,
}

fn one_grid(cfg: &ExtendConfig, n: usize) -> Result<GridOutcome> {
    let gen = generator_by_name::<f64>(&cfg.generator, 2, cfg.l, &[])?;
    let grid = GridSpec::new(2, cfg.l, n)?;
    let field = sample_field(gen.clone(), grid)?;
    let k = std::f64::consts::PI / cfg.l;
    let u = move |x: &[f64]| (k * x[0]).cos() * (k * x[1]).cos();
    let psi: Vec<f64> = (0..grid.len()).map(|i| u(&grid.coords(i))).collect();
    let (ext, psi_ext) = reflect_extend(&field, &psi, cfg.factor)?;
    let op = assemble(&ext.result, None)?;
    let h_psi = op.apply(&psi_ext);

    let mut err = 0.0f64;
    let mut ell_equal = true;
    for i in ext.reflected_nodes() {
        let (s, neg) = ext.origin[i].expect("reflected node");
        let reference = apply_continuum(gen.as_ref(), &u, &grid.coords(s), cfg.eta);
        let sign = if neg { -1.0 } else { 1.0 };
        err = err.max((h_psi[i] - sign * reference).abs());
        ell_equal &= eigen_range(&ext.result, [i]) == eigen_range(&field, [s]);
    }

    let centre = (cfg.factor - 1) / 2;
    let mut restriction_equal = true;
    for s in 0..grid.len() {
        let idx: Vec<i64> = grid.multi(s).iter().map(|&m| (centre * (n + 1) + m) as i64).collect();
        let i = ext.result.grid.linear(&idx).expect("centre block inside the extension");
        restriction_equal &= ext.result.a_at(i) == field.a_at(s)
            && ext.result.c[i] == field.c[s]
            && ext.result.v[i] == field.v[s]
            && psi_ext[i] == psi[s];
    }
    Ok(GridOutcome {
        h: grid.h(),
        transport_err: err,
        ellipticity_equal: ell_equal,
        lip_src: lipschitz_hat(&field),
        lip_ext: lipschitz_hat(&ext.result),
        restriction_equal,
    })
}

pub fn extend_demo(cfg: &ExtendConfig) -> Result<ExperimentReport> {
    if cfg.grids.len() < 2 {
        return Err(Error::InvalidParams("need at least two grids".into()));
    }
    let outcomes: Vec<Result<GridOutcome>> = cfg.grids.par_iter().map(|&n| one_grid(cfg, n)).collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let theta_l = generator_by_name::<f64>(&cfg.generator, 2, cfg.l, &[])?.declared().theta_l;
    let mut cases = Vec::new();
    for (o, &n) in outcomes.iter().zip(&cfg.grids) {
        let base = json!({"generator": cfg.generator, "L": cfg.l, "n": n, "factor": cfg.factor});
        let mut c = CaseRecord::new(format!("n{n:04}/ellipticity"), "reflection", base.clone());
        c.x = o.h;
        c.pass = o.ellipticity_equal;
        cases.push(c);

        let allowed = o.lip_src + 2.0 * o.h * theta_l;
        let mut c = CaseRecord::new(format!("n{n:04}/lipschitz"), "reflection", base.clone());
        c.x = o.h;
        c.observed = o.lip_ext;
        c.bound_log10 = Big::F(allowed);
        c.margin_log10 = Big::F(allowed - o.lip_ext);
        c.pass = o.lip_ext <= allowed;
        cases.push(c);

        let mut c = CaseRecord::new(format!("n{n:04}/restriction"), "reflection", base.clone());
        c.x = o.h;
        c.pass = o.restriction_equal;
        cases.push(c);

        let mut c = CaseRecord::new(format!("n{n:04}/transport"), "reflection", base);
        c.x = o.h;
        c.observed = o.transport_err;
        cases.push(c);
    }
    for (w, pair) in outcomes.windows(2).zip(cfg.grids.windows(2)) {
        let order = (w[0].transport_err / w[1].transport_err).ln() / (w[0].h / w[1].h).ln();
        let mut c = CaseRecord::new(format!("order/n{:04}-n{:04}", pair[0], pair[1]), "reflection-consistency", json!({"grids": pair}));
        c.x = w[1].h;
        c.observed = order;
        c.margin_log10 = Big::F((order - cfg.order_min).min(cfg.order_max - order));
        c.pass = (cfg.order_min..=cfg.order_max).contains(&order);
        cases.push(c);
    }
    let hs: Vec<f64> = outcomes.iter().map(|o| o.h).collect();
    let errs: Vec<f64> = outcomes.iter().map(|o| o.transport_err).collect();

    // negative control: constant cross term, which does not vanish on the boundary
    let n = cfg.grids[0];
    let grid = GridSpec::new(2, cfg.l, n)?;
    let field = sample_field(generator_by_name::<f64>("const-cross", 2, cfg.l, &[cfg.control_value])?, grid)?;
    let zero = vec![0.0; grid.len()];
    let rejected = matches!(reflect_extend(&field, &zero, cfg.factor), Err(Error::DirViolated { .. }));
    let (ext, _) = reflect_extend_unchecked(&field, &zero, cfg.factor)?;
    let jump = lipschitz_hat(&ext.result);
    let allowed = lipschitz_hat(&field);
    let mut c = CaseRecord::new("control/const-cross", "reflection-negative-control", json!({"value": cfg.control_value, "n": n}));
    c.x = grid.h();
    c.observed = jump;
    c.bound_log10 = Big::F(allowed);
    c.margin_log10 = Big::F(jump - allowed);
    c.inputs["rejected"] = json!(rejected);
    c.pass = rejected && jump > allowed;
    cases.push(c);

    Ok(ExperimentReport::new(
        "extend-demo",
        cases,
        json!({"h": hs, "transport_err": errs, "order_fit": fit_slope(&hs, &errs), "control_lipschitz": jump}),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainDemoConfig {
    pub dims: Vec<usize>,
    pub draws: usize,
    /// Fixed step band; drawn at random per path when absent.
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub seed: u64,
    pub tol: f64,
}

impl Default for ChainDemoConfig {
    fn default() -> Self {
        ChainDemoConfig { dims: vec![1, 2, 3], draws: 10_000, a: None, b: None, seed: 0, tol: 1e-12 }
    }
}

fn draw_band(cfg: &ChainDemoConfig, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let a = cfg.a.unwrap_or_else(|| rng.gen_range(0.01..=0.5));
    let b = cfg.b.unwrap_or_else(|| a + rng.gen_range(0.01..=0.5));
    (a, b)
}

pub fn chain_demo(cfg: &ChainDemoConfig) -> Result<ExperimentReport> {
    if let (Some(a), Some(b)) = (cfg.a, cfg.b) {
        if !(a > 0.0 && a < b) {
            return Err(Error::InvalidParams(format!("need 0 < a < b, got a = {a}, b = {b}")));
        }
    }
    if cfg.dims.contains(&0) || cfg.draws == 0 {
        return Err(Error::InvalidParams("dimensions and draws must be positive".into()));
    }
    let mut cases = Vec::new();
    let mut witness = serde_json::Value::Null;
    for &d in &cfg.dims {
        // standard chaining radii give the same step count as the constants
        let p = ModelParams::new(d, 1.0, 0.0)?;
        let radii = constants::standard_radii(&p, RadiiScheme::ChainFixed)?;
        let (a, _) = constants::chain_margin(d, &radii);
        let b = a + (radii.big_r2 - radii.r2) / 2.0;
        let m = chain_steps(d, a, b);
        let expected = constants::chain_length(d, &radii);
        let mut c = CaseRecord::new(format!("d{d}/standard-length"), "chaining", json!({"d": d, "a": a, "b": b, "m": m}));
        c.x = d as f64;
        c.observed = m as f64;
        c.bound_log10 = Big::F(expected as f64);
        c.pass = m as u64 == expected;
        cases.push(c);

        let results: Vec<Result<(usize, f64)>> = (0..cfg.draws)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream((d as u64) << 32 | i as u64);
                let (a, b) = draw_band(cfg, &mut rng);
                let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..=0.5)).collect();
                let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..=0.5)).collect();
                let path = chain_path(&z, &y, a, b)?;
                let worst = path
                    .points
                    .windows(2)
                    .map(|w| {
                        let len = w[0].iter().zip(&w[1]).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
                        (len - a).min(b - len)
                    })
                    .fold(f64::INFINITY, f64::min);
                Ok((path.violations(&z, &y, cfg.tol).len(), worst))
            })
            .collect();
        let results = results.into_iter().collect::<Result<Vec<_>>>()?;
        let failed = results.iter().filter(|r| r.0 > 0).count();
        let slack = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let mut c = CaseRecord::new(
            format!("d{d}/paths"),
            "chaining",
            json!({"d": d, "draws": cfg.draws, "a": cfg.a, "b": cfg.b, "violating_paths": failed}),
        );
        c.x = d as f64;
        c.observed = failed as f64;
        c.margin_log10 = Big::F(slack);
        c.pass = failed == 0;
        cases.push(c);

        if witness.is_null() {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((d as u64) << 32);
            let (a, b) = draw_band(cfg, &mut rng);
            let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..=0.5)).collect();
            let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..=0.5)).collect();
            let path = chain_path(&z, &y, a, b)?;
            witness = json!({"d": d, "a": a, "b": b, "m": path.m, "points": path.points});
        }
    }
    Ok(ExperimentReport::new("chain-demo", cases, json!({"seed": cfg.seed, "witness": witness})))
}
