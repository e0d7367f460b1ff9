//! Observability, lifting and short-interval uncertainty on assembled operators.

use rayon::prelude::*;
use num_traits::Float;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{declared_params, wide_log10, wln, Big, Calibration, CaseRecord, ExperimentReport, FieldSpec};
use crate::constants::{self, ApplicationInputs, CsfucOptions, ModelParams};
use crate::discrete::{
    assemble, eigs_lowest_with, hellmann_feynman_mask, masked_norm_sq, projector_sample, EigOptions, Perturbation,
    ProjectorWeights, SpectralResult,
};
use crate::error::{Error, Result};
use crate::fields::{check_dir, CoefficientField, DirVariant};
use crate::geometry::{make_equidistributed, sensing_mask, Placement};
use crate::linalg::norm;
use crate::scalar::Wide;

fn default_fields() -> Vec<FieldSpec> {
    vec![
        FieldSpec::new(1, 4.0, "identity"),
        FieldSpec::new(1, 8.0, "identity"),
        FieldSpec::new(2, 4.0, "dir-cross"),
        FieldSpec::new(2, 8.0, "dir-cross"),
    ]
}

fn placement(name: &str, seed: u64) -> Result<Placement> {
    match name {
        "centered" => Ok(Placement::Centered),
        "random" => Ok(Placement::SeededRandom(seed)),
        other => Err(Error::InvalidParams(format!("unknown placement '{other}'"))),
    }
}

/// Radius at which the bound is evaluated. Above `delta0` the bound at
/// `delta0` still applies when `cap` is set, since the sensing set only grows.
fn bound_delta(delta: f64, delta0: Wide, cap: bool) -> Result<Wide> {
    let d = Wide::from_f64(delta);
    if d < delta0 {
        return Ok(d);
    }
    if cap {
        Ok(delta0 * Wide::from_f64(1.0 - 1e-12))
    } else {
        Err(Error::DeltaOutOfRange { delta, delta0: delta0.value_f64() })
    }
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0 && d < 0.5)) {
        return Err(Error::InvalidParams("sensing radii must lie in (0, 1/2)".into()));
    }
    Ok(())
}

fn solve(field: &CoefficientField<f64>, mask: Option<(&[bool], f64)>, opts: &EigOptions<f64>) -> Result<SpectralResult<f64>> {
    let op = assemble(field, mask.map(|(m, t)| Perturbation { t, mask: m }))?;
    let mut o = opts.clone();
    o.k = o.k.min(op.dim());
    eigs_lowest_with(&op, &o)
}

fn potential_gap(field: &CoefficientField<f64>, lambda: f64) -> f64 {
    field.c.iter().zip(&field.v).fold(0.0f64, |m, (c, v)| m.max((lambda - c - v).abs()))
}

/// Observability of eigenfunctions on sensing sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserveConfig {
    pub fields: Vec<FieldSpec>,
    pub deltas: Vec<f64>,
    pub k: usize,
    pub tol: f64,
    pub seed: u64,
    /// `centered` or `random`.
    pub placement: String,
    pub calibration: Calibration,
    /// Evaluate the bound at `delta0` for radii above it.
    #[serde(default)]
    pub isotone_cap: bool,
}

impl Default for ObserveConfig {
    fn default() -> Self {
        ObserveConfig {
            fields: default_fields(),
            deltas: vec![0.05, 0.1, 0.2],
            k: 5,
            tol: 1e-10,
            seed: 0,
            placement: "centered".into(),
            calibration: Calibration::default(),
            isotone_cap: true,
        }
    }
}

/// Validates radii against `delta0` of every field.
pub fn observe_preconditions(fields: &[FieldSpec], deltas: &[f64], cap: bool) -> Result<()> {
    check_deltas(deltas)?;
    for f in fields {
        let field = f.build()?;
        let d0 = constants::delta0(&declared_params(&field)?);
        for &d in deltas {
            bound_delta(d, d0, cap)?;
        }
    }
    Ok(())
}

pub fn observability_experiment(cfg: &ObserveConfig) -> Result<ExperimentReport> {
    observe_preconditions(&cfg.fields, &cfg.deltas, cfg.isotone_cap)?;
    let cal = cfg.calibration.wide()?;
    let mut deltas = cfg.deltas.clone();
    deltas.sort_by(f64::total_cmp);
    let per_field: Vec<Result<(Vec<CaseRecord>, serde_json::Value)>> = cfg
        .fields
        .par_iter()
        .map(|spec| {
            let field = spec.build()?;
            let dir_ok = field.grid.d == 1 || check_dir(&field, DirVariant::Dir);
            let p = declared_params(&field)?;
            let d0 = constants::delta0(&p);
            let spec_res = solve(&field, None, &EigOptions::new(cfg.k, cfg.tol, cfg.seed))?;
            let op = assemble(&field, None)?;
            let mut cases = Vec::new();
            let mut rho = vec![vec![0.0; deltas.len()]; spec_res.eigenvalues.len()];
            for (di, &delta) in deltas.iter().enumerate() {
                let z = make_equidistributed(field.grid.d, 1.0, delta, field.grid.l, placement(&cfg.placement, cfg.seed)?)?;
                let mask = sensing_mask(&z, &field.grid)?;
                let de = bound_delta(delta, d0, cfg.isotone_cap)?;
                for (k, (&lambda, psi)) in spec_res.eigenvalues.iter().zip(&spec_res.eigenvectors).enumerate() {
                    let nn = norm(psi).powi(2);
                    let r = masked_norm_sq(psi, &mask) / nn;
                    rho[k][di] = r;
                    let hpsi = op.apply(psi);
                    let zeta: Vec<f64> = hpsi.iter().zip(psi).map(|(a, b)| a - lambda * b).collect();
                    let zeta_term = delta * delta * norm(&zeta).powi(2) / nn;
                    let pk = ModelParams { norm_v: Wide::from_f64(potential_gap(&field, lambda)), norm_c: Wide::ZERO, ..p };
                    let cs = constants::csfuc(de, &pk, &cal, CsfucOptions { homogeneous: true, finite_cube: true })?;
                    let lhs = wln(r + zeta_term);
                    let pass = lhs >= cs.exact.ln;
                    let mut c = CaseRecord::new(
                        format!("{}/delta{:.3}/k{}", spec.key(), delta, k + 1),
                        if dir_ok { "equidistribution" } else { "equidistribution-negative-control" },
                        json!({
                            "d": field.grid.d, "L": field.grid.l, "n": field.grid.n, "generator": spec.generator,
                            "delta": delta, "delta_bound": Big::from_wide(de).to_json(), "k": k + 1, "lambda": lambda,
                            "zeta_term": zeta_term, "exponent_n": Big::from_wide(cs.exponent_n).to_json(),
                        }),
                    );
                    c.x = delta;
                    c.observed = r;
                    c.bound_log10 = Big::from_wide(wide_log10(cs.exact.ln));
                    c.margin_log10 = Big::from_wide(wide_log10(lhs - cs.exact.ln));
                    c.pass = pass || !dir_ok;
                    cases.push(c);
                }
            }
            let mut slopes = Vec::new();
            for (k, r) in rho.iter().enumerate() {
                let monotone = r.windows(2).all(|w| w[1] >= w[0]);
                let mut c = CaseRecord::new(format!("{}/monotone/k{}", spec.key(), k + 1), "nested-sets", json!({"rho": r, "deltas": deltas}));
                c.observed = r.last().copied().unwrap_or(0.0);
                c.pass = monotone;
                c.margin_log10 = Big::F(r.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min));
                cases.push(c);
                slopes.push(fit_slope(&deltas, r));
            }
            let summary = json!({
                "field": spec.key(),
                "delta0": Big::from_wide(d0).to_json(),
                "dir": dir_ok,
                "eigenvalues": spec_res.eigenvalues,
                "delta_scaling_exponent": slopes,
            });
            Ok((cases, summary))
        })
        .collect();
    let mut cases = Vec::new();
    let mut summaries = Vec::new();
    for r in per_field {
        let (c, s) = r?;
        cases.extend(c);
        summaries.push(s);
    }
    Ok(ExperimentReport::new(
        "observe",
        cases,
        json!({"fields": summaries, "calibration": cfg.calibration.to_json(), "isotone_cap": cfg.isotone_cap}),
    ))
}

/// Least squares slope of `ln y` against `ln x` over positive entries.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Eigenvalue lifting under `t W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftConfig {
    pub fields: Vec<FieldSpec>,
    pub deltas: Vec<f64>,
    /// Step of the coupling grid starting at 0.
    pub t_step: f64,
    /// Couplings at which the lower bound and the derivative are checked.
    pub t_checks: Vec<f64>,
    pub h_t: f64,
    pub tol: f64,
    pub seed: u64,
    pub placement: String,
    pub calibration: Calibration,
    pub integral_tol: f64,
    pub derivative_tol: f64,
    #[serde(default)]
    pub isotone_cap: bool,
}

impl Default for LiftConfig {
    fn default() -> Self {
        LiftConfig {
            fields: default_fields(),
            deltas: vec![0.05, 0.1, 0.2],
            t_step: 1.0 / 64.0,
            t_checks: vec![0.25, 0.5, 1.0],
            h_t: 1e-3,
            tol: 1e-11,
            seed: 0,
            placement: "centered".into(),
            calibration: Calibration::default(),
            integral_tol: 1e-4,
            derivative_tol: 1e-4,
            isotone_cap: true,
        }
    }
}

/// Composite Simpson when the panel count is even, trapezoid otherwise.
fn integrate(step: f64, f: &[f64]) -> f64 {
    let n = f.len() - 1;
    if n >= 2 && n.is_multiple_of(2) {
        let mut s = f[0] + f[n];
        for (i, v) in f.iter().enumerate().take(n).skip(1) {
            s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        s * step / 3.0
    } else {
        f.windows(2).map(|w| 0.5 * step * (w[0] + w[1])).sum()
    }
}

pub fn lifting_experiment(cfg: &LiftConfig) -> Result<ExperimentReport> {
    observe_preconditions(&cfg.fields, &cfg.deltas, cfg.isotone_cap)?;
    if !(cfg.t_step > 0.0) || cfg.t_checks.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParams("couplings must be positive".into()));
    }
    let cal = cfg.calibration.wide()?;
    let t_max = cfg.t_checks.iter().copied().fold(0.0, f64::max);
    let steps = (t_max / cfg.t_step).round() as usize;
    let jobs: Vec<(usize, f64)> =
        (0..cfg.fields.len()).flat_map(|i| cfg.deltas.iter().map(move |&d| (i, d))).collect();
    let results: Vec<Result<(Vec<CaseRecord>, serde_json::Value)>> = jobs
        .par_iter()
        .map(|&(fi, delta)| {
            let spec = &cfg.fields[fi];
            let field = spec.build()?;
            let p = declared_params(&field)?;
            let de = bound_delta(delta, constants::delta0(&p), cfg.isotone_cap)?;
            let z = make_equidistributed(field.grid.d, 1.0, delta, field.grid.l, placement(&cfg.placement, cfg.seed)?)?;
            let mask = sensing_mask(&z, &field.grid)?;
            let mut opts = EigOptions::new(2, cfg.tol, cfg.seed);
            let mut ts = Vec::with_capacity(steps + 1);
            let mut lam = Vec::with_capacity(steps + 1);
            let mut pair = Vec::with_capacity(steps + 1);
            for i in 0..=steps {
                let t = i as f64 * cfg.t_step;
                let r = solve(&field, Some((&mask, t)), &opts)?;
                let gap = r.eigenvalues[1] - r.eigenvalues[0];
                if gap <= 1e-6 * r.eigenvalues[0].abs() {
                    return Err(Error::Degenerate { t, gap, gap_tol: 1e-6 * r.eigenvalues[0].abs() });
                }
                ts.push(t);
                lam.push(r.eigenvalues[0]);
                pair.push(masked_norm_sq(&r.eigenvectors[0], &mask));
                opts.shift_hint = Some(r.eigenvalues[0] - 0.1 * gap);
                opts.warm = Some(r.eigenvectors);
            }
            let key = format!("{}/delta{:.3}", spec.key(), delta);
            let base = json!({"d": field.grid.d, "L": field.grid.l, "n": field.grid.n, "generator": spec.generator, "delta": delta});
            let mut cases = Vec::new();

            let monotone_slack = lam.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let mut c = CaseRecord::new(format!("{key}/monotone"), "min-max", base.clone());
            c.observed = monotone_slack;
            c.margin_log10 = Big::F(monotone_slack);
            c.pass = monotone_slack >= -1e-12 * lam[0].abs().max(1.0);
            cases.push(c);

            let lift = lam[steps] - lam[0];
            let integral = integrate(cfg.t_step, &pair);
            let rel = (integral - lift).abs() / lift.abs();
            let mut c = CaseRecord::new(format!("{key}/integral"), "first-order-perturbation", base.clone());
            c.x = t_max;
            c.observed = rel;
            c.bound_log10 = Big::F(cfg.integral_tol.log10());
            c.margin_log10 = Big::F(cfg.integral_tol.log10() - rel.log10());
            c.pass = rel <= cfg.integral_tol;
            cases.push(c);

            for &t in &cfg.t_checks {
                let i = (t / cfg.t_step).round() as usize;
                let gain = lam[i] - lam[0];
                let kappa = constants::lifting_kappa(
                    Wide::from_f64(t),
                    de,
                    Wide::from_f64(lam[0]),
                    &p,
                    &cal,
                    CsfucOptions { homogeneous: false, finite_cube: true },
                )?;
                let ln_bound = wln(0.75 * t) + kappa.ln;
                let mut c = CaseRecord::new(format!("{key}/t{t:.4}/lift"), "lifting", base.clone());
                c.x = t;
                c.observed = gain;
                c.bound_log10 = Big::from_wide(wide_log10(ln_bound));
                c.pass = gain > 0.0 && wln(gain) >= ln_bound;
                c.margin_log10 = if gain > 0.0 { Big::from_wide(wide_log10(wln(gain) - ln_bound)) } else { Big::F(f64::NEG_INFINITY) };
                cases.push(c);

                let mut ho = EigOptions::new(2, cfg.tol, cfg.seed);
                ho.warm = None;
                let hf = hellmann_feynman_mask(&field, &mask, t, cfg.h_t, &ho)?;
                let err = (hf.numeric_deriv - hf.pairing).abs();
                let mut c = CaseRecord::new(format!("{key}/t{t:.4}/derivative"), "hellmann-feynman", base.clone());
                c.x = t;
                c.observed = err;
                c.bound_log10 = Big::F(cfg.derivative_tol.log10());
                c.margin_log10 = Big::F(cfg.derivative_tol.log10() - err.max(1e-300).log10());
                c.pass = err <= cfg.derivative_tol;
                cases.push(c);
            }
            let summary = json!({"case": key, "t": ts, "lambda1": lam, "pairing": pair, "integral": integral, "lift": lift});
            Ok((cases, summary))
        })
        .collect();
    let mut cases = Vec::new();
    let mut curves = Vec::new();
    for r in results {
        let (c, s) = r?;
        cases.extend(c);
        curves.push(s);
    }
    Ok(ExperimentReport::new(
        "lift",
        cases,
        json!({"curves": curves, "calibration": cfg.calibration.to_json(), "isotone_cap": cfg.isotone_cap}),
    ))
}

/// Spectral projectors of short windows against the sensing potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintyConfig {
    pub fields: Vec<FieldSpec>,
    pub delta: f64,
    /// Eigenpairs computed; windows are centred on all but the last.
    pub k: usize,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    /// Windows are widened to at least this multiple of `max(1, |E0|)` so
    /// that numerically degenerate eigenvalues fall into one window.
    pub resolution: f64,
    pub calibration: Calibration,
    #[serde(default)]
    pub isotone_cap: bool,
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        UncertaintyConfig {
            fields: vec![FieldSpec::new(1, 8.0, "identity"), FieldSpec::new(2, 4.0, "identity")],
            delta: 0.1,
            k: 8,
            samples: 100,
            tol: 1e-11,
            seed: 0,
            resolution: 1e-8,
            calibration: Calibration::default(),
            isotone_cap: true,
        }
    }
}

pub fn short_interval_uncertainty(cfg: &UncertaintyConfig) -> Result<ExperimentReport> {
    observe_preconditions(&cfg.fields, &[cfg.delta], cfg.isotone_cap)?;
    let cal = cfg.calibration.wide()?;
    let results: Vec<Result<Vec<CaseRecord>>> = cfg
        .fields
        .par_iter()
        .map(|spec| {
            let field = spec.build()?;
            let p = declared_params(&field)?;
            let de = bound_delta(cfg.delta, constants::delta0(&p), cfg.isotone_cap)?;
            let z = make_equidistributed(field.grid.d, 1.0, cfg.delta, field.grid.l, Placement::Centered)?;
            let mask = sensing_mask(&z, &field.grid)?;
            let op = assemble(&field, None)?;
            let sr = solve(&field, None, &EigOptions::new(cfg.k, cfg.tol, cfg.seed))?;
            let ev = &sr.eigenvalues;
            let mut centres: Vec<(f64, &str)> = Vec::new();
            for j in 0..ev.len().saturating_sub(1) {
                centres.push((ev[j], "eigenvalue"));
                centres.push((0.5 * (ev[j] + ev[j + 1]), "midpoint"));
            }
            let mut cases = Vec::new();
            for (wi, &(e0, kind)) in centres.iter().enumerate() {
                let kap = constants::application_kappas(
                    &p,
                    &cal,
                    &ApplicationInputs::new(de, Wide::from_f64(e0), Wide::from_f64(ev[0])),
                    CsfucOptions { homogeneous: false, finite_cube: true },
                )?;
                let sqrt_kappa = (kap.kappa_short.ln / Wide::from_f64(2.0)).exp().value_f64();
                let width = sqrt_kappa.max(cfg.resolution * e0.abs().max(1.0));
                // the window must end below the top computed eigenvalue to be resolved
                if ev[ev.len() - 1] <= e0 + width {
                    continue;
                }
                let key = format!("{}/window{:02}", spec.key(), wi);
                let ln_bound = wln(0.75) + kap.kappa_short.ln;
                let base = json!({"E0": e0, "kind": kind, "half_width": width, "delta": cfg.delta});
                let mut c = CaseRecord::new(key.clone(), "short-interval-uncertainty", base);
                c.x = e0;
                c.bound_log10 = Big::from_wide(wide_log10(ln_bound));
                match projector_sample(&sr, e0, width, ProjectorWeights::Random(cfg.seed)) {
                    Err(Error::EmptyInterval) => {
                        c.vacuous = true;
                        c.margin_log10 = Big::F(f64::INFINITY);
                        cases.push(c);
                        continue;
                    }
                    Err(e) => return Err(e),
                    Ok(_) => {}
                }
                let mut worst = f64::INFINITY;
                let mut chain_ok = true;
                let mut dim = 0;
                for s in 0..cfg.samples {
                    let ps = projector_sample(&sr, e0, width, ProjectorWeights::Random(cfg.seed.wrapping_add(s as u64 + 1)))?;
                    dim = ps.indices.len();
                    let w = masked_norm_sq(&ps.psi, &mask);
                    worst = worst.min(w);
                    let res: Vec<f64> = op.apply(&ps.psi).iter().zip(&ps.psi).map(|(a, b)| a - e0 * b).collect();
                    let rhs = w + cfg.delta * cfg.delta * norm(&res).powi(2);
                    chain_ok &= wln(rhs) >= kap.kappa_short.ln;
                }
                c.observed = worst;
                c.inputs["eigenvalues_in_window"] = json!(dim);
                c.inputs["sampling_chain_holds"] = json!(chain_ok);
                c.pass = worst > 0.0 && wln(worst) >= ln_bound && chain_ok;
                c.margin_log10 = Big::from_wide(wide_log10(wln(worst.max(1e-300)) - ln_bound));
                cases.push(c);
            }
            Ok(cases)
        })
        .collect();
    let mut cases = Vec::new();
    for r in results {
        cases.extend(r?);
    }
    let vacuous = cases.iter().filter(|c| c.vacuous).count();
    Ok(ExperimentReport::new(
        "uncertainty",
        cases,
        json!({"vacuous_windows": vacuous, "calibration": cfg.calibration.to_json(), "isotone_cap": cfg.isotone_cap}),
    ))
}
