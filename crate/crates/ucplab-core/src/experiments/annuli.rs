//! Three annuli inequality for discrete eigenfunctions in one dimension.

use num_traits::Float;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{wide_log10, wln, Big, Calibration, CaseRecord, ExperimentReport};
use crate::constants::{self, ModelParams, RadiiScheme};
use crate::discrete::{assemble, eigs_lowest};
use crate::error::{Error, Result};
use crate::fields::{sample_field, GridSpec, Identity};
use crate::scalar::Wide;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnuliConfig {
    pub l: f64,
    pub n: usize,
    pub center: f64,
    /// Radii are the constant coefficient ones for `base_delta`, scaled so
    /// that the outer radius equals this value.
    pub outer_radius: f64,
    pub base_delta: f64,
    /// Number of lowest eigenfunctions tested.
    pub states: usize,
    /// Multiples of `alpha*` at which the inequality is evaluated.
    pub multipliers: Vec<f64>,
    pub tol: f64,
    pub calibration: Calibration,
}

impl Default for AnnuliConfig {
    fn default() -> Self {
        AnnuliConfig {
            l: 8.0,
            n: 1023,
            center: 0.0,
            outer_radius: 3.5,
            base_delta: 0.5,
            states: 2,
            multipliers: vec![1.0, 2.0, 4.0],
            tol: 1e-12,
            calibration: Calibration::default(),
        }
    }
}

/// `ln(sum exp(t_i))` over wide logarithms.
fn log_sum_exp(terms: &[Wide]) -> Wide {
    let m = terms.iter().copied().fold(Wide::from_f64(f64::NEG_INFINITY), Wide::max);
    let s: f64 = terms.iter().map(|&t| (t - m).value_f64().exp()).sum();
    m + Wide::from_f64(s.ln())
}

pub fn three_annuli_empirical(cfg: &AnnuliConfig) -> Result<ExperimentReport> {
    let p1 = ModelParams::new(1, 1.0f64, 0.0)?;
    let base = constants::standard_radii(&p1, RadiiScheme::Laplacian(cfg.base_delta))?;
    let radii = base.scaled(cfg.outer_radius / base.big_r3)?;
    if cfg.center.abs() + radii.big_r3 >= cfg.l / 2.0 {
        return Err(Error::OutsideDomain(format!(
            "B({}, {}) is not inside the cube of side {}",
            cfg.center, radii.big_r3, cfg.l
        )));
    }
    let grid = GridSpec::new(1, cfg.l, cfg.n)?;
    let field = sample_field(std::sync::Arc::new(Identity { d: 1 }), grid)?;
    let op = assemble(&field, None)?;
    let spec = eigs_lowest(&op, cfg.states, cfg.tol, 0)?;
    let cal = cfg.calibration.wide()?;
    let h = grid.h();

    let zone = |r_in: f64, r_out: f64, u: &[f64]| -> f64 {
        (0..grid.len())
            .filter(|&i| {
                let r = (grid.coord(i + 1) - cfg.center).abs();
                r > r_in && r < r_out
            })
            .map(|i| h * u[i] * u[i])
            .sum()
    };

    let mut cases = Vec::new();
    for (k, (&lambda, psi)) in spec.eigenvalues.iter().zip(&spec.eigenvectors).enumerate() {
        let p = ModelParams::new(1, Wide::ONE, Wide::ZERO)?.with_norms(Wide::from_f64(lambda.abs()), Wide::ZERO, Wide::ZERO)?;
        let rw = radii.cast::<Wide>();
        let ta = constants::three_annuli_constants(&rw, &p, &cal)?;
        let zeta: Vec<f64> = op.apply(psi).iter().zip(psi).map(|(a, b)| a - lambda * b).collect();
        let z1 = zone(radii.r1, radii.big_r1, psi);
        let z2 = zone(radii.r2, radii.big_r2, psi);
        let z3 = zone(radii.r3, radii.big_r3, psi);
        let zb = zone(-1.0, radii.big_r3, &zeta);
        let g1 = (rw.big_r2 * ta.mu1 / rw.r1).ln();
        let g3 = (rw.big_r2 * ta.mu1 / rw.r3).ln();
        for &mult in &cfg.multipliers {
            let alpha = ta.alpha_star * Wide::from_f64(mult);
            let two_a = Wide::from_f64(2.0) * alpha;
            let lhs = Wide::from_f64(3.0) * alpha.ln() + wln(z2);
            let mut terms = vec![ta.d1.ln() + two_a * g1 + wln(z1), ta.d2.ln() + two_a * g3 + wln(z3)];
            if zb > 0.0 {
                terms.push(ta.d3.ln() + two_a * g1 + wln(zb));
            }
            let rhs = log_sum_exp(&terms);
            let mut c = CaseRecord::new(
                format!("k{}/alpha{mult}", k + 1),
                "three-annuli",
                json!({
                    "lambda": lambda, "alpha": Big::from_wide(alpha).to_json(),
                    "radii": radii.as_array(), "z1": z1, "z2": z2, "z3": z3, "zeta": zb,
                }),
            );
            c.x = mult;
            c.observed = z2;
            c.bound_log10 = Big::from_wide(wide_log10(rhs));
            c.margin_log10 = Big::from_wide(wide_log10(rhs - lhs));
            c.pass = lhs <= rhs;
            cases.push(c);
        }
    }
    Ok(ExperimentReport::new(
        "annuli",
        cases,
        json!({"radii": radii.as_array(), "eigenvalues": spec.eigenvalues, "calibration": cfg.calibration.to_json()}),
    ))
}
