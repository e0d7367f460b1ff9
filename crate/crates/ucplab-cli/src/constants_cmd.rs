//! The `constants` command: every explicit quantity for one parameter set.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use ucplab::constants::{
    self, ApplicationInputs, CalibrationConstants, CsfucOptions, LogValue, ModelParams, RadiiScheme,
};
use ucplab::experiments::Big;
use ucplab::{Result, Wide};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub d: usize,
    pub theta_e: f64,
    pub theta_l: f64,
    #[serde(default)]
    pub norm_v: f64,
    #[serde(default)]
    pub norm_b: f64,
    #[serde(default)]
    pub norm_c: f64,
    #[serde(default = "one")]
    pub g: f64,
    /// Sensing radius; half of `delta0` when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub e0: f64,
    #[serde(default)]
    pub lambda1: f64,
    /// Coupling for the lifting rate.
    #[serde(default = "one")]
    pub t: f64,
    /// Time horizon for the control cost.
    #[serde(default = "one")]
    pub t_final: f64,
}

fn one() -> f64 {
    1.0
}

fn w(x: f64) -> Wide {
    Wide::from_f64(x)
}

fn linear(x: Wide) -> Value {
    json!({"value": Big::from_wide(x).to_json(), "log10": Big::from_wide(Wide::from_f64(x.log10_abs_f64())).to_json()})
}

fn logged(x: LogValue<Wide>) -> Value {
    let l10 = x.ln / Wide::from_f64(std::f64::consts::LN_10);
    json!({"value": Big::from_wide(x.value()).to_json(), "log10": Big::from_wide(l10).to_json()})
}

fn radii_json(r: &constants::AnnuliRadii<Wide>) -> Value {
    let names = ["r1", "R1", "r2", "R2", "r3", "R3"];
    let mut m = Map::new();
    for (n, v) in names.iter().zip(r.as_array()) {
        m.insert((*n).into(), linear(v));
    }
    m.insert("eps".into(), linear(r.eps));
    Value::Object(m)
}

pub fn constants_report(cfg: &ConstantsConfig, cal: &CalibrationConstants<Wide>) -> Result<Value> {
    let p = ModelParams::new(cfg.d, w(cfg.theta_e), w(cfg.theta_l))?
        .with_norms(w(cfg.norm_v), w(cfg.norm_b), w(cfg.norm_c))?
        .with_cell(w(cfg.g))?;
    let d0 = constants::delta0(&p);
    let delta = cfg.delta.map(w).unwrap_or(d0 / w(2.0));
    let opts = CsfucOptions::default();
    let cs = constants::csfuc(delta, &p, cal, opts)?;

    let q = p.unit_cell();
    let rd = constants::standard_radii(&q, RadiiScheme::InterpDelta(delta / p.g))?;
    let rf = constants::standard_radii(&q, RadiiScheme::ChainFixed)?;
    let ta = constants::three_annuli_constants(&rd, &q, cal)?;
    let chain = constants::chain_constants(&rf, &q, cal)?;
    let kap = constants::application_kappas(&p, cal, &ApplicationInputs::new(delta, w(cfg.e0), w(cfg.lambda1)), opts)?;
    let lift = constants::lifting_kappa(w(cfg.t), delta, w(cfg.lambda1), &p, cal, opts)?;
    let cost = constants::control_cost(w(cfg.t_final), delta, &p, cal)?;
    let k_real = constants::realized_k(&rd, &q, cal)?;

    let outputs = json!({
        "delta0": linear(d0),
        "delta": linear(delta),
        "mu": linear(ta.mu),
        "mu1": linear(ta.mu1),
        "radii_sensing": radii_json(&rd),
        "radii_chaining": radii_json(&rf),
        "D1": linear(ta.d1),
        "D2": linear(ta.d2),
        "D3": linear(ta.d3),
        "alpha_star": linear(ta.alpha_star),
        "alpha0": linear(ta.alpha0),
        "carleman_C": linear(ta.carleman_c),
        "realized_K": linear(k_real),
        "gamma1": linear(cs.gamma1),
        "gamma2": linear(cs.gamma2),
        "C1": logged(LogValue::from_ln(cs.ln_c1_delta)),
        "C1_chaining": logged(chain.c1),
        "C2": logged(chain.c2),
        "m": chain.m,
        "N": linear(chain.n),
        "M": linear(chain.big_m),
        "chain_margin_a": linear(chain.a),
        "csfuc": logged(cs.exact),
        "exponent_n": linear(cs.exponent_n),
        "kappa_short": logged(kap.kappa_short),
        "kappa_low": logged(kap.kappa_low),
        "kappa_lip": logged(kap.kappa_lip),
        "n_short": linear(kap.n_short),
        "n_low": linear(kap.n_low),
        "m_lip": linear(kap.m_lip),
        "lifting_kappa": logged(lift),
        "control_cost": logged(cost),
    });
    Ok(json!({
        "inputs": serde_json::to_value(cfg).unwrap_or(Value::Null),
        "calibration": {"theta": cal.cutoff_theta.value_f64(), "cprime": cal.cacciopoli_c_prime.value_f64()},
        "outputs": outputs,
        "realized": "exponents and K are realized for these inputs, not universal constants",
    }))
}
