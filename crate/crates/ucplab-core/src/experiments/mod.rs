//! Verification harness: each experiment recomputes its bounds from the
//! constants module and compares them with grid computations.

mod annuli;
mod extend;
mod lemmas;
mod spectral;
mod wegner;
mod weight;

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constants::{CalibrationConstants, ModelParams};
use crate::error::Result;
use crate::fields::{generator_by_name, sample_field, CoefficientField, Generator, GridSpec};
use crate::scalar::Wide;

pub use annuli::{three_annuli_empirical, AnnuliConfig};
pub use extend::{chain_demo, extend_demo, ChainDemoConfig, ExtendConfig};
pub use lemmas::{abstract_lemma_tests, LemmaConfig};
pub use spectral::{
    lifting_experiment, observability_experiment, short_interval_uncertainty, LiftConfig, ObserveConfig,
    UncertaintyConfig,
};
pub use wegner::{wegner_monte_carlo, RandomModel, RandomModelConfig, WegnerConfig};
pub use weight::{carleman_weight, carleman_weight_eval, WeightConfig, WeightSet};

/// A number that may leave the `f64` range; serialized as a string then.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Big {
    F(f64),
    W(Wide),
}

impl Big {
    pub fn from_wide(w: Wide) -> Self {
        let v = w.value_f64();
        if v.is_finite() && (v == 0.0 || v.abs() > 1e-300) {
            Big::F(v)
        } else {
            Big::W(w)
        }
    }

    pub fn to_json(self) -> Value {
        match self {
            Big::F(v) if v.is_finite() => json!(v),
            Big::F(v) => json!(v.to_string()),
            Big::W(w) => json!(w.to_string()),
        }
    }
}

impl std::fmt::Display for Big {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Big::F(v) => write!(f, "{v:e}"),
            Big::W(w) => write!(f, "{w}"),
        }
    }
}

impl Serialize for Big {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// One checked inequality.
#[derive(Debug, Clone, Serialize)]
pub struct CaseRecord {
    /// Sortable case key.
    pub key: String,
    /// Name of the estimate the bound comes from.
    pub tag: String,
    pub inputs: Value,
    /// Abscissa for plot data (a radius, a coupling, a window size).
    pub x: f64,
    pub observed: f64,
    /// `log10` of the bound the observation is compared against.
    pub bound_log10: Big,
    /// `log10(observed) - log10(bound)` (or the analogous slack); positive means pass.
    pub margin_log10: Big,
    pub pass: bool,
    /// The inequality holds for lack of content (e.g. an empty window).
    pub vacuous: bool,
}

impl CaseRecord {
    pub fn new(key: impl Into<String>, tag: &str, inputs: Value) -> Self {
        CaseRecord {
            key: key.into(),
            tag: tag.into(),
            inputs,
            x: 0.0,
            observed: 0.0,
            bound_log10: Big::F(0.0),
            margin_log10: Big::F(0.0),
            pass: true,
            vacuous: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub pass: bool,
    pub cases: Vec<CaseRecord>,
    pub summary: Value,
}

impl ExperimentReport {
    pub fn new(name: &str, mut cases: Vec<CaseRecord>, summary: Value) -> Self {
        cases.sort_by(|a, b| a.key.cmp(&b.key));
        let pass = cases.iter().all(|c| c.pass);
        ExperimentReport { name: name.into(), pass, cases, summary }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseRecord> {
        self.cases.iter().filter(|c| !c.pass)
    }

    pub fn non_vacuous(&self) -> usize {
        self.cases.iter().filter(|c| !c.vacuous).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("key,tag,x,observed,bound_log10,margin_log10,pass,vacuous\n");
        for c in &self.cases {
            let _ = writeln!(
                s,
                "{},{},{:e},{:e},{},{},{},{}",
                c.key, c.tag, c.x, c.observed, c.bound_log10, c.margin_log10, c.pass, c.vacuous
            );
        }
        s
    }

    /// Whitespace separated columns `x observed bound_log10`, one block per tag.
    pub fn to_dat(&self) -> String {
        let mut s = String::from("# x observed bound_log10 key\n");
        let mut last = String::new();
        for c in &self.cases {
            if c.tag != last {
                if !last.is_empty() {
                    s.push_str("\n\n");
                }
                let _ = writeln!(s, "# {}", c.tag);
                last = c.tag.clone();
            }
            let _ = writeln!(s, "{:e} {:e} {} {}", c.x, c.observed, c.bound_log10, c.key);
        }
        s
    }
}

/// Field selection by registry name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub d: usize,
    pub l: f64,
    /// Interior nodes per axis; defaults to `16 L - 1` (d = 1) or `8 L - 1`.
    #[serde(default)]
    pub n: Option<usize>,
    pub generator: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl FieldSpec {
    pub fn new(d: usize, l: f64, generator: &str) -> Self {
        FieldSpec { d, l, n: None, generator: generator.into(), params: Vec::new() }
    }

    pub fn nodes(&self) -> usize {
        self.n.unwrap_or_else(|| {
            let per = if self.d == 1 { 16.0 } else { 8.0 };
            (per * self.l).round() as usize - 1
        })
    }

    pub fn generator(&self) -> Result<Arc<dyn Generator<f64>>> {
        generator_by_name(&self.generator, self.d, self.l, &self.params)
    }

    pub fn build(&self) -> Result<CoefficientField<f64>> {
        let grid = GridSpec::new(self.d, self.l, self.nodes())?;
        sample_field(self.generator()?, grid)
    }

    pub fn key(&self) -> String {
        format!("d{}-L{}-{}", self.d, self.l, self.generator)
    }
}

/// Model parameters from declared bounds; the field potential `c + V`
/// is carried as `norm_c`.
pub fn declared_params(field: &CoefficientField<f64>) -> Result<ModelParams<Wide>> {
    let dec = field.generator.declared();
    let pot = field.c.iter().zip(&field.v).fold(0.0f64, |m, (c, v)| m.max((c + v).abs()));
    let p = ModelParams::new(field.grid.d, Wide::from_f64(dec.theta_e), Wide::from_f64(dec.theta_l))?
        .with_norms(Wide::ZERO, Wide::ZERO, Wide::from_f64(pot))?;
    Ok(p)
}

/// Calibration given in `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub theta: f64,
    pub cprime: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        let c = CalibrationConstants::<f64>::default();
        Calibration { theta: c.cutoff_theta, cprime: c.cacciopoli_c_prime }
    }
}

impl Calibration {
    pub fn wide(&self) -> Result<CalibrationConstants<Wide>> {
        CalibrationConstants::new(Wide::from_f64(self.theta), Wide::from_f64(self.cprime))
    }

    pub fn to_json(&self) -> Value {
        json!({"theta": self.theta, "cprime": self.cprime})
    }
}

/// `ln` of an `f64` as a wide number.
pub(crate) fn wln(x: f64) -> Wide {
    Wide::from_f64(x.ln())
}

pub(crate) fn wide_log10(ln: Wide) -> Wide {
    ln / Wide::from_f64(std::f64::consts::LN_10)
}
