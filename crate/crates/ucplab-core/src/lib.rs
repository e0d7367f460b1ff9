//! Quantitative unique continuation laboratory.
//!
//! Explicit constants of sampling and equidistribution estimates for
//! elliptic operators, the geometry behind them, and a finite difference
//! harness that checks the resulting inequalities on desk-scale grids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod discrete;
pub mod experiments;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::{Real, Wide};

/// Model parameters in double precision.
pub type Params64 = constants::ModelParams<f64>;
/// Model parameters with the wide-exponent scalar.
pub type ParamsWide = constants::ModelParams<Wide>;
pub type Radii64 = constants::AnnuliRadii<f64>;
pub type RadiiWide = constants::AnnuliRadii<Wide>;
pub type Calibration64 = constants::CalibrationConstants<f64>;
pub type CalibrationWide = constants::CalibrationConstants<Wide>;
