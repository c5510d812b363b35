//! Soil macronutrient estimation from electrical V-I sweeps.
//!
//! The pipeline runs from synthetic acid-base phantoms ([`phantom`]) through
//! curve features ([`curves`]) and tabular preprocessing ([`dataset`]) to four
//! regressors ([`models`]), cross-validated in [`eval`] and finally mapped to
//! agronomic units in [`agronomy`].
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision.

// `!(x > 0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agronomy;
pub mod curves;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod kv;
pub mod linalg;
pub mod models;
pub mod phantom;
pub mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type VICurve64 = curves::VICurve<f64>;
pub type VICurve32 = curves::VICurve<f32>;
pub type CellGeometry64 = curves::CellGeometry<f64>;
pub type FeatureTable64 = dataset::FeatureTable<f64>;
pub type FeatureTable32 = dataset::FeatureTable<f32>;
pub type Pipeline64 = models::Pipeline<f64>;
pub type Pipeline32 = models::Pipeline<f32>;
pub type SoilSample64 = agronomy::SoilSample<f64>;
pub type CalibrationSet64 = agronomy::CalibrationSet<f64>;
pub type ConversionConstants64 = agronomy::ConversionConstants<f64>;
