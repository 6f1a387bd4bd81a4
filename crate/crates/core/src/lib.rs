//! Robust Rao-type (score) tests built on minimum density power divergence
//! estimators.
//!
//! The crate is organised bottom-up:
//!
//! * [`distributions`]: central/noncentral chi-square survival functions,
//!   quantiles and the Poisson-mixture series used for contiguous power.
//! * [`model`]: the [`ModelFamily`](model::ModelFamily) abstraction, the
//!   β-score `u_β`, its sample mean `U_{β,n}`, the information matrices
//!   `J_β`, `K_β`, `ξ_β` and the DPD objective.
//! * [`normal`]: closed-form normal family and the specialised statistics.
//! * [`estimation`]: unrestricted and restricted minimum DPD estimators.
//! * [`rao`]: simple and composite Rao-type statistics with p-values.
//! * [`robustness`]: influence functions, noncentralities, PIF and LIF.
//! * [`simulation`]: seedable Monte Carlo level/power harness.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod estimation;
mod linalg;
mod roots;
pub mod model;
pub mod normal;
pub mod quadrature;
pub mod rao;
pub mod robustness;
pub mod simulation;

pub use error::{Error, Result};
pub use model::{InfoMatrices, ModelFamily, ParamVector, Sample};
