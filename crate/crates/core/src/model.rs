//! Model-family abstraction and the generic β-score machinery.
//!
//! For a parametric family `f_θ` with likelihood score `s_θ(x)` the β-score is
//!
//! ```text
//! u_β(x, θ) = s_θ(x) f_θ^β(x) − ξ_β(θ),    ξ_β(θ) = ∫ s_θ f_θ^{β+1}
//! ```
//!
//! and the at-model information matrices are `J_β = ∫ s sᵀ f^{β+1}` and
//! `K_β = ∫ s sᵀ f^{2β+1} − ξ ξᵀ`. Families may supply closed forms for these
//! integrals; otherwise they are computed by Gauss–Hermite quadrature placed
//! on the family's [`quadrature_frame`](ModelFamily::quadrature_frame).

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_checked, integrate_vec_checked};

/// A point θ of the parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(DVector<f64>);

impl ParamVector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(DVector::from_vec(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Self(DVector::from_column_slice(coords))
    }

    pub fn scalar(v: f64) -> Self {
        Self::from_slice(&[v])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }
}

impl From<DVector<f64>> for ParamVector {
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Display for ParamVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// An i.i.d. sample of finite real observations, `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(observations: Vec<f64>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(i) = observations.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObservation(i));
        }
        Ok(Self(observations))
    }

    pub fn from_slice(observations: &[f64]) -> Result<Self> {
        Self::new(observations.to_vec())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; samples are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn median(&self) -> f64 {
        let mut v = self.0.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    /// Normal-consistent median absolute deviation, `1.4826 · MAD`.
    pub fn mad_scale(&self) -> f64 {
        let med = self.median();
        let dev: Vec<f64> = self.0.iter().map(|x| (x - med).abs()).collect();
        1.4826 * Sample(dev).median()
    }

    /// Copy of the sample with the observation at `index` removed.
    pub fn without(&self, index: usize) -> Result<Self> {
        let mut v = self.0.clone();
        if index < v.len() {
            v.remove(index);
        }
        Self::new(v)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Sample {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// At-model information matrices `(J_β, K_β, ξ_β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrices {
    pub j: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub xi: DVector<f64>,
}

/// A parametric family of univariate densities.
///
/// Implementors provide the log-density, the likelihood score and a
/// location/scale frame used to place quadrature nodes. The `*_closed`
/// hooks return exact integrals when available; the generic routines fall
/// back to quadrature when they return `None`.
pub trait ModelFamily: Send + Sync {
    /// Parameter dimension `p`.
    fn dim(&self) -> usize;

    /// Checks the family's validity predicate for `theta`.
    fn validate(&self, theta: &ParamVector) -> Result<()>;

    fn log_density(&self, x: f64, theta: &ParamVector) -> f64;

    fn density(&self, x: f64, theta: &ParamVector) -> f64 {
        self.log_density(x, theta).exp()
    }

    /// Writes the likelihood score `∂/∂θ log f_θ(x)` into `out`.
    fn score_into(&self, x: f64, theta: &ParamVector, out: &mut [f64]);

    /// Center and spread of `f_θ`; quadrature nodes for `∫ g f_θ^c` are
    /// placed at `center + spread/√c · √2 · t_i`.
    fn quadrature_frame(&self, theta: &ParamVector) -> (f64, f64);

    /// `∫ f_θ^c(x) dx`.
    fn power_integral_closed(&self, _theta: &ParamVector, _c: f64) -> Option<f64> {
        None
    }

    /// `ξ_β(θ) = ∫ s_θ f_θ^{β+1}`.
    fn xi_closed(&self, _theta: &ParamVector, _beta: f64) -> Option<DVector<f64>> {
        None
    }

    /// `(J_β, K_β, ξ_β)` at the model.
    fn info_closed(&self, _theta: &ParamVector, _beta: f64) -> Option<InfoMatrices> {
        None
    }

    /// A reasonable starting point for estimation (typically the MLE).
    fn initial_guess(&self, _sample: &Sample) -> Option<ParamVector> {
        None
    }

    /// Additional robust starting points for multi-start estimation.
    fn robust_starts(&self, _sample: &Sample) -> Vec<ParamVector> {
        Vec::new()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        Err(Error::Domain(format!("tuning parameter must be finite and >= 0, got {beta}")))
    } else {
        Ok(())
    }
}

fn check_dims<F: ModelFamily + ?Sized>(family: &F, theta: &ParamVector) -> Result<()> {
    if theta.len() != family.dim() {
        return Err(Error::InvalidParameter(format!(
            "expected {} coordinates, got {}",
            family.dim(),
            theta.len()
        )));
    }
    family.validate(theta)
}

pub(crate) fn score<F: ModelFamily + ?Sized>(family: &F, x: f64, theta: &ParamVector) -> DVector<f64> {
    let mut out = DVector::zeros(family.dim());
    family.score_into(x, theta, out.as_mut_slice());
    out
}

fn frame_for_power<F: ModelFamily + ?Sized>(family: &F, theta: &ParamVector, c: f64) -> (f64, f64) {
    let (center, spread) = family.quadrature_frame(theta);
    (center, spread / c.sqrt())
}

/// `∫ f_θ^c` by quadrature.
pub fn power_integral_by_quadrature<F: ModelFamily + ?Sized>(
    family: &F,
    theta: &ParamVector,
    c: f64,
) -> Result<f64> {
    let (center, scale) = frame_for_power(family, theta, c);
    integrate_checked(center, scale, 0.0, |x| (c * family.log_density(x, theta)).exp())
}

/// `∫ f_θ^c`, closed form when the family supplies one.
pub fn power_integral<F: ModelFamily + ?Sized>(family: &F, theta: &ParamVector, c: f64) -> Result<f64> {
    check_dims(family, theta)?;
    match family.power_integral_closed(theta, c) {
        Some(v) => Ok(v),
        None => power_integral_by_quadrature(family, theta, c),
    }
}

fn score_scale_hint<F: ModelFamily + ?Sized>(family: &F, theta: &ParamVector, c: f64) -> f64 {
    let (_, spread) = family.quadrature_frame(theta);
    power_integral(family, theta, c).unwrap_or(0.0) / spread
}

/// `ξ_β(θ)` by quadrature.
pub fn xi_by_quadrature<F: ModelFamily + ?Sized>(
    family: &F,
    theta: &ParamVector,
    beta: f64,
) -> Result<DVector<f64>> {
    let p = family.dim();
    let c = beta + 1.0;
    let (center, scale) = frame_for_power(family, theta, c);
    let hint = score_scale_hint(family, theta, c);
    let v = integrate_vec_checked(center, scale, p, hint, |x, out| {
        let w = (c * family.log_density(x, theta)).exp();
        if w == 0.0 {
            return;
        }
        family.score_into(x, theta, out);
        out.iter_mut().for_each(|o| *o *= w);
    })?;
    Ok(DVector::from_vec(v))
}

/// `ξ_β(θ)`, closed form when available.
pub fn xi<F: ModelFamily + ?Sized>(family: &F, theta: &ParamVector, beta: f64) -> Result<DVector<f64>> {
    check_beta(beta)?;
    check_dims(family, theta)?;
    if beta == 0.0 {
        return Ok(DVector::zeros(family.dim()));
    }
    match family.xi_closed(theta, beta) {
        Some(v) => Ok(v),
        None => xi_by_quadrature(family, theta, beta),
    }
}

fn beta_score_with_xi<F: ModelFamily + ?Sized>(
    family: &F,
    x: f64,
    theta: &ParamVector,
    beta: f64,
    xi: &DVector<f64>,
    out: &mut DVector<f64>,
) {
    family.score_into(x, theta, out.as_mut_slice());
    if beta != 0.0 {
        let w = (beta * family.log_density(x, theta)).exp();
        for (o, c) in out.iter_mut().zip(xi.iter()) {
            *o = *o * w - c;
        }
    }
}

/// The β-score `u_β(x, θ) = s_θ(x) f_θ^β(x) − ξ_β(θ)`; exactly `s_θ(x)` at β = 0.
pub fn beta_score<F: ModelFamily + ?Sized>(
    x: f64,
    theta: &ParamVector,
    beta: f64,
    family: &F,
) -> Result<DVector<f64>> {
    let xi = xi(family, theta, beta)?;
    let mut out = DVector::zeros(family.dim());
    beta_score_with_xi(family, x, theta, beta, &xi, &mut out);
    Ok(out)
}

/// `U_{β,n}(θ) = (1/n) Σ u_β(X_i, θ)`.
pub fn score_mean<F: ModelFamily + ?Sized>(
    sample: &Sample,
    theta: &ParamVector,
    beta: f64,
    family: &F,
) -> Result<DVector<f64>> {
    let xi = xi(family, theta, beta)?;
    let p = family.dim();
    let mut acc = DVector::zeros(p);
    let mut buf = DVector::zeros(p);
    for &x in sample.as_slice() {
        beta_score_with_xi(family, x, theta, beta, &xi, &mut buf);
        acc += &buf;
    }
    Ok(acc / sample.len() as f64)
}

/// Mean absolute β-score per coordinate; the natural scale for residuals of
/// the estimating equation.
pub(crate) fn score_abs_mean<F: ModelFamily + ?Sized>(
    sample: &Sample,
    theta: &ParamVector,
    beta: f64,
    family: &F,
) -> Result<DVector<f64>> {
    let xi = xi(family, theta, beta)?;
    let p = family.dim();
    let mut acc = DVector::zeros(p);
    let mut buf = DVector::zeros(p);
    for &x in sample.as_slice() {
        beta_score_with_xi(family, x, theta, beta, &xi, &mut buf);
        acc += buf.abs();
    }
    Ok(acc / sample.len() as f64)
}

/// Population score `∫ u_β(x, θ_eval) f_{θ_true}(x) dx`; zero when the two
/// parameters coincide.
pub fn population_score<F: ModelFamily + ?Sized>(
    theta_eval: &ParamVector,
    theta_true: &ParamVector,
    beta: f64,
    family: &F,
) -> Result<DVector<f64>> {
    check_dims(family, theta_true)?;
    let xi = xi(family, theta_eval, beta)?;
    let p = family.dim();
    let (center, scale) = family.quadrature_frame(theta_true);
    let hint = score_scale_hint(family, theta_eval, beta + 1.0).max(xi.amax());
    let v = integrate_vec_checked(center, scale, p, hint, |x, out| {
        let w = family.density(x, theta_true);
        if w == 0.0 {
            return;
        }
        let mut u = DVector::zeros(p);
        beta_score_with_xi(family, x, theta_eval, beta, &xi, &mut u);
        for (o, ui) in out.iter_mut().zip(u.iter()) {
            *o = ui * w;
        }
    })?;
    Ok(DVector::from_vec(v))
}

/// `(J_β, K_β, ξ_β)` by quadrature, regardless of closed forms.
pub fn info_matrices_by_quadrature<F: ModelFamily + ?Sized>(
    theta: &ParamVector,
    beta: f64,
    family: &F,
) -> Result<InfoMatrices> {
    check_beta(beta)?;
    check_dims(family, theta)?;
    let p = family.dim();
    let xi = if beta == 0.0 {
        DVector::zeros(p)
    } else {
        xi_by_quadrature(family, theta, beta)?
    };
    let outer = |c: f64| -> Result<DMatrix<f64>> {
        let (center, scale) = frame_for_power(family, theta, c);
        let hint = score_scale_hint(family, theta, c);
        let v = integrate_vec_checked(center, scale, p * p, hint, |x, out| {
            let w = (c * family.log_density(x, theta)).exp();
            if w == 0.0 {
                return;
            }
            let s = score(family, x, theta);
            for i in 0..p {
                for j in 0..p {
                    out[i * p + j] = s[i] * s[j] * w;
                }
            }
        })?;
        Ok(DMatrix::from_row_slice(p, p, &v))
    };
    let j = outer(beta + 1.0)?;
    let k = outer(2.0 * beta + 1.0)? - &xi * xi.transpose();
    finish_info(InfoMatrices { j, k, xi })
}

fn finish_info(mut info: InfoMatrices) -> Result<InfoMatrices> {
    info.j = crate::linalg::symmetrize(&info.j);
    info.k = crate::linalg::symmetrize(&info.k);
    if info.j.clone().cholesky().is_none() {
        return Err(Error::Degenerate("J_beta is not positive definite".into()));
    }
    Ok(info)
}

/// `(J_β, K_β, ξ_β)` at the model, closed form when available.
pub fn info_matrices<F: ModelFamily + ?Sized>(
    theta: &ParamVector,
    beta: f64,
    family: &F,
) -> Result<InfoMatrices> {
    check_beta(beta)?;
    check_dims(family, theta)?;
    match family.info_closed(theta, beta) {
        Some(info) => finish_info(info),
        None => info_matrices_by_quadrature(theta, beta, family),
    }
}

/// Empirical DPD objective
/// `∫ f_θ^{β+1} − (β+1)/(β n) Σ f_θ^β(X_i)`.
///
/// At β = 0 this returns the negative mean log-likelihood, the limit of the
/// objective after removing the constant `1 − 1/β` divergence.
pub fn dpd_objective<F: ModelFamily + ?Sized>(
    sample: &Sample,
    theta: &ParamVector,
    beta: f64,
    family: &F,
) -> Result<f64> {
    check_beta(beta)?;
    check_dims(family, theta)?;
    let n = sample.len() as f64;
    if beta == 0.0 {
        let ll: f64 = sample.as_slice().iter().map(|&x| family.log_density(x, theta)).sum();
        return Ok(-ll / n);
    }
    let integral = power_integral(family, theta, beta + 1.0)?;
    let sum: f64 = sample
        .as_slice()
        .iter()
        .map(|&x| (beta * family.log_density(x, theta)).exp())
        .sum();
    Ok(integral - (beta + 1.0) / (beta * n) * sum)
}

/// `d_β(f_{θg}, f_{θf})`; Kullback–Leibler at β = 0.
pub fn dpd_divergence<F: ModelFamily + ?Sized>(
    g_point: &ParamVector,
    f_point: &ParamVector,
    beta: f64,
    family: &F,
) -> Result<f64> {
    check_beta(beta)?;
    check_dims(family, g_point)?;
    check_dims(family, f_point)?;
    if g_point == f_point {
        return Ok(0.0);
    }
    let (cg, sg) = family.quadrature_frame(g_point);
    let value = if beta == 0.0 {
        integrate_checked(cg, sg, 1.0, |x| {
            let lg = family.log_density(x, g_point);
            let g = lg.exp();
            if g == 0.0 {
                0.0
            } else {
                g * (lg - family.log_density(x, f_point))
            }
        })?
    } else {
        let b1 = beta + 1.0;
        let int_f = power_integral(family, f_point, b1)?;
        let int_g = power_integral(family, g_point, b1)?;
        // Frame for g·f^β: combine the two spreads as if both were Gaussian.
        let (cf, sf) = family.quadrature_frame(f_point);
        let precision = 1.0 / (sg * sg) + beta / (sf * sf);
        let center = (cg / (sg * sg) + beta * cf / (sf * sf)) / precision;
        let cross = integrate_checked(center, precision.sqrt().recip(), int_f.max(int_g), |x| {
            (beta * family.log_density(x, f_point) + family.log_density(x, g_point)).exp()
        })?;
        int_f - b1 / beta * cross + int_g / beta
    };
    Ok(value.max(0.0))
}
