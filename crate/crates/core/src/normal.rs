//! Closed-form normal family and the specialised Rao-type statistics.
//!
//! Two families are provided: [`NormalFamily`] with θ = (μ, σ), and
//! [`NormalMeanFamily`] with θ = μ and a known scale σ₀. Powers of `2π` and
//! `σ` are formed in log space so that large β or σ do not overflow.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{InfoMatrices, ModelFamily, ParamVector, Sample};
use crate::roots::{brent, RootTolerance};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Telephone-line faults: ordered differences between inverse test rates and
/// inverse control rates in 14 matched pairs of areas. The first value is a
/// gross outlier under a normal model.
pub const TELEPHONE_FAULTS: [f64; 14] = [
    -988.0, -135.0, -78.0, 3.0, 59.0, 83.0, 93.0, 110.0, 189.0, 197.0, 204.0, 229.0, 289.0, 310.0,
];

/// The telephone-line faults data as a [`Sample`].
pub fn telephone_sample() -> Sample {
    Sample::from_slice(&TELEPHONE_FAULTS).expect("embedded dataset is valid")
}

/// Normal parameters `(μ, σ)` with `σ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl NormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be finite, got {mu}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { mu, sigma })
    }

    pub fn to_param_vector(self) -> ParamVector {
        ParamVector::from_slice(&[self.mu, self.sigma])
    }

    pub fn from_param_vector(theta: &ParamVector) -> Result<Self> {
        if theta.len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "normal parameters need 2 coordinates, got {}",
                theta.len()
            )));
        }
        Self::new(theta[0], theta[1])
    }
}

/// `τ(β) = 2(2β²+1)√(2β+1)/(2β+1)³ − β²/(β+1)³`.
pub fn tau(beta: f64) -> f64 {
    let a = 2.0 * beta + 1.0;
    let b = beta + 1.0;
    2.0 * (2.0 * beta * beta + 1.0) * a.sqrt() / (a * a * a) - beta * beta / (b * b * b)
}

/// `σ^{−e} (2π)^{−g}` evaluated in log space.
#[inline]
fn scale_factor(sigma: f64, sigma_exp: f64, two_pi_exp: f64) -> f64 {
    (-sigma_exp * sigma.ln() - two_pi_exp * LN_2PI).exp()
}

/// First β-score component
/// `(x−μ)/σ^{β+2} · (2π)^{−β/2} · exp(−β(x−μ)²/(2σ²))`.
pub fn u1(x: f64, params: NormalParams, beta: f64) -> f64 {
    let z = (x - params.mu) / params.sigma;
    let pref = scale_factor(params.sigma, beta + 2.0, 0.5 * beta);
    (x - params.mu) * pref * (-0.5 * beta * z * z).exp()
}

/// Second β-score component
/// `σ^{−(β+1)}(2π)^{−β/2}[(z²−1)exp(−βz²/2) + β/(β+1)^{3/2}]`.
pub fn u2(x: f64, params: NormalParams, beta: f64) -> f64 {
    let z = (x - params.mu) / params.sigma;
    let pref = scale_factor(params.sigma, beta + 1.0, 0.5 * beta);
    pref * ((z * z - 1.0) * (-0.5 * beta * z * z).exp() + beta / (beta + 1.0).powf(1.5))
}

/// `K_β(μ, σ) = diag(K₁₁, K₂₂)`.
pub fn k_matrix(params: NormalParams, beta: f64) -> DMatrix<f64> {
    let base = scale_factor(params.sigma, 2.0 * (beta + 1.0), beta);
    let k11 = base / (2.0 * beta + 1.0).powf(1.5);
    let k22 = base * tau(beta);
    DMatrix::from_diagonal(&DVector::from_vec(vec![k11, k22]))
}

fn j_diagonal(sigma: f64, beta: f64) -> (f64, f64) {
    let base = scale_factor(sigma, beta + 2.0, 0.5 * beta);
    let b1 = beta + 1.0;
    (base / b1.powf(1.5), base * (beta * beta + 2.0) / b1.powf(2.5))
}

fn xi_sigma(sigma: f64, beta: f64) -> f64 {
    -scale_factor(sigma, beta + 1.0, 0.5 * beta) * beta / (beta + 1.0).powf(1.5)
}

fn power_integral_normal(sigma: f64, c: f64) -> f64 {
    // ∫ φ_σ^c = (2π)^{(1−c)/2} σ^{1−c} c^{−1/2}
    scale_factor(sigma, c - 1.0, 0.5 * (c - 1.0)) / c.sqrt()
}

fn log_normal_density(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * LN_2PI - sigma.ln() - 0.5 * z * z
}

fn mle(sample: &Sample) -> (f64, f64) {
    let mean = sample.mean();
    let var = sample.as_slice().iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
        / sample.len() as f64;
    (mean, var.sqrt())
}

/// Normal family with θ = (μ, σ).
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalFamily;

impl ModelFamily for NormalFamily {
    fn dim(&self) -> usize {
        2
    }

    fn validate(&self, theta: &ParamVector) -> Result<()> {
        NormalParams::from_param_vector(theta).map(|_| ())
    }

    fn log_density(&self, x: f64, theta: &ParamVector) -> f64 {
        log_normal_density(x, theta[0], theta[1])
    }

    fn score_into(&self, x: f64, theta: &ParamVector, out: &mut [f64]) {
        let (mu, sigma) = (theta[0], theta[1]);
        let z = (x - mu) / sigma;
        out[0] = z / sigma;
        out[1] = (z * z - 1.0) / sigma;
    }

    fn quadrature_frame(&self, theta: &ParamVector) -> (f64, f64) {
        (theta[0], theta[1])
    }

    fn power_integral_closed(&self, theta: &ParamVector, c: f64) -> Option<f64> {
        Some(power_integral_normal(theta[1], c))
    }

    fn xi_closed(&self, theta: &ParamVector, beta: f64) -> Option<DVector<f64>> {
        Some(DVector::from_vec(vec![0.0, xi_sigma(theta[1], beta)]))
    }

    fn info_closed(&self, theta: &ParamVector, beta: f64) -> Option<InfoMatrices> {
        let params = NormalParams::from_param_vector(theta).ok()?;
        let (j11, j22) = j_diagonal(params.sigma, beta);
        Some(InfoMatrices {
            j: DMatrix::from_diagonal(&DVector::from_vec(vec![j11, j22])),
            k: k_matrix(params, beta),
            xi: DVector::from_vec(vec![0.0, xi_sigma(params.sigma, beta)]),
        })
    }

    fn initial_guess(&self, sample: &Sample) -> Option<ParamVector> {
        let (mean, sd) = mle(sample);
        let sd = if sd > 0.0 { sd } else { 1.0 };
        Some(ParamVector::from_slice(&[mean, sd]))
    }

    fn robust_starts(&self, sample: &Sample) -> Vec<ParamVector> {
        let med = sample.median();
        let s = sample.mad_scale();
        if !(s > 0.0) {
            return Vec::new();
        }
        [med, med - s, med + s]
            .into_iter()
            .map(|m| ParamVector::from_slice(&[m, s]))
            .collect()
    }
}

/// Normal family with θ = μ and known scale `sigma0`.
#[derive(Debug, Clone, Copy)]
pub struct NormalMeanFamily {
    sigma0: f64,
}

impl NormalMeanFamily {
    pub fn new(sigma0: f64) -> Result<Self> {
        if !(sigma0 > 0.0) || !sigma0.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma0 must be positive, got {sigma0}")));
        }
        Ok(Self { sigma0 })
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }
}

impl ModelFamily for NormalMeanFamily {
    fn dim(&self) -> usize {
        1
    }

    fn validate(&self, theta: &ParamVector) -> Result<()> {
        if theta.len() != 1 || !theta[0].is_finite() {
            return Err(Error::InvalidParameter(format!("mean parameter {theta} is not valid")));
        }
        Ok(())
    }

    fn log_density(&self, x: f64, theta: &ParamVector) -> f64 {
        log_normal_density(x, theta[0], self.sigma0)
    }

    fn score_into(&self, x: f64, theta: &ParamVector, out: &mut [f64]) {
        out[0] = (x - theta[0]) / (self.sigma0 * self.sigma0);
    }

    fn quadrature_frame(&self, theta: &ParamVector) -> (f64, f64) {
        (theta[0], self.sigma0)
    }

    fn power_integral_closed(&self, _theta: &ParamVector, c: f64) -> Option<f64> {
        Some(power_integral_normal(self.sigma0, c))
    }

    fn xi_closed(&self, _theta: &ParamVector, _beta: f64) -> Option<DVector<f64>> {
        Some(DVector::zeros(1))
    }

    fn info_closed(&self, theta: &ParamVector, beta: f64) -> Option<InfoMatrices> {
        let params = NormalParams::new(theta[0], self.sigma0).ok()?;
        let (j11, _) = j_diagonal(self.sigma0, beta);
        let k11 = k_matrix(params, beta)[(0, 0)];
        Some(InfoMatrices {
            j: DMatrix::from_element(1, 1, j11),
            k: DMatrix::from_element(1, 1, k11),
            xi: DVector::zeros(1),
        })
    }

    fn initial_guess(&self, sample: &Sample) -> Option<ParamVector> {
        Some(ParamVector::scalar(sample.mean()))
    }

    fn robust_starts(&self, sample: &Sample) -> Vec<ParamVector> {
        let med = sample.median();
        let s = sample.mad_scale();
        let mut starts = vec![ParamVector::scalar(med)];
        if s > 0.0 {
            starts.push(ParamVector::scalar(med - s));
            starts.push(ParamVector::scalar(med + s));
        }
        starts
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        Err(Error::Domain(format!("tuning parameter must be finite and >= 0, got {beta}")))
    } else {
        Ok(())
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")))
    } else {
        Ok(())
    }
}

/// `Σ z_i exp(−β z_i²/2)` with `z_i = (X_i − μ₀)/σ`.
fn weighted_z_sum(sample: &Sample, mu0: f64, sigma: f64, beta: f64) -> f64 {
    sample
        .as_slice()
        .iter()
        .map(|&x| {
            let z = (x - mu0) / sigma;
            z * (-0.5 * beta * z * z).exp()
        })
        .sum()
}

/// Simple-null statistic for the mean with known σ₀:
/// `(2β+1)^{3/2}/n · (Σ z_i e^{−β z_i²/2})²`.
pub fn simple_mean_stat(sample: &Sample, mu0: f64, sigma0: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    check_sigma(sigma0)?;
    let s = weighted_z_sum(sample, mu0, sigma0, beta);
    Ok((2.0 * beta + 1.0).powf(1.5) * s * s / sample.len() as f64)
}

/// The two-dimensional simple-null statistic split into its mean and scale parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointStat {
    pub total: f64,
    pub mean_part: f64,
    pub sigma_part: f64,
}

/// Statistic for `H₀: (μ, σ) = (μ₀, σ₀)`.
pub fn simple_joint_stat(sample: &Sample, mu0: f64, sigma0: f64, beta: f64) -> Result<JointStat> {
    let mean_part = simple_mean_stat(sample, mu0, sigma0, beta)?;
    let n = sample.len() as f64;
    let inner: f64 = sample
        .as_slice()
        .iter()
        .map(|&x| {
            let z = (x - mu0) / sigma0;
            (z * z - 1.0) * (-0.5 * beta * z * z).exp()
        })
        .sum::<f64>()
        + n * beta / (beta + 1.0).powf(1.5);
    let sigma_part = inner * inner / (n * tau(beta));
    Ok(JointStat {
        total: mean_part + sigma_part,
        mean_part,
        sigma_part,
    })
}

/// `S²_{μ₀} = (1/n) Σ (X_i − μ₀)²`.
pub fn s2_mu0(sample: &Sample, mu0: f64) -> f64 {
    sample.as_slice().iter().map(|x| (x - mu0) * (x - mu0)).sum::<f64>() / sample.len() as f64
}

/// Search settings for [`sigma_tilde`].
#[derive(Debug, Clone, Copy)]
pub struct SigmaTildeOptions {
    /// Number of log-spaced points scanning `[S/100, 100·S]` for sign changes.
    pub grid_points: usize,
    /// Relative tolerance on the returned root.
    pub rel_tol: f64,
}

impl Default for SigmaTildeOptions {
    fn default() -> Self {
        Self {
            grid_points: 160,
            rel_tol: 1e-12,
        }
    }
}

/// Scale-free form of `U_{2,β,n}(μ₀, σ)`: the u₂ mean without its positive
/// factor `σ^{−(β+1)}(2π)^{−β/2}`, so it has the same roots in σ.
fn u2_mean_unscaled(xs: &[f64], mu0: f64, sigma: f64, beta: f64, offset: f64) -> f64 {
    let inv = 1.0 / sigma;
    let mut acc = 0.0;
    for &x in xs {
        let z = (x - mu0) * inv;
        let z2 = z * z;
        acc += (z2 - 1.0) * (-0.5 * beta * z2).exp();
    }
    acc / xs.len() as f64 + offset
}

/// DPD objective in σ for fixed μ = μ₀ (β > 0), up to the common factor `(2π)^{−β/2}`.
fn objective_in_sigma(xs: &[f64], mu0: f64, sigma: f64, beta: f64) -> f64 {
    let mean_w: f64 = xs
        .iter()
        .map(|&x| {
            let z = (x - mu0) / sigma;
            (-0.5 * beta * z * z).exp()
        })
        .sum::<f64>()
        / xs.len() as f64;
    (-beta * sigma.ln()).exp() * (1.0 / (beta + 1.0).sqrt() - (beta + 1.0) / beta * mean_w)
}

/// Restricted minimum-DPD scale under `μ = μ₀`: the root in σ of the mean
/// second β-score component. At β = 0 this is `S_{μ₀}`.
///
/// Roots are bracketed on a log grid over `[S_{μ₀}/100, 100·S_{μ₀}]`. When
/// several roots exist the one with the smallest DPD objective is returned.
pub fn sigma_tilde(sample: &Sample, mu0: f64, beta: f64, options: SigmaTildeOptions) -> Result<f64> {
    check_beta(beta)?;
    let s2 = s2_mu0(sample, mu0);
    if !(s2 > 0.0) {
        return Err(Error::NoBracket(format!(
            "sample is degenerate at mu0 = {mu0} (zero spread)"
        )));
    }
    let s = s2.sqrt();
    if beta == 0.0 {
        return Ok(s);
    }
    let xs = sample.as_slice();
    let offset = beta / (beta + 1.0).powf(1.5);
    let h = |log_sigma: f64| u2_mean_unscaled(xs, mu0, log_sigma.exp(), beta, offset);

    let lo = (s / 100.0).ln();
    let hi = (s * 100.0).ln();
    let m = options.grid_points.max(2);
    let step = (hi - lo) / (m - 1) as f64;
    let grid: Vec<f64> = (0..m).map(|i| lo + step * i as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&g| h(g)).collect();

    let tol = RootTolerance {
        abs_x: options.rel_tol,
        rel_x: 0.0,
        ..RootTolerance::default()
    };
    let mut roots = Vec::new();
    for i in 0..m - 1 {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            roots.push(grid[i]);
        } else if a.signum() != b.signum() && b != 0.0 {
            roots.push(brent(h, grid[i], grid[i + 1], tol)?);
        }
    }
    if values[m - 1] == 0.0 {
        roots.push(grid[m - 1]);
    }
    if roots.is_empty() {
        return Err(Error::NoBracket(format!(
            "no sign change of the scale equation on [{:e}, {:e}]",
            lo.exp(),
            hi.exp()
        )));
    }
    let best = roots
        .into_iter()
        .map(|r| (r, objective_in_sigma(xs, mu0, r.exp(), beta)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(r, _)| r)
        .expect("non-empty");
    if (best - lo).abs() <= 2.0 * options.rel_tol || (best - hi).abs() <= 2.0 * options.rel_tol {
        return Err(Error::RootAtBoundary(format!("sigma = {:e}", best.exp())));
    }
    Ok(best.exp())
}

/// Composite statistic for `H₀: μ = μ₀` with σ estimated under the null:
/// `(2β+1)^{3/2}/n · (Σ z_i e^{−β z_i²/2})²`, `z_i = (X_i − μ₀)/σ̃_β`.
/// Returns the statistic together with `σ̃_β`.
pub fn composite_mean_stat(sample: &Sample, mu0: f64, beta: f64) -> Result<(f64, f64)> {
    composite_mean_stat_with(sample, mu0, beta, SigmaTildeOptions::default())
}

pub fn composite_mean_stat_with(
    sample: &Sample,
    mu0: f64,
    beta: f64,
    options: SigmaTildeOptions,
) -> Result<(f64, f64)> {
    let sigma = sigma_tilde(sample, mu0, beta, options)?;
    let stat = simple_mean_stat(sample, mu0, sigma, beta)?;
    Ok((stat, sigma))
}

/// `∫ φ^{2}` for the standard normal, handy in tests of the objective.
pub fn standard_normal_square_integral() -> f64 {
    1.0 / (2.0 * PI.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{self, beta_score, info_matrices_by_quadrature};

    fn unit() -> NormalParams {
        NormalParams::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn u1_examples() {
        let p = NormalParams::new(2.5, 3.0).unwrap();
        assert_eq!(u1(2.5, p, 0.7), 0.0);
        assert!((u1(1.0, unit(), 0.0) - 1.0).abs() < 1e-15);
        assert!((u1(1.0, unit(), 1.0) - 0.24197).abs() < 1e-5);
    }

    #[test]
    fn u2_examples() {
        let p = NormalParams::new(1.0, 2.0).unwrap();
        assert!(u2(3.0, p, 0.0).abs() < 1e-15);
        assert!((u2(0.0, unit(), 0.0) + 1.0).abs() < 1e-15);
        let oracle = (2.0 * PI).powf(-0.5) * (-1.0 + 2f64.powf(-1.5));
        assert!((u2(0.0, unit(), 1.0) - oracle).abs() < 1e-14);
        assert!((u2(0.0, unit(), 1.0) + 0.25790).abs() < 1e-5);
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau(0.0), 2.0);
        assert!((tau(1.0) - (6.0 * 3f64.sqrt() / 27.0 - 0.125)).abs() < 1e-15);
        assert!((tau(1.0) - 0.259900).abs() < 1e-6);
        assert!(tau(0.5) > 0.0);
    }

    #[test]
    fn k_matrix_examples() {
        let k = k_matrix(unit(), 0.0);
        assert_eq!((k[(0, 0)], k[(1, 1)], k[(0, 1)]), (1.0, 2.0, 0.0));
        let k = k_matrix(unit(), 1.0);
        assert!((k[(0, 0)] - 0.030629).abs() < 1e-6);
        let k = k_matrix(NormalParams::new(0.0, 2.0).unwrap(), 0.0);
        assert!((k[(0, 0)] - 0.25).abs() < 1e-15 && (k[(1, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for &beta in &[0.0, 0.3, 0.5, 1.0] {
            for &(mu, sigma) in &[(0.0, 1.0), (2.0, 0.5), (-3.0, 4.0)] {
                let theta = ParamVector::from_slice(&[mu, sigma]);
                let closed = NormalFamily.info_closed(&theta, beta).unwrap();
                let quad = info_matrices_by_quadrature(&theta, beta, &NormalFamily).unwrap();
                let scale = closed.k.amax();
                assert!((&closed.k - &quad.k).amax() < 1e-8 * scale.max(1.0));
                assert!((&closed.j - &quad.j).amax() < 1e-8 * closed.j.amax().max(1.0));
                assert!((&closed.xi - &quad.xi).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn k22_uses_tau() {
        let beta = 0.5;
        let sigma = 1.7;
        let theta = ParamVector::from_slice(&[0.3, sigma]);
        let quad = info_matrices_by_quadrature(&theta, beta, &NormalFamily).unwrap();
        // K₂₂ = τ(β) / (σ^{2(β+1)} (2π)^β)
        let expected = tau(beta) / (sigma.powf(2.0 * (beta + 1.0)) * (2.0 * PI).powf(beta));
        assert!((quad.k[(1, 1)] - expected).abs() < 1e-8 * expected);
    }

    #[test]
    fn u1_u2_match_generic_beta_score() {
        for &beta in &[0.0, 0.25, 0.5, 1.0, 2.0] {
            let params = NormalParams::new(0.7, 1.3).unwrap();
            let theta = params.to_param_vector();
            for &x in &[-4.0, -0.3, 0.7, 1.1, 6.0] {
                let u = beta_score(x, &theta, beta, &NormalFamily).unwrap();
                assert!((u[0] - u1(x, params, beta)).abs() < 1e-10);
                assert!((u[1] - u2(x, params, beta)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn simple_mean_stat_examples() {
        let sym = Sample::from_slice(&[-1.0, 1.0]).unwrap();
        assert_eq!(simple_mean_stat(&sym, 0.0, 1.0, 0.4).unwrap(), 0.0);

        let tel = telephone_sample();
        let v = simple_mean_stat(&tel, 0.0, 175.0, 0.0).unwrap();
        let oracle = (40.357142857142854 / (175.0 / 14f64.sqrt())).powi(2);
        assert!((v - oracle).abs() < 1e-12);
        assert!((v - 0.7446).abs() < 1e-3);

        let trimmed = tel.without(0).unwrap();
        let v = simple_mean_stat(&trimmed, 0.0, 175.0, 0.0).unwrap();
        assert!((v - 6.057).abs() < 1e-2);
    }

    #[test]
    fn simple_mean_stat_is_location_scale_invariant() {
        let s = Sample::from_slice(&[0.3, -1.2, 2.2, 0.9, -0.1]).unwrap();
        let (a, b) = (5.0, 3.0);
        let moved = Sample::new(s.as_slice().iter().map(|x| a + b * x).collect()).unwrap();
        for &beta in &[0.0, 0.5, 1.0] {
            let v0 = simple_mean_stat(&s, 0.2, 1.5, beta).unwrap();
            let v1 = simple_mean_stat(&moved, a + b * 0.2, b * 1.5, beta).unwrap();
            assert!((v0 - v1).abs() < 1e-12 * v0.max(1.0));
        }
    }

    #[test]
    fn joint_stat_examples() {
        let sym = Sample::from_slice(&[-1.0, 1.0]).unwrap();
        let j = simple_joint_stat(&sym, 0.0, 1.0, 0.0).unwrap();
        assert_eq!((j.total, j.mean_part, j.sigma_part), (0.0, 0.0, 0.0));

        let zeros = Sample::from_slice(&[0.0, 0.0]).unwrap();
        let j = simple_joint_stat(&zeros, 0.0, 1.0, 0.0).unwrap();
        assert_eq!((j.total, j.mean_part, j.sigma_part), (1.0, 0.0, 1.0));

        let tel = telephone_sample();
        let j = simple_joint_stat(&tel, 0.0, 175.0, 0.0).unwrap();
        let s2 = 1379789.0 / 14.0;
        let sigma_oracle = 7.0 * ((s2 - 30625.0) / 30625.0f64).powi(2);
        assert!((j.sigma_part - sigma_oracle).abs() < 1e-9 * sigma_oracle);
        assert!((j.total - (0.745 + 34.45)).abs() < 0.1);
        assert_eq!(j.total, j.mean_part + j.sigma_part);
    }

    #[test]
    fn s2_examples() {
        assert_eq!(s2_mu0(&Sample::from_slice(&[-1.0, 1.0]).unwrap(), 0.0), 1.0);
        assert!((s2_mu0(&telephone_sample(), 0.0) - 98556.4).abs() < 0.1);
        assert_eq!(s2_mu0(&Sample::from_slice(&[2.5]).unwrap(), 2.5), 0.0);
    }

    #[test]
    fn sigma_tilde_examples() {
        let opts = SigmaTildeOptions::default();
        let sym = Sample::from_slice(&[-1.0, 1.0]).unwrap();
        assert_eq!(sigma_tilde(&sym, 0.0, 0.0, opts).unwrap(), 1.0);
        let tel = telephone_sample();
        assert!((sigma_tilde(&tel, 0.0, 0.0, opts).unwrap() - 313.94).abs() < 0.05);
        let trimmed = tel.without(0).unwrap();
        assert!((sigma_tilde(&trimmed, 0.0, 0.0, opts).unwrap() - 176.21).abs() < 0.05);
    }

    #[test]
    fn sigma_tilde_solves_scale_equation() {
        let tel = telephone_sample();
        for &beta in &[0.1, 0.3, 0.7, 1.0] {
            let s = sigma_tilde(&tel, 0.0, beta, SigmaTildeOptions::default()).unwrap();
            let params = NormalParams::new(0.0, s).unwrap();
            let mean_u2: f64 =
                tel.as_slice().iter().map(|&x| u2(x, params, beta)).sum::<f64>() / 14.0;
            let scale: f64 =
                tel.as_slice().iter().map(|&x| u2(x, params, beta).abs()).sum::<f64>() / 14.0;
            assert!(mean_u2.abs() < 1e-10 * scale, "beta {beta}: {mean_u2}");
        }
    }

    #[test]
    fn sigma_tilde_continuous_at_zero() {
        let tel = telephone_sample();
        let s0 = s2_mu0(&tel, 0.0).sqrt();
        let s = sigma_tilde(&tel, 0.0, 1e-6, SigmaTildeOptions::default()).unwrap();
        assert!((s - s0).abs() / s0 < 1e-4);
    }

    #[test]
    fn sigma_tilde_degenerate_sample() {
        let flat = Sample::from_slice(&[1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            sigma_tilde(&flat, 1.0, 0.5, SigmaTildeOptions::default()),
            Err(Error::NoBracket(_))
        ));
    }

    #[test]
    fn composite_mean_stat_examples() {
        let sym = Sample::from_slice(&[-1.0, 1.0]).unwrap();
        assert_eq!(composite_mean_stat(&sym, 0.0, 0.5).unwrap().0, 0.0);
        let tel = telephone_sample();
        let (v, s) = composite_mean_stat(&tel, 0.0, 0.0).unwrap();
        let oracle = (tel.mean() / (s2_mu0(&tel, 0.0).sqrt() / 14f64.sqrt())).powi(2);
        assert!((v - oracle).abs() < 1e-12);
        assert!((v - 0.2314).abs() < 1e-3);
        assert!((s - 313.94).abs() < 0.05);
        let (v, _) = composite_mean_stat(&tel.without(0).unwrap(), 0.0, 0.0).unwrap();
        assert!((v - 5.974).abs() < 0.02);
    }

    #[test]
    fn objective_matches_generic_in_sigma() {
        let tel = telephone_sample();
        let beta = 0.4;
        let a = objective_in_sigma(tel.as_slice(), 0.0, 200.0, beta);
        let b = model::dpd_objective(
            &tel,
            &ParamVector::from_slice(&[0.0, 200.0]),
            beta,
            &NormalFamily,
        )
        .unwrap();
        assert!((a * (2.0 * PI).powf(-beta / 2.0) - b).abs() < 1e-14);
    }

    #[test]
    fn normal_density_integrates_to_one_and_score_is_centred() {
        let theta = ParamVector::from_slice(&[1.5, 0.8]);
        let mass = model::power_integral_by_quadrature(&NormalFamily, &theta, 1.0).unwrap();
        assert!((mass - 1.0).abs() < 1e-8);
        let xi0 = model::xi_by_quadrature(&NormalFamily, &theta, 0.0).unwrap();
        assert!(xi0.amax() < 1e-8);
    }
}
