//! Rao-type test statistics built on the β-score.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::distributions::{chi2_quantile, chi2_survival};
use crate::error::{Error, Result};
use crate::estimation::{rmdpde, Constraint, ProjectionMatrices, SolverOptions};
use crate::linalg::{quad_form, spd_inverse};
use crate::model::{info_matrices, score_mean, ModelFamily, ParamVector, Sample};

/// Outcome of a test: statistic, asymptotic p-value and decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub beta: f64,
    /// The restricted estimate the composite statistic was evaluated at.
    pub estimator: Option<Vec<f64>>,
}

impl TestReport {
    /// Rejects when the statistic strictly exceeds the `χ²_df` upper-α quantile.
    pub fn new(statistic: f64, df: u32, alpha: f64, beta: f64, estimator: Option<&ParamVector>) -> Result<Self> {
        if !statistic.is_finite() {
            return Err(Error::Singular(format!("statistic is not finite ({statistic})")));
        }
        // Quadratic forms in PD matrices may come out as -0 or -1e-17.
        let statistic = statistic.max(0.0);
        let threshold = chi2_quantile(alpha, df)?;
        Ok(Self {
            statistic,
            df,
            p_value: chi2_survival(statistic, df)?,
            alpha,
            reject: statistic > threshold,
            beta,
            estimator: estimator.map(|e| e.to_vec()),
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `n Uᵀ K⁻¹ U` at `θ₀`.
pub fn simple_statistic<F: ModelFamily + ?Sized>(
    sample: &Sample,
    theta0: &ParamVector,
    beta: f64,
    family: &F,
) -> Result<f64> {
    let u = score_mean(sample, theta0, beta, family)?;
    let info = info_matrices(theta0, beta, family)?;
    let k_inv = spd_inverse(&info.k, "K_beta")?;
    Ok(sample.len() as f64 * quad_form(&k_inv, &u))
}

/// Test of the simple null `θ = θ₀`; `df = p`.
pub fn rao_simple<F: ModelFamily + ?Sized>(
    sample: &Sample,
    theta0: &ParamVector,
    beta: f64,
    family: &F,
    alpha: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let stat = simple_statistic(sample, theta0, beta, family)?;
    TestReport::new(stat, family.dim() as u32, alpha, beta, None)
}

/// Settings for composite tests.
#[derive(Debug, Clone, Default)]
pub struct CompositeOptions {
    pub solver: SolverOptions,
    /// Feasible starting point. When absent, the family's initial guess with
    /// pinned coordinates overwritten is used.
    pub init: Option<ParamVector>,
}

fn restricted_estimate<F: ModelFamily + ?Sized>(
    sample: &Sample,
    beta: f64,
    family: &F,
    constraint: &Constraint,
    options: &CompositeOptions,
) -> Result<ParamVector> {
    let init = match &options.init {
        Some(init) => init.clone(),
        None => {
            let guess = family
                .initial_guess(sample)
                .ok_or_else(|| Error::Infeasible("no starting point supplied".into()))?;
            constraint.project_start(&guess)
        }
    };
    Ok(rmdpde(sample, beta, family, constraint, &init, options.solver)?.theta_hat)
}

struct CompositeParts {
    theta: ParamVector,
    u: DVector<f64>,
    q: DMatrix<f64>,
    qkq_inv: DMatrix<f64>,
}

fn composite_parts<F: ModelFamily + ?Sized>(
    sample: &Sample,
    beta: f64,
    family: &F,
    constraint: &Constraint,
    options: &CompositeOptions,
) -> Result<CompositeParts> {
    let theta = restricted_estimate(sample, beta, family, constraint, options)?;
    let u = score_mean(sample, &theta, beta, family)?;
    let info = info_matrices(&theta, beta, family)?;
    let m = constraint.jacobian(&theta);
    let proj = ProjectionMatrices::from_matrices(&info.j, &info.k, &m)?;
    let qkq = proj.q.transpose() * &info.k * &proj.q;
    let qkq_inv = spd_inverse(&qkq, "Q^T K Q")?;
    Ok(CompositeParts {
        theta,
        u,
        q: proj.q,
        qkq_inv,
    })
}

/// Test of `m(θ) = 0` with statistic `n Uᵀ Q (QᵀKQ)⁻¹ Qᵀ U` at the
/// restricted estimate; `df = r`.
pub fn rao_composite<F: ModelFamily + ?Sized>(
    sample: &Sample,
    beta: f64,
    family: &F,
    constraint: &Constraint,
    alpha: f64,
    options: &CompositeOptions,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let parts = composite_parts(sample, beta, family, constraint, options)?;
    let qu = parts.q.transpose() * &parts.u;
    let stat = sample.len() as f64 * quad_form(&parts.qkq_inv, &qu);
    TestReport::new(stat, constraint.r() as u32, alpha, beta, Some(&parts.theta))
}

/// Test of `θ₁ = θ₁₀` for the leading block, with statistic
/// `n U₁ᵀ K₁₁⁻¹ U₁` at the restricted estimate.
pub fn rao_composite_partition<F: ModelFamily + ?Sized>(
    sample: &Sample,
    theta10: &[f64],
    beta: f64,
    family: &F,
    alpha: f64,
    options: &CompositeOptions,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let r = theta10.len();
    let constraint = Constraint::leading(theta10)?;
    let theta = restricted_estimate(sample, beta, family, &constraint, options)?;
    let u = score_mean(sample, &theta, beta, family)?;
    let info = info_matrices(&theta, beta, family)?;
    let k11 = info.k.view((0, 0), (r, r)).into_owned();
    let u1 = u.rows(0, r).into_owned();
    let stat = sample.len() as f64 * quad_form(&spd_inverse(&k11, "K_beta,11")?, &u1);
    TestReport::new(stat, r as u32, alpha, beta, Some(&theta))
}

/// Lagrange multiplier form: `λ̃ = −QᵀU` and `n λ̃ᵀ (QᵀKQ)⁻¹ λ̃`.
pub fn lagrange_multiplier_form<F: ModelFamily + ?Sized>(
    sample: &Sample,
    beta: f64,
    family: &F,
    constraint: &Constraint,
    options: &CompositeOptions,
) -> Result<(DVector<f64>, f64)> {
    let parts = composite_parts(sample, beta, family, constraint, options)?;
    let lambda = -(parts.q.transpose() * &parts.u);
    let stat = sample.len() as f64 * quad_form(&parts.qkq_inv, &lambda);
    Ok((lambda, stat.max(0.0)))
}
