//! Minimum DPD estimators, unrestricted and restricted, with their
//! asymptotic covariance matrices.
//!
//! Both solvers are damped Newton iterations on the estimating equation with a
//! finite-difference Jacobian. Unrestricted and fixed-subset problems use the
//! DPD objective for the line search; general constraints use the squared
//! residual of the Lagrangian system.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::spd_inverse;
use crate::model::{dpd_objective, info_matrices, score_abs_mean, score_mean, ModelFamily, ParamVector, Sample};

type ConstraintFn = Arc<dyn Fn(&ParamVector) -> DVector<f64> + Send + Sync>;
type ConstraintJac = Arc<dyn Fn(&ParamVector) -> DMatrix<f64> + Send + Sync>;

/// Which algorithm a [`Constraint`] is solved with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    FixedSubset,
    General,
}

#[derive(Clone)]
enum Inner {
    Fixed { indices: Vec<usize>, values: Vec<f64> },
    General { r: usize, m: ConstraintFn, jac: ConstraintJac },
}

/// Equality restrictions `m(θ) = 0_r` with Jacobian `M(θ)` (p×r, one column per restriction).
#[derive(Clone)]
pub struct Constraint {
    inner: Inner,
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.inner {
            Inner::Fixed { indices, values } => f
                .debug_struct("Constraint::FixedSubset")
                .field("indices", indices)
                .field("values", values)
                .finish(),
            Inner::General { r, .. } => f.debug_struct("Constraint::General").field("r", r).finish(),
        }
    }
}

impl Constraint {
    /// Pins `θ[indices[i]] = values[i]`.
    pub fn fixed_subset(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.is_empty() || indices.len() != values.len() {
            return Err(Error::InvalidParameter(
                "fixed-subset constraint needs matching, non-empty indices and values".into(),
            ));
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return Err(Error::InvalidParameter("duplicate constrained index".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("pinned values must be finite".into()));
        }
        Ok(Self {
            inner: Inner::Fixed { indices, values },
        })
    }

    /// Pins the leading block `θ[0..r] = values`.
    pub fn leading(values: &[f64]) -> Result<Self> {
        Self::fixed_subset((0..values.len()).collect(), values.to_vec())
    }

    /// General smooth restriction with `r` components.
    pub fn general<M, J>(r: usize, m: M, jacobian: J) -> Result<Self>
    where
        M: Fn(&ParamVector) -> DVector<f64> + Send + Sync + 'static,
        J: Fn(&ParamVector) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if r == 0 {
            return Err(Error::InvalidParameter("constraint needs r >= 1".into()));
        }
        Ok(Self {
            inner: Inner::General {
                r,
                m: Arc::new(m),
                jac: Arc::new(jacobian),
            },
        })
    }

    pub fn kind(&self) -> ConstraintKind {
        match self.inner {
            Inner::Fixed { .. } => ConstraintKind::FixedSubset,
            Inner::General { .. } => ConstraintKind::General,
        }
    }

    /// Number of restrictions `r`.
    pub fn r(&self) -> usize {
        match &self.inner {
            Inner::Fixed { indices, .. } => indices.len(),
            Inner::General { r, .. } => *r,
        }
    }

    /// `m(θ)`.
    pub fn eval(&self, theta: &ParamVector) -> DVector<f64> {
        match &self.inner {
            Inner::Fixed { indices, values } => {
                DVector::from_iterator(indices.len(), indices.iter().zip(values).map(|(&i, v)| theta[i] - v))
            }
            Inner::General { m, .. } => m(theta),
        }
    }

    /// `M(θ)`, p×r.
    pub fn jacobian(&self, theta: &ParamVector) -> DMatrix<f64> {
        match &self.inner {
            Inner::Fixed { indices, .. } => {
                let mut mm = DMatrix::zeros(theta.len(), indices.len());
                for (col, &i) in indices.iter().enumerate() {
                    mm[(i, col)] = 1.0;
                }
                mm
            }
            Inner::General { jac, .. } => jac(theta),
        }
    }

    /// `theta` with pinned coordinates overwritten; general constraints return it unchanged.
    pub fn project_start(&self, theta: &ParamVector) -> ParamVector {
        match &self.inner {
            Inner::Fixed { indices, values } => {
                let mut v = theta.to_vec();
                for (&i, &x) in indices.iter().zip(values) {
                    v[i] = x;
                }
                ParamVector::new(v)
            }
            Inner::General { .. } => theta.clone(),
        }
    }

    fn check(&self, theta: &ParamVector) -> Result<DMatrix<f64>> {
        let p = theta.len();
        if let Inner::Fixed { indices, .. } = &self.inner {
            if indices.iter().any(|&i| i >= p) {
                return Err(Error::InvalidParameter("constrained index out of range".into()));
            }
        }
        let r = self.r();
        if r > p {
            return Err(Error::InvalidParameter(format!("r = {r} exceeds p = {p}")));
        }
        let mm = self.jacobian(theta);
        if mm.nrows() != p || mm.ncols() != r {
            return Err(Error::InvalidParameter(format!(
                "constraint Jacobian is {}x{}, expected {p}x{r}",
                mm.nrows(),
                mm.ncols()
            )));
        }
        check_rank(&mm)?;
        Ok(mm)
    }
}

fn check_rank(mm: &DMatrix<f64>) -> Result<()> {
    if mm.iter().any(|v| !v.is_finite()) {
        return Err(Error::RankDeficient);
    }
    let sv = mm.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= 1e-12 * max {
        return Err(Error::RankDeficient);
    }
    Ok(())
}

/// Iteration controls shared by both solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Bound on the scaled residual of the estimating equation.
    pub tol: f64,
    pub max_iter: usize,
    /// Try the family's MLE and robust starts in addition to `init`.
    pub multi_start: bool,
    /// Return the best unconverged iterate instead of an error.
    pub allow_unconverged: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            multi_start: true,
            allow_unconverged: false,
        }
    }
}

/// Result of an estimation run.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub theta_hat: ParamVector,
    pub objective_value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Scaled residual of the estimating equation at `theta_hat`.
    pub residual: f64,
    /// `J⁻¹KJ⁻¹` for the unrestricted estimator, `PKP` for the restricted one.
    pub asymptotic_cov: DMatrix<f64>,
    /// Lagrange multipliers with `U(θ̃) = −M(θ̃)λ̃` (restricted only).
    pub lambda: Option<DVector<f64>>,
}

/// `J⁻¹KJ⁻¹` at the model.
pub fn asymptotic_cov_unrestricted<F: ModelFamily + ?Sized>(
    theta: &ParamVector,
    beta: f64,
    family: &F,
) -> Result<DMatrix<f64>> {
    let info = info_matrices(theta, beta, family)?;
    let j_inv = spd_inverse(&info.j, "J_beta")?;
    Ok(crate::linalg::symmetrize(&(&j_inv * &info.k * &j_inv)))
}

/// The matrices `P`, `Q` and `Σ = PKP` describing the restricted estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrices {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
}

impl ProjectionMatrices {
    /// `Q = J⁻¹M(MᵀJ⁻¹M)⁻¹`, `P = J⁻¹ − QMᵀJ⁻¹`, `Σ = PKP`.
    pub fn from_matrices(j: &DMatrix<f64>, k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Self> {
        check_rank(m)?;
        let j_inv = spd_inverse(j, "J_beta")?;
        let jm = &j_inv * m;
        let mjm = m.transpose() * &jm;
        let mjm_inv = spd_inverse(&mjm, "M^T J^-1 M")?;
        let q = &jm * mjm_inv;
        let p = &j_inv - &q * m.transpose() * &j_inv;
        let sigma = crate::linalg::symmetrize(&(&p * k * &p));
        Ok(Self { p, q, sigma })
    }
}

/// `(P, Q, Σ)` at `theta` for the given constraint.
pub fn restricted_projection_matrices<F: ModelFamily + ?Sized>(
    theta: &ParamVector,
    beta: f64,
    family: &F,
    constraint: &Constraint,
) -> Result<ProjectionMatrices> {
    let info = info_matrices(theta, beta, family)?;
    let m = constraint.check(theta)?;
    ProjectionMatrices::from_matrices(&info.j, &info.k, &m)
}

/// Unrestricted minimum DPD estimator.
///
/// Among the stationary points reached from `init` and, when enabled, the
/// family's own starting points, the one with the smallest DPD objective wins.
pub fn mdpde<F: ModelFamily + ?Sized>(
    sample: &Sample,
    beta: f64,
    family: &F,
    init: &ParamVector,
    options: SolverOptions,
) -> Result<EstimateReport> {
    family.validate(init)?;
    if init.len() != family.dim() {
        return Err(Error::InvalidParameter("init has the wrong dimension".into()));
    }
    let free: Vec<usize> = (0..family.dim()).collect();
    let starts = start_points(sample, family, init, None, options);
    let best = best_of(starts.iter().map(|s| solve_subset(sample, beta, family, s, &free, options)))?;
    finish_unrestricted(best, beta, family, options)
}

/// Restricted minimum DPD estimator under `m(θ) = 0`.
pub fn rmdpde<F: ModelFamily + ?Sized>(
    sample: &Sample,
    beta: f64,
    family: &F,
    constraint: &Constraint,
    init: &ParamVector,
    options: SolverOptions,
) -> Result<EstimateReport> {
    if init.len() != family.dim() {
        return Err(Error::InvalidParameter("init has the wrong dimension".into()));
    }
    family.validate(init)?;
    constraint.check(init)?;
    let gap = constraint.eval(init).amax();
    if gap > 1e-12 {
        return Err(Error::Infeasible(format!("|m(init)| = {gap:e}")));
    }
    let p = family.dim();
    let r = constraint.r();
    let solution = match &constraint.inner {
        Inner::Fixed { indices, .. } => {
            let free: Vec<usize> = (0..p).filter(|i| !indices.contains(i)).collect();
            if free.is_empty() {
                Candidate {
                    theta: init.clone(),
                    objective: dpd_objective(sample, init, beta, family)?,
                    iterations: 0,
                    residual: 0.0,
                    converged: true,
                    lambda: None,
                }
            } else {
                let starts = start_points(sample, family, init, Some(constraint), options);
                best_of(starts.iter().map(|s| solve_subset(sample, beta, family, s, &free, options)))?
            }
        }
        Inner::General { .. } => {
            if r == p {
                Candidate {
                    theta: init.clone(),
                    objective: dpd_objective(sample, init, beta, family)?,
                    iterations: 0,
                    residual: 0.0,
                    converged: true,
                    lambda: None,
                }
            } else {
                solve_lagrangian(sample, beta, family, constraint, init, options)?
            }
        }
    };
    if !solution.converged && !options.allow_unconverged {
        return Err(Error::NoConvergence {
            iterations: solution.iterations,
            residual: solution.residual,
        });
    }
    let theta = solution.theta;
    let u = score_mean(sample, &theta, beta, family)?;
    let mm = constraint.jacobian(&theta);
    let lambda = match solution.lambda {
        Some(l) => l,
        None => multiplier_least_squares(&mm, &u)?,
    };
    let proj = restricted_projection_matrices(&theta, beta, family, constraint)?;
    Ok(EstimateReport {
        theta_hat: theta,
        objective_value: solution.objective,
        converged: solution.converged,
        iterations: solution.iterations,
        residual: solution.residual,
        asymptotic_cov: proj.sigma,
        lambda: Some(lambda),
    })
}

/// `λ = −(MᵀM)⁻¹MᵀU`, the least-squares solution of `U = −Mλ`.
fn multiplier_least_squares(mm: &DMatrix<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
    let mtm = mm.transpose() * mm;
    let inv = spd_inverse(&mtm, "M^T M")?;
    Ok(-(inv * mm.transpose() * u))
}

#[derive(Debug, Clone)]
struct Candidate {
    theta: ParamVector,
    objective: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
    lambda: Option<DVector<f64>>,
}

fn start_points<F: ModelFamily + ?Sized>(
    sample: &Sample,
    family: &F,
    init: &ParamVector,
    constraint: Option<&Constraint>,
    options: SolverOptions,
) -> Vec<ParamVector> {
    let mut starts = vec![init.clone()];
    if options.multi_start {
        let extra = family.initial_guess(sample).into_iter().chain(family.robust_starts(sample));
        for s in extra {
            let s = match constraint {
                Some(c) => c.project_start(&s),
                None => s,
            };
            if s.len() == family.dim() && family.validate(&s).is_ok() && !starts.contains(&s) {
                starts.push(s);
            }
        }
    }
    starts
}

/// Converged candidate with the smallest objective, else the one with the
/// smallest residual, else the first error.
fn best_of<I: Iterator<Item = Result<Candidate>>>(results: I) -> Result<Candidate> {
    let mut first_err = None;
    let mut best: Option<Candidate> = None;
    for res in results {
        match res {
            Ok(c) => {
                let better = match &best {
                    None => true,
                    Some(b) => match (c.converged, b.converged) {
                        (true, false) => true,
                        (false, true) => false,
                        (true, true) => c.objective < b.objective,
                        (false, false) => c.residual < b.residual,
                    },
                };
                if better {
                    best = Some(c);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or(Error::NoConvergence { iterations: 0, residual: f64::NAN }))
}

fn finish_unrestricted<F: ModelFamily + ?Sized>(
    best: Candidate,
    beta: f64,
    family: &F,
    options: SolverOptions,
) -> Result<EstimateReport> {
    if !best.converged && !options.allow_unconverged {
        return Err(Error::NoConvergence {
            iterations: best.iterations,
            residual: best.residual,
        });
    }
    let cov = asymptotic_cov_unrestricted(&best.theta, beta, family)?;
    Ok(EstimateReport {
        theta_hat: best.theta,
        objective_value: best.objective,
        converged: best.converged,
        iterations: best.iterations,
        residual: best.residual,
        asymptotic_cov: cov,
        lambda: None,
    })
}

/// Per-coordinate scale for residuals: the larger of the model standard
/// deviation `√K_ii` and the mean absolute β-score. The first keeps the
/// scale meaningful when every observation contributes the same sign.
fn residual_scale<F: ModelFamily + ?Sized>(
    sample: &Sample,
    theta: &ParamVector,
    beta: f64,
    family: &F,
) -> Option<DVector<f64>> {
    let k = info_matrices(theta, beta, family).ok()?.k;
    let abs = score_abs_mean(sample, theta, beta, family).ok()?;
    Some(DVector::from_fn(abs.len(), |i, _| abs[i].max(k[(i, i)].max(0.0).sqrt())))
}

/// Scaled residual of the free score components; `None` when θ is invalid.
fn subset_residual<F: ModelFamily + ?Sized>(
    sample: &Sample,
    beta: f64,
    family: &F,
    theta: &ParamVector,
    free: &[usize],
) -> Option<(DVector<f64>, f64)> {
    let u = score_mean(sample, theta, beta, family).ok()?;
    let scale = residual_scale(sample, theta, beta, family)?;
    let uf = DVector::from_iterator(free.len(), free.iter().map(|&i| u[i]));
    let res = free
        .iter()
        .map(|&i| u[i].abs() / scale[i].max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    res.is_finite().then_some((uf, res))
}

fn fd_step<F: ModelFamily + ?Sized>(family: &F, theta: &ParamVector, i: usize) -> f64 {
    let (_, spread) = family.quadrature_frame(theta);
    1e-6 * theta[i].abs().max(spread.abs()).max(1e-8)
}

fn with_coord(theta: &ParamVector, i: usize, v: f64) -> ParamVector {
    let mut t = theta.to_vec();
    t[i] = v;
    ParamVector::new(t)
}

/// Central-difference Jacobian of the free score components with respect to the free coordinates.
fn subset_jacobian<F: ModelFamily + ?Sized>(
    sample: &Sample,
    beta: f64,
    family: &F,
    theta: &ParamVector,
    free: &[usize],
) -> Option<DMatrix<f64>> {
    let q = free.len();
    let mut jac = DMatrix::zeros(q, q);
    for (col, &i) in free.iter().enumerate() {
        let h = fd_step(family, theta, i);
        let plus = with_coord(theta, i, theta[i] + h);
        let minus = with_coord(theta, i, theta[i] - h);
        let (up, um) = if family.validate(&minus).is_ok() {
            (
                score_mean(sample, &plus, beta, family).ok()?,
                score_mean(sample, &minus, beta, family).ok()?,
            )
        } else {
            (
                score_mean(sample, &plus, beta, family).ok()?,
                score_mean(sample, theta, beta, family).ok()?,
            )
        };
        let denom = if family.validate(&minus).is_ok() { 2.0 * h } else { h };
        for (row, &k) in free.iter().enumerate() {
            jac[(row, col)] = (up[k] - um[k]) / denom;
        }
    }
    Some(jac)
}

fn solve_linear(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let x = a.clone().lu().solve(b)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Damped Newton on the free coordinates, line search on the DPD objective.
fn solve_subset<F: ModelFamily + ?Sized>(
    sample: &Sample,
    beta: f64,
    family: &F,
    start: &ParamVector,
    free: &[usize],
    options: SolverOptions,
) -> Result<Candidate> {
    let mut theta = start.clone();
    let mut obj = dpd_objective(sample, &theta, beta, family)?;
    let (mut u, mut res) = subset_residual(sample, beta, family, &theta, free)
        .ok_or_else(|| Error::Domain(format!("score undefined at start {start}")))?;
    let mut iterations = 0;
    let mut converged = res < options.tol;

    while !converged && iterations < options.max_iter {
        iterations += 1;
        let Some(direction) = newton_direction(sample, beta, family, &theta, free, &u) else {
            break;
        };
        let Some((next, next_obj)) = line_search(sample, beta, family, &theta, free, &direction, obj) else {
            break;
        };
        theta = next;
        obj = next_obj;
        match subset_residual(sample, beta, family, &theta, free) {
            Some((nu, nres)) => {
                u = nu;
                res = nres;
            }
            None => break,
        }
        converged = res < options.tol;
    }

    if converged {
        // One polishing step; kept only if it lowers the residual.
        if let Some(d) = newton_direction(sample, beta, family, &theta, free, &u) {
            let cand = step(&theta, free, &d, 1.0);
            if family.validate(&cand).is_ok() {
                if let Some((_, cres)) = subset_residual(sample, beta, family, &cand, free) {
                    if cres < res {
                        if let Ok(cobj) = dpd_objective(sample, &cand, beta, family) {
                            theta = cand;
                            obj = cobj;
                            res = cres;
                        }
                    }
                }
            }
        }
    }
    Ok(Candidate {
        theta,
        objective: obj,
        iterations,
        residual: res,
        converged,
        lambda: None,
    })
}

/// Newton direction for the free score equations; falls back to the
/// scoring direction `J⁻¹U` when the Newton step is not a descent direction.
fn newton_direction<F: ModelFamily + ?Sized>(
    sample: &Sample,
    beta: f64,
    family: &F,
    theta: &ParamVector,
    free: &[usize],
    u: &DVector<f64>,
) -> Option<DVector<f64>> {
    let scoring = || -> Option<DVector<f64>> {
        let info = info_matrices(theta, beta, family).ok()?;
        let jf = DMatrix::from_fn(free.len(), free.len(), |a, b| info.j[(free[a], free[b])]);
        solve_linear(&jf, u)
    };
    let jac = subset_jacobian(sample, beta, family, theta, free)?;
    match solve_linear(&jac, &(-u)) {
        // The objective gradient is −(β+1)U, so descent needs U·d > 0.
        Some(d) if d.dot(u) > 0.0 => Some(d),
        _ => scoring(),
    }
}

fn step(theta: &ParamVector, free: &[usize], d: &DVector<f64>, t: f64) -> ParamVector {
    let mut v = theta.to_vec();
    for (k, &i) in free.iter().enumerate() {
        v[i] += t * d[k];
    }
    ParamVector::new(v)
}

fn line_search<F: ModelFamily + ?Sized>(
    sample: &Sample,
    beta: f64,
    family: &F,
    theta: &ParamVector,
    free: &[usize],
    d: &DVector<f64>,
    obj: f64,
) -> Option<(ParamVector, f64)> {
    let slack = 1e-13 * obj.abs().max(f64::MIN_POSITIVE);
    let mut t = 1.0;
    for _ in 0..60 {
        let cand = step(theta, free, d, t);
        if family.validate(&cand).is_ok() {
            if let Ok(v) = dpd_objective(sample, &cand, beta, family) {
                if v.is_finite() && v <= obj + slack {
                    return Some((cand, v));
                }
            }
        }
        t *= 0.5;
    }
    None
}

/// Newton on `F(θ, λ) = (U(θ) + M(θ)λ, m(θ)) = 0` with a backtracking search
/// on the scaled residual norm.
fn solve_lagrangian<F: ModelFamily + ?Sized>(
    sample: &Sample,
    beta: f64,
    family: &F,
    constraint: &Constraint,
    init: &ParamVector,
    options: SolverOptions,
) -> Result<Candidate> {
    let p = family.dim();
    let r = constraint.r();
    let system = |theta: &ParamVector, lambda: &DVector<f64>| -> Option<(DVector<f64>, f64)> {
        let u = score_mean(sample, theta, beta, family).ok()?;
        let scale = residual_scale(sample, theta, beta, family)?;
        let mm = constraint.jacobian(theta);
        let stat = &u + &mm * lambda;
        let m = constraint.eval(theta);
        let mut f = DVector::zeros(p + r);
        let mut res: f64 = 0.0;
        for i in 0..p {
            f[i] = stat[i];
            res = res.max(stat[i].abs() / scale[i].max(f64::MIN_POSITIVE));
        }
        for i in 0..r {
            f[p + i] = m[i];
        }
        res.is_finite().then_some((f, res))
    };

    let mut theta = init.clone();
    let u0 = score_mean(sample, &theta, beta, family)?;
    let mut lambda = multiplier_least_squares(&constraint.jacobian(&theta), &u0)?;
    let (mut f, mut res) =
        system(&theta, &lambda).ok_or_else(|| Error::Domain(format!("score undefined at {init}")))?;
    let feasible_tol = |m: &DVector<f64>| m.amax() <= 1e-10;
    let mut iterations = 0;
    let mut converged = res < options.tol && feasible_tol(&constraint.eval(&theta));

    while !converged && iterations < options.max_iter {
        iterations += 1;
        let mut jac = DMatrix::zeros(p + r, p + r);
        for i in 0..p {
            let h = fd_step(family, &theta, i);
            let plus = with_coord(&theta, i, theta[i] + h);
            let minus = with_coord(&theta, i, theta[i] - h);
            let (fp, _) = system(&plus, &lambda).ok_or_else(|| Error::Domain("score undefined".into()))?;
            let (fm, denom) = match system(&minus, &lambda) {
                Some((fm, _)) => (fm, 2.0 * h),
                None => (f.clone(), h),
            };
            jac.set_column(i, &((fp - fm) / denom));
        }
        let mm = constraint.jacobian(&theta);
        for k in 0..r {
            for i in 0..p {
                jac[(i, p + k)] = mm[(i, k)];
            }
        }
        let Some(d) = solve_linear(&jac, &(-&f)) else { break };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand_theta = ParamVector::from(theta.as_vector() + t * d.rows(0, p));
            let cand_lambda = &lambda + t * d.rows(p, r);
            if family.validate(&cand_theta).is_ok() {
                if let Some((cf, cres)) = system(&cand_theta, &cand_lambda) {
                    if cf.norm() <= (1.0 - 1e-4 * t) * f.norm() || cres < res {
                        theta = cand_theta;
                        lambda = cand_lambda;
                        f = cf;
                        res = cres;
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        converged = res < options.tol && feasible_tol(&constraint.eval(&theta));
    }
    let objective = dpd_objective(sample, &theta, beta, family)?;
    Ok(Candidate {
        theta,
        objective,
        iterations,
        residual: res,
        converged,
        lambda: Some(lambda),
    })
}
