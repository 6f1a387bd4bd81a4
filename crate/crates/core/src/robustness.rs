//! Influence functions, noncentralities and power/level influence functions.
//!
//! Every formula here is evaluated at the model, with `J`, `K` and `ξ` taken
//! at the stated null parameter.

use nalgebra::{DMatrix, DVector};

use crate::distributions::{chi2_quantile, noncentral_chi2_survival, pif_series_cp, ChiSqSpec};
use crate::error::{Error, Result};
use crate::estimation::{Constraint, ProjectionMatrices};
use crate::linalg::{quad_form, spd_inverse};
use crate::model::{beta_score, info_matrices, InfoMatrices, ModelFamily, ParamVector};

/// Point-mass contamination of size `epsilon` at `y` on top of a contiguous drift `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminationSpec {
    pub epsilon: f64,
    pub y: f64,
    pub d: DVector<f64>,
}

impl ContaminationSpec {
    pub fn new(epsilon: f64, y: f64, d: DVector<f64>) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::Domain(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        if !y.is_finite() || d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("contamination point and drift must be finite".into()));
        }
        Ok(Self { epsilon, y, d })
    }
}

fn check_drift<F: ModelFamily + ?Sized>(family: &F, d: &DVector<f64>) -> Result<()> {
    if d.len() != family.dim() {
        return Err(Error::InvalidParameter(format!(
            "drift has {} coordinates, expected {}",
            d.len(),
            family.dim()
        )));
    }
    Ok(())
}

/// `IF(y) = J⁻¹ u_β(y, θ)`.
pub fn if_mdpde<F: ModelFamily + ?Sized>(y: f64, theta: &ParamVector, beta: f64, family: &F) -> Result<DVector<f64>> {
    let info = info_matrices(theta, beta, family)?;
    let u = beta_score(y, theta, beta, family)?;
    Ok(spd_inverse(&info.j, "J_beta")? * u)
}

fn check_null(theta: &ParamVector, constraint: &Constraint) -> Result<()> {
    let gap = constraint.eval(theta).amax();
    if gap > 1e-10 {
        return Err(Error::Domain(format!(
            "influence of the restricted estimator is only available under the null (|m(theta)| = {gap:e})"
        )));
    }
    Ok(())
}

/// Influence function of the restricted estimator at a null parameter,
/// where the population score vanishes and it reduces to `J⁻¹ u_β(y, θ)`.
pub fn if_rmdpde<F: ModelFamily + ?Sized>(
    y: f64,
    theta: &ParamVector,
    beta: f64,
    family: &F,
    constraint: &Constraint,
) -> Result<DVector<f64>> {
    check_null(theta, constraint)?;
    if_mdpde(y, theta, beta, family)
}

/// Second-order influence function of the simple statistic, `2 uᵀ K⁻¹ u`.
pub fn if2_simple<F: ModelFamily + ?Sized>(y: f64, theta0: &ParamVector, beta: f64, family: &F) -> Result<f64> {
    let info = info_matrices(theta0, beta, family)?;
    let u = beta_score(y, theta0, beta, family)?;
    Ok((2.0 * quad_form(&spd_inverse(&info.k, "K_beta")?, &u)).max(0.0))
}

/// `J Q (QᵀKQ)⁻¹ Qᵀ` pieces for composite quadratic forms.
struct Projected {
    info: InfoMatrices,
    /// `Q (QᵀKQ)⁻¹ Qᵀ`.
    middle: DMatrix<f64>,
}

fn projected<F: ModelFamily + ?Sized>(
    theta: &ParamVector,
    beta: f64,
    family: &F,
    constraint: &Constraint,
) -> Result<Projected> {
    let info = info_matrices(theta, beta, family)?;
    let m = constraint.jacobian(theta);
    let proj = ProjectionMatrices::from_matrices(&info.j, &info.k, &m)?;
    let qkq = proj.q.transpose() * &info.k * &proj.q;
    let middle = &proj.q * spd_inverse(&qkq, "Q^T K Q")? * proj.q.transpose();
    Ok(Projected { info, middle })
}

/// Second-order influence function of the composite statistic,
/// `2 IFᵀ Q (QᵀKQ)⁻¹ Qᵀ IF` with `IF` the restricted estimator's influence.
pub fn if2_composite<F: ModelFamily + ?Sized>(
    y: f64,
    theta: &ParamVector,
    beta: f64,
    family: &F,
    constraint: &Constraint,
) -> Result<f64> {
    let inf = if_rmdpde(y, theta, beta, family, constraint)?;
    let pr = projected(theta, beta, family, constraint)?;
    Ok((2.0 * quad_form(&pr.middle, &inf)).max(0.0))
}

/// `δ = dᵀ J K⁻¹ J d`.
pub fn noncentrality_simple<F: ModelFamily + ?Sized>(
    theta0: &ParamVector,
    d: &DVector<f64>,
    beta: f64,
    family: &F,
) -> Result<f64> {
    check_drift(family, d)?;
    let info = info_matrices(theta0, beta, family)?;
    let jd = &info.j * d;
    Ok(quad_form(&spd_inverse(&info.k, "K_beta")?, &jd).max(0.0))
}

/// Simple noncentrality at the shifted drift `d + ε·IF(y)`.
pub fn noncentrality_contaminated<F: ModelFamily + ?Sized>(
    theta0: &ParamVector,
    spec: &ContaminationSpec,
    beta: f64,
    family: &F,
) -> Result<f64> {
    check_drift(family, &spec.d)?;
    let shifted = &spec.d + spec.epsilon * if_mdpde(spec.y, theta0, beta, family)?;
    noncentrality_simple(theta0, &shifted, beta, family)
}

/// `δ̃ = δᵀ J Q (QᵀKQ)⁻¹ Qᵀ J δ` at the shifted drift `δ = d + ε·IF(y)`.
pub fn noncentrality_composite<F: ModelFamily + ?Sized>(
    theta: &ParamVector,
    spec: &ContaminationSpec,
    beta: f64,
    family: &F,
    constraint: &Constraint,
) -> Result<f64> {
    check_drift(family, &spec.d)?;
    check_null(theta, constraint)?;
    let pr = projected(theta, beta, family, constraint)?;
    let shifted = if spec.epsilon == 0.0 {
        spec.d.clone()
    } else {
        &spec.d + spec.epsilon * if_rmdpde(spec.y, theta, beta, family, constraint)?
    };
    let jd = &pr.info.j * shifted;
    Ok(quad_form(&pr.middle, &jd).max(0.0))
}

/// Asymptotic power `P(χ²_df(δ) > χ²_{df,α})` against a contiguous alternative.
pub fn contiguous_power(df: u32, noncentrality: f64, alpha: f64) -> Result<f64> {
    let threshold = chi2_quantile(alpha, df)?;
    if noncentrality == 0.0 {
        return Ok(alpha);
    }
    noncentral_chi2_survival(threshold, ChiSqSpec::new(df, noncentrality)?)
}

/// Power influence function of the simple test: `C_p(δ) · dᵀ J K⁻¹ u_β(y, θ₀)`.
pub fn pif_simple<F: ModelFamily + ?Sized>(
    y: f64,
    theta0: &ParamVector,
    d: &DVector<f64>,
    beta: f64,
    family: &F,
    alpha: f64,
) -> Result<f64> {
    check_drift(family, d)?;
    let info = info_matrices(theta0, beta, family)?;
    let k_inv = spd_inverse(&info.k, "K_beta")?;
    let jd = &info.j * d;
    let delta = quad_form(&k_inv, &jd).max(0.0);
    let u = beta_score(y, theta0, beta, family)?;
    let linear = jd.dot(&(&k_inv * u));
    if linear == 0.0 {
        return Ok(0.0);
    }
    let df = family.dim() as u32;
    Ok(pif_series_cp(delta, df, chi2_quantile(alpha, df)?)? * linear)
}

/// Power influence function of the composite test:
/// `C_r(δ̃) · dᵀ J Q (QᵀKQ)⁻¹ Qᵀ u_β(y, θ)`.
pub fn pif_composite<F: ModelFamily + ?Sized>(
    y: f64,
    theta: &ParamVector,
    d: &DVector<f64>,
    beta: f64,
    family: &F,
    constraint: &Constraint,
    alpha: f64,
) -> Result<f64> {
    check_drift(family, d)?;
    check_null(theta, constraint)?;
    let pr = projected(theta, beta, family, constraint)?;
    let jd = &pr.info.j * d;
    let delta = quad_form(&pr.middle, &jd).max(0.0);
    let u = beta_score(y, theta, beta, family)?;
    let linear = jd.dot(&(&pr.middle * u));
    if linear == 0.0 {
        return Ok(0.0);
    }
    let df = constraint.r() as u32;
    Ok(pif_series_cp(delta, df, chi2_quantile(alpha, df)?)? * linear)
}

/// Level influence function of the simple test; identically zero because the
/// level perturbation is quadratic in the contamination size.
pub fn lif_simple<F: ModelFamily + ?Sized>(_y: f64, _theta0: &ParamVector, _beta: f64, _family: &F) -> f64 {
    0.0
}

/// Level influence function of the composite test; identically zero.
pub fn lif_composite<F: ModelFamily + ?Sized>(
    _y: f64,
    _theta: &ParamVector,
    _beta: f64,
    _family: &F,
    _constraint: &Constraint,
) -> f64 {
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal::{NormalFamily, NormalMeanFamily};
    use std::f64::consts::PI;

    fn unit_mean() -> NormalMeanFamily {
        NormalMeanFamily::new(1.0).unwrap()
    }

    fn zero() -> ParamVector {
        ParamVector::scalar(0.0)
    }

    fn d1(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    fn mu_zero() -> Constraint {
        Constraint::leading(&[0.0]).unwrap()
    }

    #[test]
    fn if_examples() {
        let fam = unit_mean();
        for &y in &[-3.0, 0.5, 7.0] {
            assert!((if_mdpde(y, &zero(), 0.0, &fam).unwrap()[0] - y).abs() < 1e-12);
        }
        assert!(if_mdpde(1e3, &zero(), 0.5, &fam).unwrap()[0].abs() < 1e-100);
        let v = if_mdpde(1.0, &zero(), 1.0, &fam).unwrap()[0];
        let oracle = 2f64.powf(1.5) * (2.0 * PI).sqrt() * (-0.5f64).exp() / (2.0 * PI).sqrt();
        assert!((v - oracle).abs() < 1e-12);
        assert!((v - 1.7154).abs() < 1e-3);
    }

    #[test]
    fn if_rmdpde_at_null_and_off_null() {
        let theta = ParamVector::from_slice(&[0.0, 1.5]);
        for &y in &[-2.0, 0.3, 4.0] {
            let a = if_mdpde(y, &theta, 0.4, &NormalFamily).unwrap();
            let b = if_rmdpde(y, &theta, 0.4, &NormalFamily, &mu_zero()).unwrap();
            assert_eq!(a, b);
        }
        let off = ParamVector::from_slice(&[0.2, 1.5]);
        assert!(matches!(
            if_rmdpde(1.0, &off, 0.4, &NormalFamily, &mu_zero()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn if2_simple_examples() {
        let fam = unit_mean();
        assert_eq!(if2_simple(0.0, &zero(), 0.7, &fam).unwrap(), 0.0);
        for &y in &[-4.0, 1.0, 2.5] {
            assert!((if2_simple(y, &zero(), 0.0, &fam).unwrap() - 2.0 * y * y).abs() < 1e-10);
        }
        assert!(if2_simple(10.0, &zero(), 0.5, &fam).unwrap() < 1e-6);
        let y = 1e3;
        let ratio = if2_simple(y, &zero(), 0.0, &fam).unwrap() / (2.0 * y * y);
        assert!((ratio - 1.0).abs() < 1e-10);
    }

    #[test]
    fn if2_simple_is_bounded_for_positive_beta() {
        let fam = unit_mean();
        let mut sup: f64 = 0.0;
        let mut arg = 0.0;
        let mut y = -1e6;
        while y <= 1e6 {
            let v = if2_simple(y, &zero(), 0.5, &fam).unwrap();
            if v > sup {
                sup = v;
                arg = y;
            }
            y += if y.abs() < 20.0 { 0.01 } else { 997.0 };
        }
        assert!(sup.is_finite() && sup > 0.0);
        assert!(arg.abs() < 5.0);
    }

    #[test]
    fn if2_composite_examples() {
        let sigma = 2.0;
        let theta = ParamVector::from_slice(&[0.0, sigma]);
        assert!(if2_composite(0.0, &theta, 0.5, &NormalFamily, &mu_zero()).unwrap() < 1e-30);
        for &y in &[-3.0, 1.0, 10.0] {
            let v = if2_composite(y, &theta, 0.0, &NormalFamily, &mu_zero()).unwrap();
            assert!((v - 2.0 * sigma * sigma * y * y).abs() < 1e-9 * v.max(1.0));
        }
        let mut best = (0.0, 0.0);
        let mut y = -20.0;
        while y <= 20.0 {
            let v = if2_composite(y, &theta, 0.5, &NormalFamily, &mu_zero()).unwrap();
            if v > best.0 {
                best = (v, y);
            }
            y += 0.01;
        }
        assert!(best.1.abs() < 19.0);
    }

    #[test]
    fn noncentrality_examples() {
        let fam = unit_mean();
        assert_eq!(noncentrality_simple(&zero(), &d1(0.0), 0.5, &fam).unwrap(), 0.0);
        assert!((noncentrality_simple(&zero(), &d1(1.7), 0.0, &fam).unwrap() - 2.89).abs() < 1e-12);
        let v = noncentrality_simple(&zero(), &d1(1.0), 1.0, &fam).unwrap();
        assert!((v - 3f64.powf(1.5) / 8.0).abs() < 1e-12);
        assert!((v - 0.64952).abs() < 1e-5);
        let fam2 = NormalMeanFamily::new(2.0).unwrap();
        let v = noncentrality_simple(&zero(), &d1(1.5), 0.3, &fam2).unwrap();
        assert!((v - 2.25 * 1.6f64.powf(1.5) / (1.3f64.powi(3) * 4.0)).abs() < 1e-12);
    }

    #[test]
    fn contaminated_noncentrality_examples() {
        let fam = unit_mean();
        let spec = ContaminationSpec::new(0.0, 3.0, d1(0.8)).unwrap();
        assert_eq!(
            noncentrality_contaminated(&zero(), &spec, 0.5, &fam).unwrap(),
            noncentrality_simple(&zero(), &d1(0.8), 0.5, &fam).unwrap()
        );
        let spec = ContaminationSpec::new(0.1, 5.0, d1(1.0)).unwrap();
        assert!((noncentrality_contaminated(&zero(), &spec, 0.0, &fam).unwrap() - 2.25).abs() < 1e-12);
        let beta = 0.5;
        let (eps, y) = (0.3, 1.2);
        let spec = ContaminationSpec::new(eps, y, d1(0.0)).unwrap();
        let u = beta_score(y, &zero(), beta, &fam).unwrap()[0];
        let k = info_matrices(&zero(), beta, &fam).unwrap().k[(0, 0)];
        let v = noncentrality_contaminated(&zero(), &spec, beta, &fam).unwrap();
        assert!((v - eps * eps * u * u / k).abs() < 1e-12 * v);
    }

    #[test]
    fn composite_noncentrality_examples() {
        let sigma = 1.7;
        let theta = ParamVector::from_slice(&[0.0, sigma]);
        let zero_spec = ContaminationSpec::new(0.0, 0.0, DVector::zeros(2)).unwrap();
        assert_eq!(noncentrality_composite(&theta, &zero_spec, 0.5, &NormalFamily, &mu_zero()).unwrap(), 0.0);
        let spec = ContaminationSpec::new(0.0, 0.0, DVector::from_vec(vec![0.9, 5.0])).unwrap();
        let v = noncentrality_composite(&theta, &spec, 0.0, &NormalFamily, &mu_zero()).unwrap();
        assert!((v - 0.81 / (sigma * sigma)).abs() < 1e-12);

        let pin_all = Constraint::leading(&[0.0, sigma]).unwrap();
        let spec = ContaminationSpec::new(0.05, 2.0, DVector::from_vec(vec![0.4, -0.3])).unwrap();
        let a = noncentrality_composite(&theta, &spec, 0.3, &NormalFamily, &pin_all).unwrap();
        let b = noncentrality_contaminated(&theta, &spec, 0.3, &NormalFamily).unwrap();
        assert!((a - b).abs() < 1e-10 * b);
    }

    #[test]
    fn contiguous_power_examples() {
        assert_eq!(contiguous_power(1, 0.0, 0.05).unwrap(), 0.05);
        assert!((contiguous_power(1, 4.0, 0.05).unwrap() - 0.51599).abs() < 1e-4);
        let mut prev = 0.05;
        for i in 1..40 {
            let v = contiguous_power(2, i as f64 * 0.5, 0.05).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn pif_examples() {
        let fam = unit_mean();
        assert_eq!(pif_simple(2.0, &zero(), &d1(0.0), 0.5, &fam, 0.05).unwrap(), 0.0);
        assert_eq!(pif_simple(0.0, &zero(), &d1(1.0), 0.5, &fam, 0.05).unwrap(), 0.0);
        let theta = ParamVector::from_slice(&[0.0, 1.0]);
        let d = DVector::from_vec(vec![0.0, 0.0]);
        assert_eq!(pif_composite(2.0, &theta, &d, 0.5, &NormalFamily, &mu_zero(), 0.05).unwrap(), 0.0);
        let d = DVector::from_vec(vec![1.0, 0.5]);
        assert_eq!(pif_composite(0.0, &theta, &d, 0.5, &NormalFamily, &mu_zero(), 0.05).unwrap(), 0.0);
    }

    fn central_fd<G: Fn(f64) -> f64>(g: G, h: f64) -> f64 {
        (g(h) - g(-h)) / (2.0 * h)
    }

    #[test]
    fn pif_simple_matches_finite_difference() {
        let fam = unit_mean();
        let (beta, y, d) = (0.5, 2.0, 1.0);
        let power = |eps: f64| {
            // ε < 0 mirrors the drift; noncentrality is a square so this is the smooth extension.
            let shifted = d + eps * if_mdpde(y, &zero(), beta, &fam).unwrap()[0];
            let delta = noncentrality_simple(&zero(), &d1(shifted), beta, &fam).unwrap();
            contiguous_power(1, delta, 0.05).unwrap()
        };
        let fd = central_fd(power, 1e-4);
        let pif = pif_simple(y, &zero(), &d1(d), beta, &fam, 0.05).unwrap();
        assert!((fd - pif).abs() < 1e-3, "{fd} vs {pif}");
    }

    #[test]
    fn pif_composite_matches_finite_difference() {
        let theta = ParamVector::from_slice(&[0.0, 1.0]);
        let (beta, y) = (0.5, 2.0);
        let d = DVector::from_vec(vec![1.0, 0.3]);
        let inf = if_rmdpde(y, &theta, beta, &NormalFamily, &mu_zero()).unwrap();
        let power = |eps: f64| {
            let spec = ContaminationSpec::new(0.0, y, &d + eps * &inf).unwrap();
            let delta = noncentrality_composite(&theta, &spec, beta, &NormalFamily, &mu_zero()).unwrap();
            contiguous_power(1, delta, 0.05).unwrap()
        };
        let fd = central_fd(power, 1e-4);
        let pif = pif_composite(y, &theta, &d, beta, &NormalFamily, &mu_zero(), 0.05).unwrap();
        assert!((fd - pif).abs() < 1e-3, "{fd} vs {pif}");
    }

    #[test]
    fn lif_is_zero_and_level_slope_vanishes() {
        let fam = unit_mean();
        assert_eq!(lif_simple(3.0, &zero(), 0.5, &fam), 0.0);
        let theta = ParamVector::from_slice(&[0.0, 1.0]);
        assert_eq!(lif_composite(-2.0, &theta, 0.2, &NormalFamily, &mu_zero()), 0.0);
        let level = |eps: f64| {
            let spec = ContaminationSpec::new(eps, 2.0, d1(0.0)).unwrap();
            let delta = noncentrality_contaminated(&zero(), &spec, 0.5, &fam).unwrap();
            contiguous_power(1, delta, 0.05).unwrap()
        };
        let h = 1e-4;
        let slope = (level(h) - level(0.0)) / h;
        assert!(slope.abs() < 1e-3);
        let slope_small = (level(h / 10.0) - level(0.0)) / (h / 10.0);
        assert!(slope_small.abs() < slope.abs());
    }

    #[test]
    fn pif_is_linear_for_small_drift() {
        let fam = unit_mean();
        let (beta, y) = (0.5, 1.0);
        let cp0 = pif_series_cp(0.0, 1, chi2_quantile(0.05, 1).unwrap()).unwrap();
        let info = info_matrices(&zero(), beta, &fam).unwrap();
        let u = beta_score(y, &zero(), beta, &fam).unwrap()[0];
        let lin = info.j[(0, 0)] * u / info.k[(0, 0)];
        for &c in &[1e-2, 1e-3, 1e-4] {
            let v = pif_simple(y, &zero(), &d1(c), beta, &fam, 0.05).unwrap() / c;
            assert!((v - cp0 * lin).abs() < 10.0 * c, "c {c}: {v} vs {}", cp0 * lin);
        }
    }

    #[test]
    fn pif_unbounded_at_zero_bounded_otherwise() {
        let fam = unit_mean();
        let d = d1(1.0);
        let a = pif_simple(10.0, &zero(), &d, 0.0, &fam, 0.05).unwrap();
        let b = pif_simple(20.0, &zero(), &d, 0.0, &fam, 0.05).unwrap();
        assert!((b / a - 2.0).abs() < 1e-10);
        let far = pif_simple(50.0, &zero(), &d, 0.5, &fam, 0.05).unwrap();
        assert!(far.abs() < 1e-100);
    }
}
