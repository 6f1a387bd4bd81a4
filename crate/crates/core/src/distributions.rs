//! Central and noncentral chi-square machinery.
//!
//! The noncentral survival function is evaluated as the Poisson mixture
//! `Σ_k c_k(δ) P(χ²_{df+2k} > x)` with `c_k(s) = s^k e^{-s/2} / (k! 2^k)`.
//! The same weights drive [`pif_series_cp`], the derivative factor that
//! appears in the power influence function.

use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::roots::{brent, RootTolerance};

/// Hard cap on the number of Poisson terms kept by the series.
pub const SERIES_CAP: usize = 10_000;

/// Remaining Poisson mass tolerated after truncation.
pub const SERIES_TAIL: f64 = 1e-12;

/// Chi-square law with `df` degrees of freedom and noncentrality `noncentrality`
/// (zero for the central distribution).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSqSpec {
    pub df: u32,
    pub noncentrality: f64,
}

impl ChiSqSpec {
    pub fn new(df: u32, noncentrality: f64) -> Result<Self> {
        if df < 1 {
            return Err(Error::Domain(format!("degrees of freedom must be >= 1, got {df}")));
        }
        if !(noncentrality >= 0.0) || !noncentrality.is_finite() {
            return Err(Error::Domain(format!(
                "noncentrality must be finite and >= 0, got {noncentrality}"
            )));
        }
        Ok(Self { df, noncentrality })
    }

    pub fn central(df: u32) -> Result<Self> {
        Self::new(df, 0.0)
    }

    pub fn is_central(&self) -> bool {
        self.noncentrality == 0.0
    }
}

fn check_df(df: u32) -> Result<()> {
    if df < 1 {
        Err(Error::Domain(format!("degrees of freedom must be >= 1, got {df}")))
    } else {
        Ok(())
    }
}

fn check_x(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        Err(Error::Domain(format!("chi-square argument must be >= 0, got {x}")))
    } else {
        Ok(())
    }
}

/// `P(χ²_df > x)` via the regularized upper incomplete gamma function.
pub fn chi2_survival(x: f64, df: u32) -> Result<f64> {
    check_df(df)?;
    check_x(x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_ur(0.5 * df as f64, 0.5 * x).clamp(0.0, 1.0))
}

/// Upper-tail quantile: the `t` with `P(χ²_df > t) = alpha`.
pub fn chi2_quantile(alpha: f64, df: u32) -> Result<f64> {
    check_df(df)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let k = df as f64;
    let lo = 1e-12;
    let mut hi = k + 20.0 * k.sqrt() + 200.0;
    let g = |t: f64| gamma_ur(0.5 * k, 0.5 * t) - alpha;
    if g(lo) < 0.0 {
        // alpha is closer to 1 than the survival at the lower edge; the
        // quantile sits inside (0, lo).
        return brent(g, 0.0, lo, RootTolerance::default());
    }
    let mut expansions = 0;
    while g(hi) > 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::NoBracket(format!("chi-square quantile for alpha {alpha:e}")));
        }
    }
    brent(
        g,
        lo,
        hi,
        RootTolerance {
            abs_f: 1e-10 * alpha.min(1e-2),
            ..RootTolerance::default()
        },
    )
}

/// Poisson weight `c_k(s) = s^k e^{-s/2} / (k! 2^k)`; underflows to zero.
pub fn poisson_weight_ck(s: f64, k: u32) -> f64 {
    if s == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let lambda = 0.5 * s;
    let kf = k as f64;
    (kf * lambda.ln() - ln_gamma(kf + 1.0) - lambda).exp()
}

/// Poisson weights `c_0(s), …, c_K(s)` with `K` the first index past the mode
/// for which the tail bound `c_{K+1} / (1 - λ/(K+2))` drops below
/// [`SERIES_TAIL`].
pub fn poisson_weights(s: f64) -> Result<Vec<f64>> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("noncentrality must be finite and >= 0, got {s}")));
    }
    let lambda = 0.5 * s;
    let mut weights = Vec::new();
    for k in 0..=SERIES_CAP {
        let ck = poisson_weight_ck(s, k as u32);
        weights.push(ck);
        let next = k as f64 + 2.0;
        if next > lambda {
            let c_next = poisson_weight_ck(s, k as u32 + 1);
            let tail = c_next / (1.0 - lambda / next);
            if tail < SERIES_TAIL {
                return Ok(weights);
            }
        }
    }
    let mass: f64 = weights.iter().sum();
    Err(Error::TruncationCap {
        cap: SERIES_CAP,
        remaining: (1.0 - mass).max(0.0),
    })
}

/// Survival values `P(χ²_{df+2k} > x)` for `k = 0..len`, built by the upward
/// recurrence `Q(a+1, y) = Q(a, y) + y^a e^{-y} / Γ(a+1)`.
fn shifted_survivals(x: f64, df: u32, len: usize) -> Vec<f64> {
    let y = 0.5 * x;
    let mut a = 0.5 * df as f64;
    let mut q = if x == 0.0 { 1.0 } else { gamma_ur(a, y) };
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(q.min(1.0));
        if y > 0.0 {
            q += (a * y.ln() - y - ln_gamma(a + 1.0)).exp();
        }
        a += 1.0;
    }
    out
}

/// `P(χ²_df(δ) > x)` through the Poisson-mixture series.
pub fn noncentral_chi2_survival(x: f64, spec: ChiSqSpec) -> Result<f64> {
    check_df(spec.df)?;
    check_x(x)?;
    if spec.is_central() {
        return chi2_survival(x, spec.df);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let weights = poisson_weights(spec.noncentrality)?;
    let tails = shifted_survivals(x, spec.df, weights.len());
    let total: f64 = weights.iter().zip(&tails).map(|(c, p)| c * p).sum();
    Ok(total.clamp(0.0, 1.0))
}

/// The power-influence factor
/// `C_df(s) = e^{-s/2} Σ_k s^{k-1} (2k - s) / (k! 2^k) · P(χ²_{df+2k} > threshold)`.
///
/// The `k = 0` term is taken as its limit `-P(χ²_df > threshold)`. The series
/// is evaluated through the identity `s^{k-1}(2k-s) e^{-s/2}/(k!2^k) =
/// c_{k-1}(s) - c_k(s)`, which is finite at `s = 0`.
pub fn pif_series_cp(s: f64, df: u32, threshold: f64) -> Result<f64> {
    check_df(df)?;
    if !(threshold >= 0.0) {
        return Err(Error::Domain(format!("threshold must be >= 0, got {threshold}")));
    }
    let weights = poisson_weights(s)?;
    let tails = shifted_survivals(threshold, df, weights.len() + 1);
    let mut total = -weights[0] * tails[0];
    for k in 1..=weights.len() {
        let prev = weights[k - 1];
        let cur = weights.get(k).copied().unwrap_or(0.0);
        total += (prev - cur) * tails[k];
    }
    Ok(total)
}
