//! Seedable Monte Carlo harness for level and power of the normal-mean tests.
//!
//! Each replication draws from its own ChaCha8 stream keyed by
//! `(seed, β-index, n-index)` with the replication index as stream id, so
//! results do not depend on scheduling or thread count.

use std::fmt;
use std::io::Write;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::erf::erfc_inv;

use crate::distributions::chi2_quantile;
use crate::error::{Error, Result};
use crate::model::Sample;
use crate::normal::{composite_mean_stat, simple_mean_stat};

/// Finite mixture of normal components.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    weights: Vec<f64>,
    components: Vec<(f64, f64)>,
}

impl MixtureSpec {
    pub fn new(weights: Vec<f64>, components: Vec<(f64, f64)>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::InvalidParameter(
                "mixture needs one weight per component and at least one component".into(),
            ));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("mixture weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}, not 1")));
        }
        if components.iter().any(|&(m, s)| !m.is_finite() || !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter("component means must be finite and sds positive".into()));
        }
        Ok(Self { weights, components })
    }

    /// A single `N(mean, sd)` component.
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![(mean, sd)])
    }

    /// `(1−ε) N(base) + ε N(outlier)`.
    pub fn contaminated(base: (f64, f64), outlier: (f64, f64), epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in [0, 1], got {epsilon}")));
        }
        if epsilon == 0.0 {
            return Self::normal(base.0, base.1);
        }
        Self::new(vec![1.0 - epsilon, epsilon], vec![base, outlier])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    /// Mass outside the first component.
    pub fn contamination_mass(&self) -> f64 {
        (1.0 - self.weights[0]).max(0.0)
    }

    fn pick(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        // Rounding in the cumulative sum; fall back to the last weighted component.
        self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }
}

/// Random stream for one replication of one `(β, n)` cell.
pub struct ReplicationStream(ChaCha8Rng);

impl ReplicationStream {
    pub fn new(seed: u64, beta_index: usize, n_index: usize, replication: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(beta_index as u64).to_le_bytes());
        key[16..24].copy_from_slice(&(n_index as u64).to_le_bytes());
        key[24..].copy_from_slice(b"dpd-rao\0");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(replication);
        Self(rng)
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by inverse CDF.
    pub fn standard_normal(&mut self) -> f64 {
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * self.uniform())
    }
}

/// `n` draws from the mixture; each observation consumes two uniforms
/// (component choice, then the normal variate).
pub fn sample_mixture(spec: &MixtureSpec, n: usize, stream: &mut ReplicationStream) -> Result<Sample> {
    let xs = (0..n)
        .map(|_| {
            let (m, s) = spec.components[spec.pick(stream.uniform())];
            m + s * stream.standard_normal()
        })
        .collect();
    Sample::new(xs)
}

/// Which statistic a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// `H₀: μ = μ₀` with σ₀ known.
    Simple,
    /// `H₀: μ = μ₀` with σ estimated under the null.
    Composite,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Simple => "simple",
            Scenario::Composite => "composite",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub betas: Vec<f64>,
    pub ns: Vec<usize>,
    pub replications: usize,
    pub alpha: f64,
    pub data_law: MixtureSpec,
    pub mu0: f64,
    /// Known scale for the simple scenario; ignored by the composite one.
    pub sigma0: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be >= 1".into()));
        }
        if self.betas.is_empty() || self.ns.is_empty() {
            return Err(Error::InvalidParameter("beta and n lists must be non-empty".into()));
        }
        if self.betas.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
            return Err(Error::Domain("tuning parameters must be finite and >= 0".into()));
        }
        let min_n = match self.scenario {
            Scenario::Simple => 1,
            Scenario::Composite => 2,
        };
        if self.ns.iter().any(|&n| n < min_n) {
            return Err(Error::InvalidParameter(format!(
                "sample sizes must be >= {min_n} for the {} scenario",
                self.scenario
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !self.mu0.is_finite() {
            return Err(Error::InvalidParameter("mu0 must be finite".into()));
        }
        if self.scenario == Scenario::Simple && (!(self.sigma0 > 0.0) || !self.sigma0.is_finite()) {
            return Err(Error::InvalidParameter("sigma0 must be positive".into()));
        }
        Ok(())
    }
}

/// One `(β, n)` cell of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub scenario: Scenario,
    pub beta: f64,
    pub n: usize,
    pub epsilon: f64,
    /// Rejections over successful replications.
    pub rate: f64,
    /// `√(rate(1−rate)/(R − failures))`.
    pub mc_se: f64,
    pub replications: usize,
    pub seed: u64,
    pub failures: usize,
    /// Replication indices whose statistic could not be computed.
    pub failed_replications: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ExperimentRow>,
}

pub const CSV_HEADER: &str = "scenario,beta,n,epsilon,rate,mc_se,R,seed,failures";

/// Statistic for one sample under the configured scenario.
pub fn replication_statistic(config: &ExperimentConfig, sample: &Sample, beta: f64) -> Result<f64> {
    match config.scenario {
        Scenario::Simple => simple_mean_stat(sample, config.mu0, config.sigma0, beta),
        Scenario::Composite => composite_mean_stat(sample, config.mu0, beta).map(|(stat, _)| stat),
    }
}

/// Runs every `(β, n)` cell, replications in parallel.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let threshold = chi2_quantile(config.alpha, 1)?;
    let epsilon = config.data_law.contamination_mass();
    let mut rows = Vec::with_capacity(config.betas.len() * config.ns.len());
    for (bi, &beta) in config.betas.iter().enumerate() {
        for (ni, &n) in config.ns.iter().enumerate() {
            let outcomes: Vec<Option<bool>> = (0..config.replications)
                .into_par_iter()
                .map(|j| {
                    let mut stream = ReplicationStream::new(config.seed, bi, ni, j as u64);
                    let sample = sample_mixture(&config.data_law, n, &mut stream).ok()?;
                    replication_statistic(config, &sample, beta).ok().map(|s| s > threshold)
                })
                .collect();
            let failed: Vec<usize> = outcomes
                .iter()
                .enumerate()
                .filter_map(|(j, o)| o.is_none().then_some(j))
                .collect();
            let rejections = outcomes.iter().filter(|o| **o == Some(true)).count();
            let effective = config.replications - failed.len();
            let (rate, mc_se) = if effective == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let r = rejections as f64 / effective as f64;
                (r, (r * (1.0 - r) / effective as f64).sqrt())
            };
            if !failed.is_empty() {
                log::warn!("beta {beta}, n {n}: {} of {} replications failed", failed.len(), config.replications);
            }
            rows.push(ExperimentRow {
                scenario: config.scenario,
                beta,
                n,
                epsilon,
                rate,
                mc_se,
                replications: config.replications,
                seed: config.seed,
                failures: failed.len(),
                failed_replications: failed,
            });
        }
    }
    Ok(ExperimentResult { rows })
}

/// `%g`-style formatting with six significant digits.
pub fn format_g6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // The exponent is taken after rounding to six digits, so 999999.7 counts as 1e6.
    let sci = format!("{v:.5e}");
    let (mant, e) = sci.split_once('e').expect("scientific format");
    let exp: i32 = e.parse().expect("exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mant), exp.abs())
    }
}

impl ExperimentResult {
    /// Writes the CSV table, one row per cell.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.scenario,
                format_g6(r.beta),
                r.n,
                format_g6(r.epsilon),
                format_g6(r.rate),
                format_g6(r.mc_se),
                r.replications,
                r.seed,
                r.failures
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn row(&self, beta: f64, n: usize) -> Option<&ExperimentRow> {
        self.rows.iter().find(|r| r.beta == beta && r.n == n)
    }
}
