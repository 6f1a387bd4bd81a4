use std::io::Write;
use std::path::Path;

use dpd_rao::distributions::chi2_quantile;
use dpd_rao::estimation::Constraint;
use dpd_rao::normal::{NormalFamily, NormalMeanFamily};
use dpd_rao::rao::{rao_composite, rao_simple, CompositeOptions, TestReport};
use dpd_rao::robustness::{if2_composite, if2_simple, pif_composite, pif_simple};
use dpd_rao::simulation::{run_experiment, ExperimentConfig, MixtureSpec, Scenario};
use dpd_rao::{ParamVector, Sample};
use nalgebra::DVector;
use serde_json::{json, Value};

use crate::parse::{parse_grid, parse_mixture, parse_n_list};
use crate::{ingest, Cli, CliError, Command, Format, Kind, NullArgs, OutputArgs, Target};

fn check_beta(beta: f64) -> Result<f64, CliError> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(beta)
    } else {
        Err(CliError::Usage(format!("beta must be finite and >= 0, got {beta}")))
    }
}

fn check_alpha(alpha: f64) -> Result<f64, CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(CliError::Usage(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_scale(sigma0: f64) -> Result<f64, CliError> {
    if sigma0.is_finite() && sigma0 > 0.0 {
        Ok(sigma0)
    } else {
        Err(CliError::Usage(format!("sigma0 must be finite and > 0, got {sigma0}")))
    }
}

fn check_mean(mu0: f64) -> Result<f64, CliError> {
    if mu0.is_finite() {
        Ok(mu0)
    } else {
        Err(CliError::Usage("mu0 must be finite".into()))
    }
}

fn betas(spec: &str) -> Result<Vec<f64>, CliError> {
    parse_grid(spec, "--beta-grid")?.into_iter().map(check_beta).collect()
}

/// A prepared test: the kind, its null and the data.
struct Setup {
    kind: Kind,
    sample: Sample,
    mu0: f64,
    sigma0: Option<f64>,
}

impl Setup {
    fn new(kind: Kind, data: &str, null: &NullArgs) -> Result<Self, CliError> {
        let mu0 = check_mean(null.mu0)?;
        let sigma0 = match (kind, null.sigma0) {
            (Kind::Simple, None) => return Err(CliError::Usage("the simple test needs --sigma0".into())),
            (_, s) => s.map(check_scale).transpose()?,
        };
        let sample = ingest(data)?;
        if kind == Kind::Composite && sample.len() < 2 {
            return Err(CliError::Data("the composite test needs at least two observations".into()));
        }
        Ok(Self { kind, sample, mu0, sigma0 })
    }

    fn run(&self, beta: f64, alpha: f64) -> Result<TestReport, CliError> {
        Ok(match self.kind {
            Kind::Simple => {
                let family = NormalMeanFamily::new(self.sigma0.expect("checked in new"))?;
                rao_simple(&self.sample, &ParamVector::scalar(self.mu0), beta, &family, alpha)?
            }
            Kind::Composite => {
                let constraint = Constraint::leading(&[self.mu0])?;
                rao_composite(&self.sample, beta, &NormalFamily, &constraint, alpha, &CompositeOptions::default())?
            }
        })
    }
}

fn report_csv(r: &TestReport) -> String {
    let estimator = r
        .estimator
        .as_ref()
        .map(|e| e.iter().map(f64::to_string).collect::<Vec<_>>().join(";"))
        .unwrap_or_default();
    format!(
        "statistic,df,p_value,alpha,reject,beta,estimator\n{},{},{},{},{},{},{}\n",
        r.statistic, r.df, r.p_value, r.alpha, r.reject, r.beta, estimator
    )
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialise");
    s.push('\n');
    s
}

fn cmd_test(kind: Kind, data: &str, null: &NullArgs, beta: f64, alpha: f64, format: Format) -> Result<String, CliError> {
    let (beta, alpha) = (check_beta(beta)?, check_alpha(alpha)?);
    let report = Setup::new(kind, data, null)?.run(beta, alpha)?;
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(&report).expect("reports always serialise") + "\n",
        Format::Csv => report_csv(&report),
    })
}

fn cmd_sweep(kind: Kind, data: &str, null: &NullArgs, grid: &str, alpha: f64, format: Format) -> Result<String, CliError> {
    let alpha = check_alpha(alpha)?;
    let grid = betas(grid)?;
    let setup = Setup::new(kind, data, null)?;
    let threshold = chi2_quantile(alpha, 1)?;
    let composite = kind == Kind::Composite;
    let mut rows = Vec::with_capacity(grid.len());
    for beta in grid {
        let r = setup.run(beta, alpha)?;
        let sigma_tilde = r.estimator.as_ref().map(|e| e[1]);
        rows.push((beta, r.statistic, r.reject, sigma_tilde));
    }
    Ok(match format {
        Format::Csv => {
            let mut out = String::from(if composite {
                "beta,statistic,threshold,reject,sigma_tilde\n"
            } else {
                "beta,statistic,threshold,reject\n"
            });
            for (beta, stat, reject, st) in &rows {
                out.push_str(&format!("{beta},{stat},{threshold},{reject}"));
                if let Some(st) = st {
                    out.push_str(&format!(",{st}"));
                }
                out.push('\n');
            }
            out
        }
        Format::Json => json_text(&Value::Array(
            rows.iter()
                .map(|(beta, stat, reject, st)| {
                    let mut v = json!({"beta": beta, "statistic": stat, "threshold": threshold, "reject": reject});
                    if let Some(st) = st {
                        v["sigma_tilde"] = json!(st);
                    }
                    v
                })
                .collect(),
        )),
    })
}

fn default_law(target: Target, epsilon: f64) -> Result<MixtureSpec, CliError> {
    let (base, outlier) = match target {
        Target::Level => ((0.0, 1.0), (-4.5, 1.0)),
        Target::Power => ((-0.5, 1.0), (5.0, 1.0)),
    };
    MixtureSpec::contaminated(base, outlier, epsilon).map_err(|e| CliError::Usage(format!("--epsilon: {e}")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    target: Target,
    scenario: Kind,
    grid: &str,
    n_list: &str,
    reps: usize,
    seed: u64,
    epsilon: Option<f64>,
    mixture: Option<&str>,
    mu0: f64,
    sigma0: f64,
    alpha: f64,
    format: Format,
) -> Result<String, CliError> {
    if reps == 0 {
        return Err(CliError::Usage("--reps must be >= 1".into()));
    }
    let scenario = match scenario {
        Kind::Simple => Scenario::Simple,
        Kind::Composite => Scenario::Composite,
    };
    let ns = parse_n_list(n_list)?;
    if scenario == Scenario::Composite && ns.iter().any(|&n| n < 2) {
        return Err(CliError::Usage("the composite scenario needs sample sizes >= 2".into()));
    }
    let data_law = match mixture {
        Some(spec) => parse_mixture(spec)?,
        None => default_law(target, epsilon.unwrap_or(0.0))?,
    };
    let config = ExperimentConfig {
        scenario,
        betas: betas(grid)?,
        ns,
        replications: reps,
        alpha: check_alpha(alpha)?,
        data_law,
        mu0: check_mean(mu0)?,
        sigma0: check_scale(sigma0)?,
        seed,
    };
    let result = run_experiment(&config)?;
    Ok(match format {
        Format::Csv => result.to_csv(),
        Format::Json => json_text(&Value::Array(
            result
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "scenario": r.scenario.to_string(),
                        "beta": r.beta,
                        "n": r.n,
                        "epsilon": r.epsilon,
                        "rate": r.rate,
                        "mc_se": r.mc_se,
                        "R": r.replications,
                        "seed": r.seed,
                        "failures": r.failures,
                    })
                })
                .collect(),
        )),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_influence(
    kind: Kind,
    mu0: f64,
    sigma0: f64,
    beta: f64,
    alpha: f64,
    y_grid: &str,
    d: &str,
    format: Format,
) -> Result<String, CliError> {
    let (mu0, sigma0) = (check_mean(mu0)?, check_scale(sigma0)?);
    let (beta, alpha) = (check_beta(beta)?, check_alpha(alpha)?);
    let ys = parse_grid(y_grid, "--y-grid")?;
    let mut drift = parse_grid(d, "--d")?;
    let rows: Vec<(f64, f64, f64)> = match kind {
        Kind::Simple => {
            if drift.len() != 1 {
                return Err(CliError::Usage("--d takes one value for the simple model".into()));
            }
            let family = NormalMeanFamily::new(sigma0)?;
            let theta = ParamVector::scalar(mu0);
            let d = DVector::from_vec(drift);
            ys.iter()
                .map(|&y| Ok((y, if2_simple(y, &theta, beta, &family)?, pif_simple(y, &theta, &d, beta, &family, alpha)?)))
                .collect::<Result<_, dpd_rao::Error>>()?
        }
        Kind::Composite => {
            match drift.len() {
                1 => drift.push(0.0),
                2 => {}
                _ => return Err(CliError::Usage("--d takes one or two values for the composite model".into())),
            }
            let theta = ParamVector::from_slice(&[mu0, sigma0]);
            let constraint = Constraint::leading(&[mu0])?;
            let d = DVector::from_vec(drift);
            ys.iter()
                .map(|&y| {
                    Ok((
                        y,
                        if2_composite(y, &theta, beta, &NormalFamily, &constraint)?,
                        pif_composite(y, &theta, &d, beta, &NormalFamily, &constraint, alpha)?,
                    ))
                })
                .collect::<Result<_, dpd_rao::Error>>()?
        }
    };
    Ok(match format {
        Format::Csv => {
            let mut out = String::from("y,if2,pif\n");
            for (y, if2, pif) in rows {
                out.push_str(&format!("{y},{if2},{pif}\n"));
            }
            out
        }
        Format::Json => json_text(&Value::Array(
            rows.iter().map(|(y, if2, pif)| json!({"y": y, "if2": if2, "pif": pif})).collect(),
        )),
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Data(format!("cannot write to stdout: {e}"))),
    }
}

/// Runs the parsed command and writes its output.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let (text, output): (String, &OutputArgs) = match &cli.command {
        Command::Test { kind, data, null, beta, alpha, output } => {
            (cmd_test(*kind, data, null, *beta, *alpha, output.format.unwrap_or(Format::Json))?, output)
        }
        Command::Sweep { kind, data, null, beta_grid, alpha, output } => {
            (cmd_sweep(*kind, data, null, beta_grid, *alpha, output.format.unwrap_or(Format::Csv))?, output)
        }
        Command::Simulate {
            target,
            scenario,
            beta_grid,
            n_list,
            reps,
            seed,
            epsilon,
            mixture,
            mu0,
            sigma0,
            alpha,
            output,
        } => (
            cmd_simulate(
                *target,
                *scenario,
                beta_grid,
                n_list,
                *reps,
                *seed,
                *epsilon,
                mixture.as_deref(),
                *mu0,
                *sigma0,
                *alpha,
                output.format.unwrap_or(Format::Csv),
            )?,
            output,
        ),
        Command::Influence { kind, mu0, sigma0, beta, alpha, y_grid, d, output } => (
            cmd_influence(*kind, *mu0, *sigma0, *beta, *alpha, y_grid, d, output.format.unwrap_or(Format::Csv))?,
            output,
        ),
    };
    emit(&text, output.out.as_deref())
}
