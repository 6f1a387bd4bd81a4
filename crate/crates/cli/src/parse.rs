use dpd_rao::simulation::MixtureSpec;

use crate::CliError;

const MAX_GRID_POINTS: usize = 1_000_000;

fn number(token: &str, what: &str) -> Result<f64, CliError> {
    let v: f64 = token
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{what}: cannot parse '{token}'")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{what}: non-finite value '{token}'")))
    }
}

/// `start:stop:step` (inclusive, step > 0) or a comma list.
///
/// Range points are rounded to 12 decimals so that `0:1:0.1` yields `0.3`
/// rather than `0.30000000000000004`.
pub fn parse_grid(spec: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (number(start, what)?, number(stop, what)?, number(step, what)?);
            if !(h > 0.0) || b < a {
                return Err(CliError::Usage(format!("{what}: need step > 0 and stop >= start in '{spec}'")));
            }
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            if count > MAX_GRID_POINTS {
                return Err(CliError::Usage(format!("{what}: '{spec}' has more than {MAX_GRID_POINTS} points")));
            }
            Ok((0..count).map(|i| ((a + i as f64 * h) * 1e12).round() / 1e12).collect())
        }
        [list] => list.split(',').map(|t| number(t, what)).collect(),
        _ => Err(CliError::Usage(format!("{what}: expected start:stop:step or a comma list, got '{spec}'"))),
    }
}

pub fn parse_n_list(spec: &str) -> Result<Vec<usize>, CliError> {
    parse_grid(spec, "--n-list")?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(CliError::Usage(format!("--n-list: sample sizes must be positive integers, got {v}")))
            }
        })
        .collect()
}

/// `m1,s1,w1;m2,s2,w2;...`
pub fn parse_mixture(spec: &str) -> Result<MixtureSpec, CliError> {
    let mut weights = Vec::new();
    let mut components = Vec::new();
    for part in spec.split(';').filter(|p| !p.trim().is_empty()) {
        let fields: Vec<&str> = part.split(',').collect();
        let [m, s, w] = fields.as_slice() else {
            return Err(CliError::Usage(format!("--mixture: component '{part}' is not m,s,w")));
        };
        components.push((number(m, "--mixture")?, number(s, "--mixture")?));
        weights.push(number(w, "--mixture")?);
    }
    MixtureSpec::new(weights, components).map_err(|e| CliError::Usage(format!("--mixture: {e}")))
}
