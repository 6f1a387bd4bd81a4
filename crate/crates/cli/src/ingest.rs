use std::fmt::Write as _;
use std::path::Path;

use dpd_rao::normal::telephone_sample;
use dpd_rao::Sample;

use crate::CliError;

/// Name of the embedded telephone-line faults dataset.
pub const TELEPHONE: &str = "telephone";

/// Loads a sample from the embedded dataset name or from a file path.
pub fn ingest(source: &str) -> Result<Sample, CliError> {
    if source == TELEPHONE {
        return Ok(telephone_sample());
    }
    let text = std::fs::read_to_string(Path::new(source))
        .map_err(|e| CliError::Data(format!("cannot read {source}: {e}")))?;
    parse_sample(&text)
}

/// Parses whitespace, newline or comma separated decimals.
///
/// Errors name the 1-based line and the 1-based position of the offending
/// token in the whole input.
pub fn parse_sample(text: &str) -> Result<Sample, CliError> {
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        for token in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let position = values.len() + 1;
            let bad = |why: &str| {
                CliError::Data(format!("line {}, token {position}: {why} '{token}'", line_no + 1))
            };
            let v: f64 = token.parse().map_err(|_| bad("not a number"))?;
            if !v.is_finite() {
                return Err(bad("non-finite value"));
            }
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(CliError::Data("input contains no observations".into()));
    }
    Sample::new(values).map_err(|e| CliError::Data(e.to_string()))
}

/// One observation per line in shortest round-trip form.
pub fn format_sample(sample: &Sample) -> String {
    let mut out = String::new();
    for v in sample.as_slice() {
        writeln!(out, "{v}").expect("writing to a String cannot fail");
    }
    out
}

pub fn write_sample(sample: &Sample, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, format_sample(sample)).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}
