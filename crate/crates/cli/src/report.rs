//! Aggregates `result.json` bundles into one plot-ready CSV table.

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::CliError;
use crate::pipeline::read_json;

pub const HEADER: &str = "experiment,n,model,tv,concentration,logz_laplace,coverage_raw,coverage_cal";

/// Accepts result files or directories containing `result.json`.
pub fn resolve(inputs: &[PathBuf]) -> Vec<PathBuf> {
    inputs
        .iter()
        .map(|p| if p.is_dir() { p.join("result.json") } else { p.clone() })
        .collect()
}

fn num(v: Option<&Value>) -> String {
    v.and_then(Value::as_f64).map(|x| x.to_string()).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per run of every bundle, in input order. `concentration` is the
/// mass of the first configured ball.
pub fn report(paths: &[PathBuf]) -> Result<String, CliError> {
    let mut out = String::from(HEADER);
    out.push('\n');
    for path in paths {
        let bundle: Value = read_json(path)?;
        out.push_str(&rows(&bundle, path)?);
    }
    Ok(out)
}

fn rows(bundle: &Value, path: &Path) -> Result<String, CliError> {
    let bad = || CliError::Usage(format!("{} is not a result bundle", path.display()));
    let experiment = bundle.get("experiment").and_then(Value::as_str).ok_or_else(bad)?;
    let model = bundle.get("model").and_then(Value::as_str).unwrap_or("");
    let runs = bundle.get("runs").and_then(Value::as_array).ok_or_else(bad)?;
    let mut out = String::new();
    for run in runs {
        let fields = [
            quote(experiment),
            num(run.get("n")),
            quote(model),
            num(run.get("tv")),
            num(run.pointer("/concentration/0/mass")),
            num(run.pointer("/laplace/log_zhat")),
            num(run.pointer("/coverage_raw/coverage")),
            num(run.pointer("/coverage_calibrated/coverage")),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_with_missing_fields() {
        let v: Value = serde_json::from_str(
            r#"{"experiment":"e","model":"m,1","runs":[{"n":50,"tv":0.1,"laplace":{"log_zhat":-3.5},"concentration":[]}]}"#,
        )
        .unwrap();
        assert_eq!(rows(&v, Path::new("x")).unwrap(), "e,50,\"m,1\",0.1,,-3.5,,\n");
    }
}
