//! Number formatting and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use hilfer_core::fracops::GridFunction;
use serde_json::Value;

use crate::CliError;

/// `v` rounded to 15 significant digits.
pub fn round15(v: f64) -> f64 {
    if v.is_finite() {
        format!("{v:.14e}").parse().expect("formatted float parses")
    } else {
        v
    }
}

/// JSON number at 15 significant digits; `null` for NaN and infinities.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::from(round15(v))
    } else {
        Value::Null
    }
}

pub fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

pub fn nums(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|v| num(*v)).collect())
}

/// Writes `bytes` to a temporary file next to `path` and renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn json_bytes(doc: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("JSON values serialize");
    out.push(b'\n');
    out
}

/// `t,x,y` table of a solution.
pub fn solution_csv(x: &GridFunction, y: &GridFunction) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Internal(format!("csv: {e}"));
    w.write_record(["t", "x", "y"]).map_err(err)?;
    for ((t, xv), yv) in x.nodes().zip(x.values()).zip(y.values()) {
        let row = [t, *xv, *yv].map(|v| round15(v).to_string());
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Internal(format!("csv: {e}")))
}
