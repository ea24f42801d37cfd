//! CSV tables and JSON summaries.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const CSV_HEADER: &str = "# anilp-csv v1";

/// A rectangular table of pre-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut buf = Vec::new();
        writeln!(buf, "{CSV_HEADER}").expect("writing to memory");
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let fail = |e: csv::Error| CliError::Output {
                path: PathBuf::from("<memory>"),
                detail: e.to_string(),
            };
            w.write_record(&self.columns).map_err(fail)?;
            for row in &self.rows {
                w.write_record(row).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::Output {
                path: PathBuf::from("<memory>"),
                detail: e.to_string(),
            })?;
        }
        Ok(buf)
    }
}

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e15)`;
/// `inf`/`nan` spelled out.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Like [`num`], with an empty cell for `None`.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::Output {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.summary.json`.
pub fn write_outputs<S: Serialize>(
    dir: &Path,
    name: &str,
    table: &Table,
    summary: &S,
) -> CliResult<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output {
        path: dir.to_path_buf(),
        detail: e.to_string(),
    })?;
    let csv_path = dir.join(format!("{name}.csv"));
    let json_path = dir.join(format!("{name}.summary.json"));
    write_bytes(&csv_path, &table.to_csv()?)?;
    let mut json = serde_json::to_vec_pretty(summary).map_err(|e| CliError::Output {
        path: json_path.clone(),
        detail: e.to_string(),
    })?;
    json.push(b'\n');
    write_bytes(&json_path, &json)?;
    Ok((csv_path, json_path))
}

/// JSON cannot hold infinities; they are written as `null`.
pub fn finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_starts_with_version_line() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(0.1), opt(None)]);
        t.push(vec![num(f64::INFINITY), num(1.5e-300)]);
        t.push(vec![num(-2.0), num(0.0)]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "# anilp-csv v1\na,b\n0.1,\ninf,1.5e-300\n-2,0\n");
    }
}
