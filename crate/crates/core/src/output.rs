//! CSV and JSON emitters for field data.
//!
//! Every numeric file opens with a header naming the lattice parameters and
//! the validity range the values live on, so downstream plots never guess at
//! edge garbage. CSV cells use Rust's shortest round-trip float formatting;
//! identical runs produce byte-identical files. Masked values print as `nan`
//! in CSV and `null` in JSON.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Key/value pairs for the header line ("# k=v k=v ...") or JSON meta object.
pub type Meta<'a> = &'a [(&'a str, String)];

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

/// A table cell.
#[derive(Clone, Debug)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_f64(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => serde_json::Number::from_f64(*v)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            Cell::Text(s) => json!(s),
        }
    }
}

/// A named table: the unit all run modes emit.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Table {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, dir: &Path, meta: Meta) -> Result<PathBuf, OutputError> {
        let path = dir.join(format!("{}.csv", self.name));
        let io_err = |source| OutputError::Io {
            path: path.clone(),
            source,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io_err)?);
        let header: Vec<String> = meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(out, "# {}", header.join(" ")).map_err(io_err)?;
        writeln!(out, "{}", self.columns.join(",")).map_err(io_err)?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(out, "{}", cells.join(",")).map_err(io_err)?;
        }
        out.flush().map_err(io_err)?;
        Ok(path)
    }

    pub fn write_json(&self, dir: &Path, meta: Meta) -> Result<PathBuf, OutputError> {
        let path = dir.join(format!("{}.json", self.name));
        let io_err = |source| OutputError::Io {
            path: path.clone(),
            source,
        };
        let meta_obj: serde_json::Map<String, Value> = meta
            .iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| Value::Array(row.iter().map(Cell::json).collect()))
            .collect();
        let doc = json!({
            "meta": Value::Object(meta_obj),
            "columns": self.columns,
            "rows": rows,
        });
        let mut out = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io_err)?);
        serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| OutputError::Io {
            path: path.clone(),
            source: std::io::Error::other(e),
        })?;
        writeln!(out).map_err(io_err)?;
        out.flush().map_err(io_err)?;
        Ok(path)
    }

    pub fn write(
        &self,
        format: crate::config::OutputFormat,
        dir: &Path,
        meta: Meta,
    ) -> Result<PathBuf, OutputError> {
        match format {
            crate::config::OutputFormat::Csv => self.write_csv(dir, meta),
            crate::config::OutputFormat::Json => self.write_json(dir, meta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_meta_header_and_nan_cells() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("demo", &["j", "value"]);
        t.push(vec![Cell::Int(0), Cell::Float(0.5)]);
        t.push(vec![Cell::Int(1), Cell::Float(f64::NAN)]);
        let path = t
            .write_csv(dir.path(), &[("P", "8".into()), ("valid_j", "0..3".into())])
            .unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("# P=8 valid_j=0..3\n"));
        assert!(text.contains("j,value"));
        assert!(text.contains("1,nan"));
    }

    #[test]
    fn json_masks_nan_as_null() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("demo", &["v"]);
        t.push(vec![Cell::Float(f64::NAN)]);
        let path = t.write_json(dir.path(), &[]).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["rows"][0][0], serde_json::Value::Null);
    }
}
