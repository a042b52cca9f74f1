//! Deterministic report emission.
//!
//! Every artifact this crate writes must be byte-stable: the same
//! config and seed produce identical files regardless of worker count,
//! scheduling, or how often the run is repeated. Three rules enforce
//! that here:
//!
//! * floats are printed in scientific notation with 17 significant
//!   digits, enough to round-trip any binary64 value exactly;
//! * JSON keys come out in struct declaration order (serde derive) and
//!   map-like data lives in sorted containers;
//! * wall-clock timings go to a separate timing file that is excluded
//!   from the byte-identity contract.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        source: io::Error,
    },
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// serde_json formatter printing every f64 with 17 significant digits.
struct SciFloat17 {
    indent: usize,
    has_value: bool,
}

impl SciFloat17 {
    fn new() -> Self {
        SciFloat17 {
            indent: 0,
            has_value: false,
        }
    }

    fn newline<W: ?Sized + io::Write>(&self, writer: &mut W) -> io::Result<()> {
        writer.write_all(b"\n")?;
        for _ in 0..self.indent {
            writer.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl serde_json::ser::Formatter for SciFloat17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", format_float(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        writer.write_all(b"[")
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(writer)?;
        }
        writer.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        if !first {
            writer.write_all(b",")?;
        }
        self.newline(writer)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, _writer: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        writer.write_all(b"{")
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(writer)?;
        }
        writer.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        if !first {
            writer.write_all(b",")?;
        }
        self.newline(writer)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        writer.write_all(b": ")
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, _writer: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }
}

/// A binary64 value at 17 significant digits: the round-trip-exact
/// fixed-width form every report uses.
pub fn format_float(value: f64) -> String {
    if value.is_nan() {
        return "null".to_string();
    }
    if value.is_infinite() {
        // JSON has no infinities; the sign survives in a string-free
        // sentinel magnitude no real statistic reaches.
        return if value > 0.0 {
            "1e999".to_string()
        } else {
            "-1e999".to_string()
        };
    }
    format!("{value:.16e}")
}

/// Serialize to JSON with deterministic layout and float formatting.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, ReportError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFloat17::new());
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Write a JSON artifact under the output directory.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, ReportError> {
    let bytes = to_json_bytes(value)?;
    write_bytes(dir, name, &bytes)
}

pub fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Incremental CSV writer with a fixed header and float policy.
pub struct CsvBuilder {
    out: String,
    columns: usize,
}

impl CsvBuilder {
    pub fn new(header: &[&str]) -> Self {
        CsvBuilder {
            out: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    /// One row; cells are already formatted.
    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "ragged CSV row");
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.out.into_bytes()
    }
}

/// Cell helpers so every CSV formats values identically.
pub fn cell_f64(v: f64) -> String {
    format_float(v)
}

pub fn cell_u64(v: u64) -> String {
    v.to_string()
}

pub fn cell_usize(v: usize) -> String {
    v.to_string()
}

pub fn cell_opt_u64(v: Option<u64>) -> String {
    match v {
        Some(v) => v.to_string(),
        None => String::new(),
    }
}
