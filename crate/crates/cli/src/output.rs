//! Artifact writers. Every CSV starts with `# wavepath <version>` and
//! `# config: <json>` comment lines; JSON reports embed the same echo.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{Map, Value};
use wavepath::Complex64;

use crate::error::CliError;

pub const TOOL: &str = "wavepath";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip text, switching to exponent form outside `[1e-4, 1e15)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub struct OutputDir {
    dir: PathBuf,
    echo: String,
    files: Mutex<Vec<String>>,
}

impl OutputDir {
    pub fn create(dir: &Path, echo: &Value) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            echo: serde_json::to_string(echo)?,
            files: Mutex::new(Vec::new()),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn open(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.path(name);
        let f = File::create(&path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.files.lock().expect("file list").push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn io(&self, name: &str, source: std::io::Error) -> CliError {
        CliError::Io {
            path: self.path(name).display().to_string(),
            source,
        }
    }

    /// Writes the comment header and column row, returning the CSV writer.
    pub fn csv(&self, name: &str, columns: &[&str]) -> Result<csv::Writer<BufWriter<File>>, CliError> {
        let mut f = self.open(name)?;
        writeln!(f, "# {TOOL} {VERSION}").map_err(|e| self.io(name, e))?;
        writeln!(f, "# config: {}", self.echo).map_err(|e| self.io(name, e))?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(columns)?;
        Ok(w)
    }

    /// Pretty JSON with a trailing newline.
    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut f = self.open(name)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        writeln!(f).map_err(|e| self.io(name, e))?;
        f.flush().map_err(|e| self.io(name, e))
    }

    /// Little-endian dump: `u64` rows, `u64` columns, then `re, im` pairs as
    /// `f64` in row-major order.
    pub fn complex_matrix(&self, name: &str, m: &DMatrix<Complex64>) -> Result<(), CliError> {
        let mut f = self.open(name)?;
        let mut bytes = Vec::with_capacity(16 + 16 * m.len());
        bytes.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
        bytes.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                bytes.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                bytes.extend_from_slice(&m[(i, j)].im.to_le_bytes());
            }
        }
        f.write_all(&bytes).map_err(|e| self.io(name, e))?;
        f.flush().map_err(|e| self.io(name, e))
    }

    pub fn files(&self) -> Vec<String> {
        self.files.lock().expect("file list").clone()
    }
}

/// Reads a dump written by [`OutputDir::complex_matrix`].
pub fn read_complex_matrix(bytes: &[u8]) -> Option<DMatrix<Complex64>> {
    let word = |i: usize| -> Option<[u8; 8]> { bytes.get(i..i + 8)?.try_into().ok() };
    let rows = u64::from_le_bytes(word(0)?) as usize;
    let cols = u64::from_le_bytes(word(8)?) as usize;
    if bytes.len() != 16 + 16 * rows * cols {
        return None;
    }
    let at = |k: usize| f64::from_le_bytes(word(16 + 8 * k).expect("length checked"));
    Some(DMatrix::from_fn(rows, cols, |i, j| {
        let k = 2 * (i * cols + j);
        Complex64::new(at(k), at(k + 1))
    }))
}

/// One built-in oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: value <= threshold,
            value,
            threshold,
        }
    }
}

/// Wall-clock data; the only part of a report that changes between reruns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timestamp {
    pub unix_seconds: u64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub seed: u64,
    pub workers: usize,
    pub config: Value,
    #[serde(flatten)]
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub files: Vec<String>,
    pub timestamp: Timestamp,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.5, -2.25e-9, 3.0e20, 1e-4, 123456.789] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(1e-7), "1e-7");
    }

    #[test]
    fn matrix_dump_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::create(dir.path(), &Value::Null).unwrap();
        let m = DMatrix::from_fn(2, 3, |i, j| Complex64::new(i as f64 + 0.5, -(j as f64)));
        out.complex_matrix("m.bin", &m).unwrap();
        let bytes = std::fs::read(out.path("m.bin")).unwrap();
        assert_eq!(bytes.len(), 16 + 16 * 6);
        assert_eq!(&bytes[..8], &2u64.to_le_bytes());
        // Row-major: the second stored pair is entry (0, 1).
        assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 0.5);
        assert_eq!(f64::from_le_bytes(bytes[40..48].try_into().unwrap()), -1.0);
        assert_eq!(read_complex_matrix(&bytes).unwrap(), m);
    }
}
