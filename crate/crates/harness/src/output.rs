//! File output helpers. Every writer flushes per record so a partially
//! written CSV is still valid up to its last complete line.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{HarnessError, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    let text = serde_json::to_string_pretty(value).expect("serializable");
    writeln!(out, "{text}")
        .and_then(|_| out.flush())
        .map_err(|e| HarnessError::io(path, e))
}

/// Write through a closure and map any I/O failure to `path`.
pub fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut out = create(path)?;
    f(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| HarnessError::io(path, e))
}

/// Append-only CSV writer.
pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self> {
        let mut w = CsvWriter {
            path: path.to_path_buf(),
            out: create(path)?,
        };
        w.line(header)?;
        Ok(w)
    }

    pub fn line(&mut self, line: &str) -> Result<()> {
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|e| HarnessError::io(&self.path, e))
    }
}

/// Shortest round-trip decimal form; infinities as `inf` / `-inf`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Pack 0/1 bytes MSB first into hex text; the last byte is zero-padded.
pub fn bits_to_hex(bits: &[u8]) -> String {
    bits.chunks(8)
        .map(|c| {
            let byte = c
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i)));
            format!("{byte:02x}")
        })
        .collect()
}

/// Inverse of [`bits_to_hex`], keeping the first `n_bits` bits.
pub fn hex_to_bits(hex: &str, n_bits: usize) -> Option<Vec<u8>> {
    let hex = hex.trim();
    if !hex.len().is_multiple_of(2) || hex.len() * 4 < n_bits {
        return None;
    }
    let mut bits = Vec::with_capacity(hex.len() * 4);
    for i in (0..hex.len()).step_by(2) {
        let byte = u8::from_str_radix(hex.get(i..i + 2)?, 16).ok()?;
        bits.extend((0..8).map(|j| (byte >> (7 - j)) & 1));
    }
    bits.truncate(n_bits);
    Some(bits)
}
