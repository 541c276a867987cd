//! Small line-oriented text formats shared by sidecars, point maps and
//! ground-truth files.

use std::fmt::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One index per line; `None` (written as `-1`) marks a missing entry.
pub fn parse_index_lines(text: &str) -> Result<Vec<Option<usize>>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: i64 = t.parse().map_err(|_| Error::Parse(format!("line {}: expected an integer, got {t:?}", n + 1)))?;
        out.push(match v {
            -1 => None,
            v if v >= 0 => Some(v as usize),
            v => return Err(Error::Parse(format!("line {}: negative index {v}", n + 1))),
        });
    }
    Ok(out)
}

/// Writes `usize::MAX` entries as `-1`.
pub fn format_index_lines(values: &[usize]) -> String {
    let mut s = String::with_capacity(values.len() * 7);
    for &v in values {
        if v == usize::MAX {
            s.push_str("-1\n");
        } else {
            writeln!(s, "{v}").unwrap();
        }
    }
    s
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Whitespace-separated floats, one row per line.
pub fn parse_matrix_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split_whitespace()
            .map(|w| w.parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number {w:?}", n + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}
