//! Dataset manifests: one pair per line, `source target gt [pred]`.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::textio::read_text;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub source: PathBuf,
    pub target: PathBuf,
    pub ground_truth: PathBuf,
    /// Precomputed prediction; when absent the pair is matched.
    pub prediction: Option<PathBuf>,
}

impl ManifestEntry {
    /// `source-stem__target-stem`, unique enough for report rows.
    pub fn pair_id(&self) -> String {
        let stem = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        format!("{}__{}", stem(&self.source), stem(&self.target))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Relative paths are resolved against `base`. Blank lines and `#`
    /// comments are skipped.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = t.split_whitespace().collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(Error::Parse(format!(
                    "manifest line {}: expected `source target gt [pred]`, got {} fields",
                    n + 1,
                    fields.len()
                )));
            }
            let p = |s: &str| base.join(s);
            entries.push(ManifestEntry {
                source: p(fields[0]),
                target: p(fields[1]),
                ground_truth: p(fields[2]),
                prediction: fields.get(3).map(|s| p(s)),
            });
        }
        Ok(Manifest { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&read_text(path)?, base)
    }
}
