//! Replicate-matrix and report files.
//!
//! CSV matrices start with a `# lpmax config_hash=<hex>` line, then a header
//! of site labels, then one row per replicate with every value printed to 17
//! significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lpmax_core::{SampleMatrix, SiteSet};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const HASH_PREFIX: &str = "# lpmax config_hash=";

/// `{:.16e}` round-trips every finite binary64 value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_csv(mat: &SampleMatrix, hash: &str) -> String {
    let mut s = String::with_capacity(mat.values().len() * 24 + 64);
    writeln!(s, "{HASH_PREFIX}{hash}").unwrap();
    let labels: Vec<String> = mat.sites().labels().iter().map(i64::to_string).collect();
    writeln!(s, "{}", labels.join(",")).unwrap();
    for row in mat.rows() {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(s, "{}", cells.join(",")).unwrap();
    }
    s
}

/// Parses [`matrix_csv`] output into its hash and matrix.
pub fn parse_matrix_csv(text: &str, path: &Path) -> Result<(String, SampleMatrix)> {
    let bad = |reason: String| CliError::Format { path: path.to_path_buf(), reason };
    let mut lines = text.lines();
    let hash = lines
        .next()
        .and_then(|l| l.strip_prefix(HASH_PREFIX))
        .ok_or_else(|| bad("missing config hash line".into()))?
        .to_string();
    let header = lines.next().ok_or_else(|| bad("missing header".into()))?;
    let labels = header
        .split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| bad(format!("site label {t:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let sites = SiteSet::new(labels)?;
    let mut values = Vec::new();
    for (k, line) in lines.enumerate() {
        let before = values.len();
        for t in line.split(',') {
            values.push(t.trim().parse::<f64>().map_err(|e| bad(format!("row {k}: {e}")))?);
        }
        if values.len() - before != sites.len() {
            return Err(bad(format!("row {k} has {} cells", values.len() - before)));
        }
    }
    Ok((hash, SampleMatrix::from_values(sites, values)?))
}

/// Column-major little-endian f64.
pub fn matrix_binary(mat: &SampleMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(mat.values().len() * 8);
    for i in 0..mat.n_sites() {
        for row in mat.rows() {
            out.extend_from_slice(&row[i].to_le_bytes());
        }
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the report's directory.
    pub path: PathBuf,
    pub sha256: String,
    /// Whether the first line is the config hash comment.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub hashed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 3,
        }
    }

    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// Metadata sidecar of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub software: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub status: Status,
    /// Verb-specific estimates, tolerances and pass flags.
    pub metrics: serde_json::Value,
    pub files: Vec<FileRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_replicates: Option<usize>,
    /// Only present with `--record-timing`, to keep reports deterministic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

/// Collects output files under one directory and records their digests.
pub struct OutputSet {
    dir: PathBuf,
    stem: String,
    hash: String,
    files: Vec<FileRecord>,
}

impl OutputSet {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let dir = config.output.dir.clone();
        fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
        Ok(Self { dir, stem: config.stem(), hash: config.hash(), files: Vec::new() })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn write(&mut self, suffix: &str, bytes: &[u8]) -> Result<PathBuf> {
        self.record(suffix, bytes, false)
    }

    fn record(&mut self, suffix: &str, bytes: &[u8], hashed: bool) -> Result<PathBuf> {
        let name = PathBuf::from(format!("{}{suffix}", self.stem));
        let path = self.dir.join(&name);
        fs::write(&path, bytes).map_err(CliError::io(&path))?;
        self.files.push(FileRecord { path: name, sha256: sha256_hex(bytes), hashed });
        Ok(path)
    }

    /// A CSV body behind the config hash line.
    pub fn write_csv(&mut self, suffix: &str, body: &str) -> Result<PathBuf> {
        let text = format!("{HASH_PREFIX}{}\n{body}", self.hash);
        self.record(suffix, text.as_bytes(), true)
    }

    pub fn write_matrix(&mut self, mat: &SampleMatrix, binary: bool) -> Result<()> {
        let csv = matrix_csv(mat, &self.hash);
        self.record(".csv", csv.as_bytes(), true)?;
        if binary {
            self.write(".f64le", &matrix_binary(mat))?;
        }
        Ok(())
    }

    pub fn report_path(&self) -> PathBuf {
        self.dir.join(format!("{}.json", self.stem))
    }

    pub fn finish(self, mut report: RunReport) -> Result<(PathBuf, RunReport)> {
        let path = self.report_path();
        report.files = self.files;
        let mut json = serde_json::to_string_pretty(&report).expect("reports serialize");
        json.push('\n');
        fs::write(&path, json).map_err(CliError::io(&path))?;
        Ok((path, report))
    }
}

/// Checks a report against a config: equal config hashes, every listed file
/// present with its recorded digest, and CSV hash lines matching.
pub fn verify(config: &ExperimentConfig, report_path: &Path) -> Result<()> {
    let text = fs::read_to_string(report_path).map_err(CliError::io(report_path))?;
    let report: RunReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Format { path: report_path.to_path_buf(), reason: e.to_string() })?;
    let hash = config.hash();
    if report.config_hash != hash {
        return Err(CliError::Verify(format!("config hash {hash} does not match report hash {}", report.config_hash)));
    }
    if report.config.hash() != hash {
        return Err(CliError::Verify("embedded config does not match its recorded hash".into()));
    }
    let base = report_path.parent().unwrap_or(Path::new("."));
    for f in &report.files {
        let path = base.join(&f.path);
        let bytes = fs::read(&path).map_err(CliError::io(&path))?;
        if sha256_hex(&bytes) != f.sha256 {
            return Err(CliError::Verify(format!("{} changed since the run", path.display())));
        }
        if f.hashed {
            let first = bytes.split(|b| *b == b'\n').next().unwrap_or_default();
            if first != format!("{HASH_PREFIX}{hash}").as_bytes() {
                return Err(CliError::Verify(format!("{} carries a different config hash", path.display())));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let sites = SiteSet::new(vec![-3, 0, 5]).unwrap();
        let vals = vec![0.1, 1.0 / 3.0, 123456.789, f64::MIN_POSITIVE, 1e300, 2.0f64.sqrt()];
        let mat = SampleMatrix::from_values(sites, vals).unwrap();
        let csv = matrix_csv(&mat, "abc");
        let (hash, back) = parse_matrix_csv(&csv, Path::new("x.csv")).unwrap();
        assert_eq!(hash, "abc");
        assert_eq!(back, mat);
        assert!(csv.lines().nth(1) == Some("-3,0,5"));
    }

    #[test]
    fn binary_is_column_major() {
        let mat = SampleMatrix::from_values(SiteSet::new(vec![0, 1]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = matrix_binary(&mat);
        let col: Vec<f64> = b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        assert_eq!(col, vec![1.0, 3.0, 2.0, 4.0]);
    }
}
