//! TOML experiment configuration.
//!
//! ```toml
//! verb = "simulate"
//! seed = 7
//! replicates = 1000
//! p = 2.0
//! sites = [0, 1]
//!
//! [model]
//! kind = "constant-one"
//!
//! [truncation]
//! rule = "threshold"
//! eps = 1e-3
//! compensate = true
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use lpmax_core::field::threshold_for_cdf_bias;
use lpmax_core::{PIndex, PathSampler, Route, SiteSet, SpectralModel, Truncation};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    Simulate,
    Fidi,
    Ec,
    Bounds,
    CndCheck,
    Pmin,
    TransformCheck,
    Diagnose,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Simulate => "simulate",
            Verb::Fidi => "fidi",
            Verb::Ec => "ec",
            Verb::Bounds => "bounds",
            Verb::CndCheck => "cnd-check",
            Verb::Pmin => "pmin",
            Verb::TransformCheck => "transform-check",
            Verb::Diagnose => "diagnose",
        }
    }
}

/// Truncation as written in a config: a core [`Truncation`] or a CDF bias
/// target from which the threshold is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum TruncationConfig {
    Threshold {
        eps: f64,
        #[serde(default = "yes")]
        compensate: bool,
    },
    FixedCount {
        n: usize,
    },
    /// Largest compensated threshold whose CDF bias bound at arguments
    /// `≥ x_min` stays below `bias`.
    Auto {
        bias: f64,
        x_min: f64,
    },
}

fn yes() -> bool {
    true
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig::Threshold { eps: 1e-3, compensate: true }
    }
}

impl TruncationConfig {
    pub fn resolve<S: PathSampler>(&self, sampler: &S, p: PIndex) -> Result<Truncation> {
        Ok(match *self {
            TruncationConfig::Threshold { eps, compensate } => Truncation::Threshold { eps, compensate },
            TruncationConfig::FixedCount { n } => Truncation::FixedCount { n },
            TruncationConfig::Auto { .. } if p.is_infinite() => Truncation::threshold(1.0),
            TruncationConfig::Auto { bias, x_min } => {
                Truncation::threshold(threshold_for_cdf_bias(sampler, p.get(), x_min, bias)?)
            }
        })
    }
}

/// Where the stdf of `cnd-check` and `pmin` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum StdfSource {
    /// `(Σ xᵢ^r)^{1/r}` on the config's sites.
    Logistic { r: PIndex },
    Independence,
    /// The config's model as an ℓᵖ field with index `p` (not the tested
    /// exponent): closed form for weight tables, else a Monte Carlo path
    /// bank of `replicates` paths.
    Model { p: PIndex },
}

impl Default for StdfSource {
    fn default() -> Self {
        StdfSource::Independence
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Sup-norm CDF error for `fidi`.
    pub cdf: f64,
    /// Absolute error on `θ̂` for `ec`.
    pub ec: f64,
    /// Two-sample KS distance for `transform-check`.
    pub ks: f64,
    pub eig: f64,
    pub bisect: f64,
    /// `θ ≥ 2 - mixing` for the diagnostics verdicts.
    pub mixing: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cdf: 0.01,
            ec: 0.02,
            ks: 0.02,
            eig: lpmax_core::cnd::DEFAULT_EIG_TOL,
            bisect: lpmax_core::cnd::DEFAULT_BISECT_TOL,
            mixing: lpmax_core::diagnostics::DEFAULT_TOL,
        }
    }
}

/// Verb-specific inputs; unused fields are ignored by other verbs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// CDF arguments for `fidi`, CND points for `cnd-check`.
    pub points: Vec<Vec<f64>>,
    /// Site-label subsets for `ec`; all pairs when empty.
    pub subsets: Vec<Vec<i64>>,
    /// Site-label pairs for `bounds`; all pairs when empty.
    pub pairs: Vec<[i64; 2]>,
    pub stdf: StdfSource,
    pub battery_seed: u64,
    pub max_lag: i64,
    /// Stationarity shifts for `diagnose`; none skips the check.
    pub shifts: Vec<i64>,
    /// Poisson points kept on the ℓ^q side of `transform-check`, where the
    /// threshold rule has no error control.
    pub q_points: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            points: Vec::new(),
            subsets: Vec::new(),
            pairs: Vec::new(),
            stdf: StdfSource::default(),
            battery_seed: 0,
            max_lag: lpmax_core::diagnostics::DEFAULT_MAX_LAG,
            shifts: Vec::new(),
            q_points: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File stem; defaults to the verb name.
    pub stem: Option<String>,
    /// Also write the replicate matrix as column-major little-endian f64.
    pub binary: bool,
    /// For `simulate`, whether to write the replicate matrix at all.
    pub matrix: bool,
    pub plotdata: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("."), stem: None, binary: false, matrix: true, plotdata: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub verb: Verb,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Finite or `"inf"`; required by every verb except `pmin`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PIndex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Defaults to the single site 0; `diagnose` uses `0..=max_lag` instead.
    #[serde(default = "origin")]
    pub sites: SiteSet,
    #[serde(default)]
    pub route: Route,
    #[serde(default = "constant_one")]
    pub model: SpectralModel,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn origin() -> SiteSet {
    SiteSet::new(vec![0]).expect("one site")
}

fn constant_one() -> SpectralModel {
    SpectralModel::ConstantOne
}

fn default_replicates() -> usize {
    10_000
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// SHA-256 of the canonical TOML with output locations cleared, so the
    /// same experiment hashes alike wherever its files go.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }

    pub fn p(&self) -> Result<PIndex> {
        self.p.ok_or_else(|| CliError::Config(format!("verb {} needs p", self.verb.name())))
    }

    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.verb.name().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(CliError::Config("replicates must be at least 1".into()));
        }
        if self.verb != Verb::Pmin {
            self.p()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
verb = "simulate"
seed = 7
replicates = 1000
p = 2.0
sites = [0, 1]

[model]
kind = "constant-one"
"#;

    #[test]
    fn roundtrip_is_lossless() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        let mut d = c.clone();
        d.p = Some(PIndex::INFINITY);
        d.truncation = TruncationConfig::Auto { bias: 1e-3, x_min: 0.5 };
        d.check.stdf = StdfSource::Logistic { r: PIndex::new(2.0).unwrap() };
        assert_eq!(ExperimentConfig::from_toml(&d.to_toml()).unwrap(), d);
    }

    #[test]
    fn hash_ignores_output_location() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let mut d = c.clone();
        d.output.dir = PathBuf::from("/elsewhere");
        assert_eq!(c.hash(), d.hash());
        d.seed = 8;
        assert_ne!(c.hash(), d.hash());
    }

    #[test]
    fn rejects_unknown_keys_and_zero_replicates() {
        assert!(ExperimentConfig::from_toml(&format!("bogus = 1\n{SAMPLE}")).is_err());
        let mut c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        c.replicates = 0;
        assert!(c.validate().is_err());
    }
}
