//! Laws of the spectral function `W` with `E W(s) = 1`.
//!
//! A [`SpectralModel`] is a serializable descriptor. Binding it to a
//! [`SiteSet`] validates it there and precomputes whatever path sampling
//! needs (weight tables, Cholesky factors), giving a [`BoundModel`].

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::rng::RngStream;
use crate::sites::SiteSet;
use crate::stats::{Estimate, MeanVar};

/// Tolerance on `Σₗ wₗ(s) = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// One atom of a discrete weight model: `w(s)` for the listed sites, zero
/// elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightAtom {
    pub sites: Vec<i64>,
    pub values: Vec<f64>,
}

/// Stationary covariance of a Gaussian process on ℤ as a function of lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Covariance {
    /// `σ² exp(-|h|/range)`.
    Exponential { variance: f64, range: f64 },
    /// `σ² exp(-(h/range)²)`.
    Gaussian { variance: f64, range: f64 },
    /// `C(h) = values[|h|]`, zero beyond the table.
    Table { values: Vec<f64> },
}

impl Covariance {
    pub fn at_lag(&self, lag: i64) -> f64 {
        let h = lag.unsigned_abs() as f64;
        match self {
            Covariance::Exponential { variance, range } => variance * (-h / range).exp(),
            Covariance::Gaussian { variance, range } => variance * (-(h / range).powi(2)).exp(),
            Covariance::Table { values } => values.get(lag.unsigned_abs() as usize).copied().unwrap_or(0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Covariance::Exponential { variance, range } | Covariance::Gaussian { variance, range } => {
                if !(*variance >= 0.0 && variance.is_finite()) || !(*range > 0.0) {
                    bail!(ModelValidation, "covariance needs variance ≥ 0 and range > 0");
                }
            }
            Covariance::Table { values } => {
                if values.is_empty() || !(values[0] >= 0.0) || values.iter().any(|v| !v.is_finite()) {
                    bail!(ModelValidation, "covariance table needs a finite C(0) ≥ 0");
                }
            }
        }
        Ok(())
    }
}

/// Descriptor of the law of `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectralModel {
    /// `W ≡ 1`. At finite `p` this is the multivariate logistic field.
    ConstantOne,
    /// `W = L·w_J` with `J` uniform on the `L` atoms; `Σₗ wₗ(s) = 1`.
    DiscreteWeights { atoms: Vec<WeightAtom> },
    /// `W(s) = exp(G(s) - Var G(s)/2)` for a stationary Gaussian `G` on ℤ.
    LogGaussian { covariance: Covariance },
    /// Discrete weights from Gaussian bumps at `centers`, renormalized so
    /// the weights sum to one at every site.
    GaussianKernel { centers: Vec<f64>, bandwidth: f64 },
}

impl SpectralModel {
    /// Boxcar windows of `width` consecutive sites, one starting at every
    /// integer, covering each site of `from..=to` exactly `width` times.
    /// Sites further apart than `width - 1` never share an atom.
    pub fn moving_window(width: usize, from: i64, to: i64) -> Self {
        let w = width.max(1) as i64;
        let atoms = (from - w + 1..=to)
            .map(|start| WeightAtom {
                sites: (start..start + w).collect(),
                values: vec![1.0 / w as f64; w as usize],
            })
            .collect();
        SpectralModel::DiscreteWeights { atoms }
    }

    /// Gaussian kernel with a center at every integer of `from..=to` padded
    /// by six bandwidths on either side; shift-invariant away from the edges.
    pub fn periodic_gaussian_kernel(bandwidth: f64, from: i64, to: i64) -> Self {
        let pad = (6.0 * bandwidth).ceil() as i64;
        let centers = (from - pad..=to + pad).map(|c| c as f64).collect();
        SpectralModel::GaussianKernel { centers, bandwidth }
    }

    /// Whether `W` is almost surely bounded, which gates exact `p = ∞`
    /// simulation.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, SpectralModel::LogGaussian { .. })
    }

    /// Whether the stable tail dependence function has a closed form.
    pub fn has_closed_stdf(&self) -> bool {
        !matches!(self, SpectralModel::LogGaussian { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SpectralModel::ConstantOne => "constant-one",
            SpectralModel::DiscreteWeights { .. } => "discrete-weights",
            SpectralModel::LogGaussian { .. } => "log-gaussian",
            SpectralModel::GaussianKernel { .. } => "gaussian-kernel",
        }
    }

    pub fn bind(&self, sites: &SiteSet) -> Result<BoundModel> {
        let law = match self {
            SpectralModel::ConstantOne => BoundLaw::Constant,
            SpectralModel::DiscreteWeights { atoms } => BoundLaw::Discrete(WeightTable::from_atoms(atoms, sites)?),
            SpectralModel::GaussianKernel { centers, bandwidth } => {
                BoundLaw::Discrete(WeightTable::gaussian_kernel(centers, *bandwidth, sites)?)
            }
            SpectralModel::LogGaussian { covariance } => BoundLaw::log_gaussian(covariance, sites)?,
        };
        Ok(BoundModel { sites: sites.clone(), law })
    }
}

/// Dense table `w[l][i]` of discrete weights on a site set.
///
/// Atoms vanishing on every site are dropped, so `L` counts the atoms
/// active on the set. Dropping them leaves every finite-dimensional law of
/// the field unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct WeightTable {
    n_sites: usize,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTable {
    n_sites: usize,
    weights: Vec<f64>,
}

impl TryFrom<RawTable> for WeightTable {
    type Error = crate::Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        if raw.n_sites == 0 || raw.weights.len() % raw.n_sites != 0 {
            bail!(ModelValidation, "weights do not fill rows of {} sites", raw.n_sites);
        }
        let rows: Vec<Vec<f64>> = raw.weights.chunks_exact(raw.n_sites).map(<[f64]>::to_vec).collect();
        Self::from_rows(&rows, raw.n_sites)
    }
}

impl WeightTable {
    /// Builds and validates a table from rows `weights[l][i]`.
    pub fn from_rows(rows: &[Vec<f64>], n_sites: usize) -> Result<Self> {
        let mut weights = Vec::with_capacity(rows.len() * n_sites);
        for (l, row) in rows.iter().enumerate() {
            if row.len() != n_sites {
                bail!(ModelValidation, "atom {l} has {} weights for {n_sites} sites", row.len());
            }
            if row.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                bail!(ModelValidation, "atom {l} has a negative or non-finite weight");
            }
            if row.iter().any(|&w| w > 0.0) {
                weights.extend_from_slice(row);
            }
        }
        let table = Self { n_sites, weights };
        table.check_sums()?;
        Ok(table)
    }

    pub(crate) fn from_rows_unchecked(rows: &[Vec<f64>], n_sites: usize) -> Self {
        Self { n_sites, weights: rows.concat() }
    }

    /// Dense table of sparse atoms on `sites`, validated.
    pub fn from_atoms(atoms: &[WeightAtom], sites: &SiteSet) -> Result<Self> {
        if atoms.is_empty() {
            bail!(ModelValidation, "discrete weights need at least one atom");
        }
        let rows = atoms
            .iter()
            .enumerate()
            .map(|(l, atom)| {
                if atom.sites.len() != atom.values.len() {
                    bail!(ModelValidation, "atom {l}: {} sites but {} values", atom.sites.len(), atom.values.len());
                }
                let mut row = vec![0.0; sites.len()];
                let mut seen = vec![false; sites.len()];
                for (&s, &v) in atom.sites.iter().zip(&atom.values) {
                    if let Some(i) = sites.index_of(s) {
                        if seen[i] {
                            bail!(ModelValidation, "atom {l} lists site {s} twice");
                        }
                        seen[i] = true;
                        row[i] = v;
                    }
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows, sites.len())
    }

    fn gaussian_kernel(centers: &[f64], bandwidth: f64, sites: &SiteSet) -> Result<Self> {
        if centers.is_empty() {
            bail!(ModelValidation, "gaussian kernel needs at least one center");
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            bail!(ModelValidation, "bandwidth must be positive, got {bandwidth}");
        }
        let n = sites.len();
        let mut rows = vec![vec![0.0; n]; centers.len()];
        for (i, &s) in sites.labels().iter().enumerate() {
            let log_k: Vec<f64> = centers
                .iter()
                .map(|c| {
                    let z = (s as f64 - c) / bandwidth;
                    -0.5 * z * z
                })
                .collect();
            let top = log_k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = log_k.iter().map(|lk| (lk - top).exp()).sum();
            for (row, lk) in rows.iter_mut().zip(&log_k) {
                row[i] = (lk - top).exp() / total;
            }
        }
        Self::from_rows(&rows, n)
    }

    fn check_sums(&self) -> Result<()> {
        for i in 0..self.n_sites {
            let total: f64 = (0..self.atoms()).map(|l| self.weight(l, i)).sum();
            if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                bail!(ModelValidation, "weights at site index {i} sum to {total}, not 1");
            }
        }
        Ok(())
    }

    /// Number of active atoms `L`.
    pub fn atoms(&self) -> usize {
        self.weights.len() / self.n_sites.max(1)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn weight(&self, atom: usize, site: usize) -> f64 {
        self.weights[atom * self.n_sites + site]
    }

    pub fn row(&self, atom: usize) -> &[f64] {
        &self.weights[atom * self.n_sites..(atom + 1) * self.n_sites]
    }

    /// `E max{W(sᵢ), W(sⱼ)} = Σₗ max{wₗ(sᵢ), wₗ(sⱼ)}`, by enumerating atoms.
    pub fn mean_max(&self, i: usize, j: usize) -> f64 {
        (0..self.atoms()).map(|l| self.weight(l, i).max(self.weight(l, j))).sum()
    }

    /// `E W(sᵢ)^k = L^{k-1} Σₗ wₗ(sᵢ)^k`.
    pub fn moment(&self, i: usize, k: f64) -> f64 {
        let l = self.atoms() as f64;
        (0..self.atoms()).map(|a| (l * self.weight(a, i)).powf(k)).sum::<f64>() / l
    }

    /// `L · max wₗ(s)`.
    pub fn bound(&self) -> f64 {
        self.atoms() as f64 * self.weights.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
enum BoundLaw {
    Constant,
    Discrete(WeightTable),
    LogGaussian { factor: Vec<f64>, variance: Vec<f64> },
}

impl BoundLaw {
    fn log_gaussian(cov: &Covariance, sites: &SiteSet) -> Result<Self> {
        cov.validate()?;
        let labels = sites.labels();
        let n = labels.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| cov.at_lag(labels[i] - labels[j]));
        let variance: Vec<f64> = (0..n).map(|i| matrix[(i, i)]).collect();
        // Tiny diagonal jitter keeps perfectly correlated sites factorizable.
        let scale = variance.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let jittered = &matrix + DMatrix::identity(n, n) * (1e-12 * scale);
        let chol = match jittered.cholesky() {
            Some(c) => c,
            None => bail!(ModelValidation, "covariance is not positive definite on the sites"),
        };
        let l = chol.l();
        let mut factor = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                factor[i * n + j] = l[(i, j)];
            }
        }
        Ok(BoundLaw::LogGaussian { factor, variance })
    }
}

/// Something that produces i.i.d. nonnegative paths on a site set.
pub trait PathSampler {
    fn sites(&self) -> &SiteSet;

    /// Writes one path into `out` (length = number of sites).
    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]);

    /// Almost-sure bound on every coordinate, when one exists.
    fn bound(&self) -> Option<f64> {
        None
    }

    /// `E W(sᵢ)^order`, or `None` when infinite or unknown.
    fn moment(&self, _site: usize, _order: f64) -> Option<f64> {
        None
    }

    fn len(&self) -> usize {
        self.sites().len()
    }
}

impl<S: PathSampler + ?Sized> PathSampler for &S {
    fn sites(&self) -> &SiteSet {
        (**self).sites()
    }
    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        (**self).sample_into(rng, out)
    }
    fn bound(&self) -> Option<f64> {
        (**self).bound()
    }
    fn moment(&self, site: usize, order: f64) -> Option<f64> {
        (**self).moment(site, order)
    }
}

/// A [`SpectralModel`] validated on a [`SiteSet`].
#[derive(Debug, Clone)]
pub struct BoundModel {
    sites: SiteSet,
    law: BoundLaw,
}

impl BoundModel {
    /// The weight table of discrete models.
    pub fn weights(&self) -> Option<&WeightTable> {
        match &self.law {
            BoundLaw::Discrete(t) => Some(t),
            _ => None,
        }
    }

    /// Weight table for the Reich–Shaby construction; `W ≡ 1` is the
    /// single atom `w ≡ 1`.
    pub fn as_weight_table(&self) -> Option<WeightTable> {
        match &self.law {
            BoundLaw::Constant => Some(WeightTable { n_sites: self.sites.len(), weights: vec![1.0; self.sites.len()] }),
            BoundLaw::Discrete(t) => Some(t.clone()),
            BoundLaw::LogGaussian { .. } => None,
        }
    }

    pub fn sample(&self, stream: RngStream) -> Vec<f64> {
        let mut out = vec![0.0; self.sites.len()];
        self.sample_into(&mut stream.rng(), &mut out);
        out
    }
}

impl PathSampler for BoundModel {
    fn sites(&self) -> &SiteSet {
        &self.sites
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.law {
            BoundLaw::Constant => out.fill(1.0),
            BoundLaw::Discrete(table) => {
                let l = table.atoms();
                let j = rng.random_range(0..l);
                for (o, w) in out.iter_mut().zip(table.row(j)) {
                    *o = l as f64 * w;
                }
            }
            BoundLaw::LogGaussian { factor, variance } => {
                let n = variance.len();
                let mut z = [0.0f64; 64];
                let mut heap;
                let z: &mut [f64] = if n <= 64 {
                    &mut z[..n]
                } else {
                    heap = vec![0.0; n];
                    &mut heap
                };
                for zi in z.iter_mut() {
                    *zi = StandardNormal.sample(rng);
                }
                for i in 0..n {
                    let g: f64 = (0..=i).map(|j| factor[i * n + j] * z[j]).sum();
                    out[i] = (g - 0.5 * variance[i]).exp();
                }
            }
        }
    }

    fn bound(&self) -> Option<f64> {
        match &self.law {
            BoundLaw::Constant => Some(1.0),
            BoundLaw::Discrete(t) => Some(t.bound()),
            BoundLaw::LogGaussian { .. } => None,
        }
    }

    fn moment(&self, site: usize, order: f64) -> Option<f64> {
        let m = match &self.law {
            BoundLaw::Constant => 1.0,
            BoundLaw::Discrete(t) => t.moment(site, order),
            BoundLaw::LogGaussian { variance, .. } => (0.5 * order * (order - 1.0) * variance[site]).exp(),
        };
        m.is_finite().then_some(m)
    }
}

/// One path of `model` on `sites`.
pub fn sample_path(model: &SpectralModel, sites: &SiteSet, stream: RngStream) -> Result<Vec<f64>> {
    Ok(model.bind(sites)?.sample(stream))
}

/// Monte Carlo estimate of `E max{W(sᵢ), W(sⱼ)}` from `m` paths; path `k`
/// uses stream `(seed, k)`.
pub fn mean_max_pair<S: PathSampler>(sampler: &S, i: usize, j: usize, m: usize, seed: u64) -> Result<Estimate> {
    Ok(mean_max_pairs(sampler, &[(i, j)], m, seed)?[0])
}

/// Like [`mean_max_pair`] for several pairs, from one shared set of paths.
pub fn mean_max_pairs<S: PathSampler>(sampler: &S, pairs: &[(usize, usize)], m: usize, seed: u64) -> Result<Vec<Estimate>> {
    if m == 0 {
        bail!(Domain, "need at least one replicate");
    }
    let n = sampler.len();
    if pairs.iter().any(|&(i, j)| i >= n || j >= n) {
        bail!(Domain, "site index out of range for {n} sites");
    }
    let mut path = vec![0.0; n];
    let mut acc = vec![MeanVar::new(); pairs.len()];
    for k in 0..m as u64 {
        sampler.sample_into(&mut RngStream::new(seed, k).rng(), &mut path);
        for (a, &(i, j)) in acc.iter_mut().zip(pairs) {
            a.push(path[i].max(path[j]));
        }
    }
    Ok(acc.iter().map(MeanVar::estimate).collect())
}
