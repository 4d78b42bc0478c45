//! Field simulators: the ℓᵖ representation with Poisson truncation, the
//! exact Reich–Shaby construction and the `p = ∞` spectral representation.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::models::{BoundModel, PathSampler, SpectralModel, WeightTable};
use crate::pindex::PIndex;
use crate::rng::RngStream;
use crate::samplers::{Frechet, PoissonArrivals, PositiveStable};
use crate::sites::SiteSet;
use crate::special::lp_normalizer;

/// How the Poisson series of the ℓᵖ representation is cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Truncation {
    /// Keep the points `Aᵢ ≥ eps`. With `compensate`, the expected omitted
    /// mass `E W^p · eps^{p-1}/(p-1)` is added back to every site's p-sum.
    /// Needs `E W^p < ∞`.
    Threshold { eps: f64, compensate: bool },
    /// Keep the `n` largest points. No error control.
    FixedCount { n: usize },
}

impl Truncation {
    pub fn threshold(eps: f64) -> Self {
        Truncation::Threshold { eps, compensate: true }
    }

    pub fn eps(&self) -> Option<f64> {
        match *self {
            Truncation::Threshold { eps, .. } => Some(eps),
            Truncation::FixedCount { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Truncation::Threshold { eps, .. } if !(eps > 0.0) => bail!(Domain, "truncation eps must be positive, got {eps}"),
            Truncation::FixedCount { n: 0 } => bail!(Domain, "fixed point count must be at least 1"),
            _ => Ok(()),
        }
    }
}

/// Error bookkeeping of a truncated ℓᵖ simulation.
///
/// The points below `eps` form a Poisson process independent of the kept
/// ones, so the omitted p-sum `R(s)` at site `s` has mean
/// `E W(s)^p eps^{p-1}/(p-1)` and variance `E W(s)^{2p} eps^{2p-1}/(2p-1)`.
/// Conditionally on the p-sums, the joint CDF is `exp(-Σᵢ Sᵢ/(Γ xᵢ)^p)`,
/// and `|e^{-a} - e^{-b}| ≤ |a - b|` turns these into a bound on the joint
/// CDF error at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub truncation: Truncation,
    pub p: f64,
    pub normalizer: f64,
    pub tail_mean: Option<Vec<f64>>,
    pub tail_sd: Option<Vec<f64>>,
}

impl TruncationReport {
    /// Bound on `|P_trunc(X ≤ x) - P(X ≤ x)|`, when available.
    pub fn cdf_bias_bound(&self, x: &[f64]) -> Option<f64> {
        let per_site = match self.truncation {
            Truncation::Threshold { compensate: true, .. } => self.tail_sd.as_ref()?,
            Truncation::Threshold { compensate: false, .. } => self.tail_mean.as_ref()?,
            Truncation::FixedCount { .. } => return None,
        };
        Some(
            per_site
                .iter()
                .zip(x)
                .map(|(t, &xi)| t / (self.normalizer * xi).powf(self.p))
                .sum::<f64>()
                .min(1.0),
        )
    }
}

/// Threshold `eps` whose compensated truncation keeps the joint CDF error
/// below `target` at every `x` with all coordinates `≥ x_min`.
pub fn threshold_for_cdf_bias<S: PathSampler>(sampler: &S, p: f64, x_min: f64, target: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        bail!(Domain, "p must be finite and > 1");
    }
    if !(x_min > 0.0 && target > 0.0) {
        bail!(Domain, "x_min and target must be positive");
    }
    let mut k = 0.0;
    for i in 0..sampler.len() {
        match sampler.moment(i, 2.0 * p) {
            Some(m) => k += (m / (2.0 * p - 1.0)).sqrt(),
            None => bail!(Refused, "E W^(2p) is not finite; error control unavailable"),
        }
    }
    let c = (lp_normalizer(p) * x_min).powf(p);
    Ok((target * c / k).powf(1.0 / (p - 0.5)).min(1.0))
}

/// Something that simulates whole fields on a site set.
pub trait FieldSimulator {
    fn sites(&self) -> &SiteSet;

    /// One field into `out`; `scratch` is reusable working memory.
    fn simulate_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], scratch: &mut Vec<f64>);

    fn simulate(&self, stream: RngStream) -> Vec<f64> {
        let mut out = vec![0.0; self.sites().len()];
        self.simulate_into(&mut stream.rng(), &mut out, &mut Vec::new());
        out
    }
}

/// ℓᵖ representation `X(s) = U(s)/Γ(1-1/p) · ‖A ∘ W(s)‖_p` with a
/// truncated Poisson series.
#[derive(Debug, Clone)]
pub struct LpSimulator<S> {
    sampler: S,
    p: f64,
    noise: Frechet,
    truncation: Truncation,
    compensation: Vec<f64>,
    report: TruncationReport,
}

impl<S: PathSampler> LpSimulator<S> {
    pub fn new(sampler: S, p: f64, truncation: Truncation) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            bail!(Domain, "the ℓᵖ simulator needs finite p > 1, got {p}; use the p = ∞ simulator");
        }
        truncation.validate()?;
        let n = sampler.len();
        let mut compensation = vec![0.0; n];
        let (tail_mean, tail_sd) = match truncation {
            Truncation::Threshold { eps, compensate } => {
                let mut mean = Vec::with_capacity(n);
                for i in 0..n {
                    match sampler.moment(i, p) {
                        Some(m) => mean.push(m * eps.powf(p - 1.0) / (p - 1.0)),
                        None => bail!(
                            Refused,
                            "E W^p is infinite (or unknown) for this spectral function, so the \
                             threshold rule has no error control; force a fixed point count instead"
                        ),
                    }
                }
                let sd: Option<Vec<f64>> = (0..n)
                    .map(|i| sampler.moment(i, 2.0 * p).map(|m| (m * eps.powf(2.0 * p - 1.0) / (2.0 * p - 1.0)).sqrt()))
                    .collect();
                if compensate {
                    compensation.copy_from_slice(&mean);
                }
                (Some(mean), sd)
            }
            Truncation::FixedCount { .. } => (None, None),
        };
        let report = TruncationReport { truncation, p, normalizer: lp_normalizer(p), tail_mean, tail_sd };
        Ok(Self { sampler, p, noise: Frechet::new(p)?, truncation, compensation, report })
    }

    pub fn report(&self) -> &TruncationReport {
        &self.report
    }

    pub fn sampler(&self) -> &S {
        &self.sampler
    }
}

impl<S: PathSampler> FieldSimulator for LpSimulator<S> {
    fn sites(&self) -> &SiteSet {
        self.sampler.sites()
    }

    fn simulate_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], scratch: &mut Vec<f64>) {
        let n = out.len();
        scratch.clear();
        scratch.resize(2 * n, 0.0);
        let (path, psum) = scratch.split_at_mut(n);
        let p = self.p;
        // Noise first: refining the truncation then reuses the same noise
        // and the same leading points.
        for u in out.iter_mut() {
            *u = self.noise.sample(rng);
        }
        let mut arrivals = PoissonArrivals::new(&mut *rng);
        let mut kept = 0usize;
        loop {
            if let Truncation::FixedCount { n: cap } = self.truncation {
                if kept == cap {
                    break;
                }
            }
            let a = arrivals.next_point();
            if let Truncation::Threshold { eps, .. } = self.truncation {
                if a < eps {
                    break;
                }
            }
            kept += 1;
            self.sampler.sample_into(arrivals.rng(), path);
            for (acc, w) in psum.iter_mut().zip(path.iter()) {
                *acc += (a * w).powf(p);
            }
        }
        let norm = self.report.normalizer;
        for ((x, s), comp) in out.iter_mut().zip(psum.iter()).zip(&self.compensation) {
            *x = *x / norm * (s + comp).powf(1.0 / p);
        }
    }
}

/// Exact Reich–Shaby field `X(s) = U(s) [Σₗ Bₗ wₗ(s)^p]^{1/p}` with i.i.d.
/// positive (1/p)-stable `Bₗ`.
#[derive(Debug, Clone)]
pub struct ReichShaby {
    sites: SiteSet,
    powered: WeightTable,
    p: f64,
    stable: PositiveStable,
    noise: Frechet,
}

impl ReichShaby {
    pub fn new(sites: SiteSet, weights: &WeightTable, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            bail!(Domain, "Reich–Shaby needs finite p > 1, got {p}; use the p = ∞ simulator");
        }
        if weights.n_sites() != sites.len() {
            bail!(ModelValidation, "weight table does not match the site set");
        }
        let rows: Vec<Vec<f64>> = (0..weights.atoms()).map(|l| weights.row(l).to_vec()).collect();
        // Re-validates the sums, then raise to the p-th power.
        let table = WeightTable::from_rows(&rows, sites.len())?;
        let powered_rows: Vec<Vec<f64>> = (0..table.atoms())
            .map(|l| table.row(l).iter().map(|w| w.powf(p)).collect())
            .collect();
        let powered = WeightTable::from_rows_unchecked(&powered_rows, sites.len());
        Ok(Self { sites, powered, p, stable: PositiveStable::new(1.0 / p)?, noise: Frechet::new(p)? })
    }
}

impl FieldSimulator for ReichShaby {
    fn sites(&self) -> &SiteSet {
        &self.sites
    }

    fn simulate_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], _scratch: &mut Vec<f64>) {
        out.fill(0.0);
        for l in 0..self.powered.atoms() {
            let b: f64 = self.stable.sample(rng);
            for (x, wp) in out.iter_mut().zip(self.powered.row(l)) {
                *x += b * wp;
            }
        }
        for x in out.iter_mut() {
            let u: f64 = self.noise.sample(rng);
            *x = u * x.powf(1.0 / self.p);
        }
    }
}

/// `X(s) = maxᵢ Aᵢ Vᵢ(s)`, accumulated over decreasing Poisson points.
#[derive(Debug, Clone)]
pub struct MaxSimulator<S> {
    sampler: S,
    stop: MaxStop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum MaxStop {
    /// Stop once `Aᵢ·C` is below every running maximum: exact.
    Exact { bound: f64 },
    /// Stop once `Aᵢ < eps·min running maximum`: truncated.
    Relative { eps: f64 },
}

impl<S: PathSampler> MaxSimulator<S> {
    /// Exact simulation; needs an almost-sure bound on the paths.
    pub fn exact(sampler: S) -> Result<Self> {
        match sampler.bound() {
            Some(c) if c.is_finite() && c > 0.0 => Ok(Self { sampler, stop: MaxStop::Exact { bound: c } }),
            _ => bail!(
                Refused,
                "exact p = ∞ simulation needs a bounded spectral function; this one is unbounded"
            ),
        }
    }

    /// Truncated simulation for unbounded paths: points with
    /// `Aᵢ < eps · minₛ X_running(s)` are dropped.
    pub fn truncated(sampler: S, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            bail!(Domain, "relative threshold must lie in (0, 1), got {eps}");
        }
        Ok(Self { sampler, stop: MaxStop::Relative { eps } })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.stop, MaxStop::Exact { .. })
    }
}

impl<S: PathSampler> FieldSimulator for MaxSimulator<S> {
    fn sites(&self) -> &SiteSet {
        self.sampler.sites()
    }

    fn simulate_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.clear();
        scratch.resize(out.len(), 0.0);
        out.fill(0.0);
        let mut arrivals = PoissonArrivals::new(rng);
        loop {
            let a = arrivals.next_point();
            let lowest = out.iter().copied().fold(f64::INFINITY, f64::min);
            if lowest > 0.0 {
                let done = match self.stop {
                    MaxStop::Exact { bound } => a * bound < lowest,
                    MaxStop::Relative { eps } => a < eps * lowest,
                };
                if done {
                    break;
                }
            }
            self.sampler.sample_into(arrivals.rng(), scratch);
            for (x, v) in out.iter_mut().zip(scratch.iter()) {
                *x = x.max(a * v);
            }
        }
    }
}

/// Simulator selection for a [`SpectralModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Exact where possible: Reich–Shaby for discrete weights at finite
    /// `p`, the exact max simulator at `p = ∞`, truncated ℓᵖ otherwise.
    #[default]
    Auto,
    Lp,
    ReichShaby,
    SpectralInf,
}

/// A ready-to-run simulator for a model bound to sites.
#[derive(Debug, Clone)]
pub enum FieldJob {
    Lp(LpSimulator<BoundModel>),
    ReichShaby(ReichShaby),
    SpectralInf(MaxSimulator<BoundModel>),
}

impl FieldJob {
    pub fn new(model: &SpectralModel, sites: &SiteSet, p: PIndex, route: Route, truncation: Truncation) -> Result<Self> {
        let bound = model.bind(sites)?;
        if p.is_infinite() {
            return match route {
                Route::ReichShaby => bail!(Domain, "Reich–Shaby needs finite p; route p = ∞ to the spectral simulator"),
                _ => Ok(FieldJob::SpectralInf(MaxSimulator::exact(bound)?)),
            };
        }
        let p = p.get();
        match route {
            Route::SpectralInf => bail!(Domain, "the p = ∞ simulator cannot run at finite p = {p}"),
            Route::Lp => Ok(FieldJob::Lp(LpSimulator::new(bound, p, truncation)?)),
            Route::ReichShaby => match bound.as_weight_table() {
                Some(t) => Ok(FieldJob::ReichShaby(ReichShaby::new(sites.clone(), &t, p)?)),
                None => bail!(ModelValidation, "Reich–Shaby needs discrete weights, got {}", model.name()),
            },
            Route::Auto => match bound.as_weight_table() {
                Some(t) => Ok(FieldJob::ReichShaby(ReichShaby::new(sites.clone(), &t, p)?)),
                None => Ok(FieldJob::Lp(LpSimulator::new(bound, p, truncation)?)),
            },
        }
    }

    pub fn route(&self) -> Route {
        match self {
            FieldJob::Lp(_) => Route::Lp,
            FieldJob::ReichShaby(_) => Route::ReichShaby,
            FieldJob::SpectralInf(_) => Route::SpectralInf,
        }
    }

    pub fn truncation_report(&self) -> Option<&TruncationReport> {
        match self {
            FieldJob::Lp(sim) => Some(sim.report()),
            _ => None,
        }
    }
}

impl FieldSimulator for FieldJob {
    fn sites(&self) -> &SiteSet {
        match self {
            FieldJob::Lp(s) => s.sites(),
            FieldJob::ReichShaby(s) => s.sites(),
            FieldJob::SpectralInf(s) => s.sites(),
        }
    }

    fn simulate_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], scratch: &mut Vec<f64>) {
        match self {
            FieldJob::Lp(s) => s.simulate_into(rng, out, scratch),
            FieldJob::ReichShaby(s) => s.simulate_into(rng, out, scratch),
            FieldJob::SpectralInf(s) => s.simulate_into(rng, out, scratch),
        }
    }
}

/// One realization with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub values: Vec<f64>,
    pub p: PIndex,
    pub model: SpectralModel,
    pub trunc_eps: Option<f64>,
    pub stream: RngStream,
}

fn sample_with(job: &FieldJob, model: &SpectralModel, p: PIndex, trunc_eps: Option<f64>, stream: RngStream) -> FieldSample {
    FieldSample { values: job.simulate(stream), p, model: model.clone(), trunc_eps, stream }
}

/// One truncated ℓᵖ field at finite `p`.
pub fn simulate_lp_field(
    model: &SpectralModel,
    p: f64,
    sites: &SiteSet,
    truncation: Truncation,
    stream: RngStream,
) -> Result<FieldSample> {
    let pi = PIndex::new(p)?;
    if pi.is_infinite() {
        bail!(Domain, "the ℓᵖ simulator needs finite p");
    }
    let job = FieldJob::new(model, sites, pi, Route::Lp, truncation)?;
    Ok(sample_with(&job, model, pi, truncation.eps(), stream))
}

/// One exact Reich–Shaby field.
pub fn simulate_reich_shaby(model: &SpectralModel, p: f64, sites: &SiteSet, stream: RngStream) -> Result<FieldSample> {
    let pi = PIndex::new(p)?;
    let job = FieldJob::new(model, sites, pi, Route::ReichShaby, Truncation::threshold(1.0))?;
    Ok(sample_with(&job, model, pi, None, stream))
}

/// One exact `p = ∞` field; the model must be bounded.
pub fn simulate_spectral_inf(model: &SpectralModel, sites: &SiteSet, stream: RngStream) -> Result<FieldSample> {
    let job = FieldJob::new(model, sites, PIndex::INFINITY, Route::SpectralInf, Truncation::threshold(1.0))?;
    Ok(sample_with(&job, model, PIndex::INFINITY, None, stream))
}

/// Replicates × sites matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    sites: SiteSet,
    values: Vec<f64>,
}

impl SampleMatrix {
    pub fn from_values(sites: SiteSet, values: Vec<f64>) -> Result<Self> {
        if values.len() % sites.len() != 0 {
            bail!(Data, "{} values do not fill rows of {} sites", values.len(), sites.len());
        }
        Ok(Self { sites, values })
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn replicates(&self) -> usize {
        self.values.len() / self.sites.len()
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.n_sites();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_sites())
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }

    /// `maxᵢ X(sᵢ)` over the given site indices, per replicate.
    pub fn subset_max(&self, subset: &[usize]) -> Vec<f64> {
        self.rows().map(|r| subset.iter().map(|&i| r[i]).fold(f64::NEG_INFINITY, f64::max)).collect()
    }

    /// Empirical `P(X(sᵢ) ≤ xᵢ ∀i)`.
    pub fn joint_cdf(&self, x: &[f64]) -> f64 {
        let hits = self.rows().filter(|r| r.iter().zip(x).all(|(v, xi)| v <= xi)).count();
        hits as f64 / self.replicates() as f64
    }

    /// Rows `b·k .. b·(k+1)` reduced by pointwise maximum and divided by `b`.
    pub fn block_max_rescaled(&self, block: usize) -> SampleMatrix {
        let n = self.n_sites();
        let blocks = self.replicates() / block;
        let mut values = vec![f64::NEG_INFINITY; blocks * n];
        for k in 0..blocks * block {
            let dst = &mut values[(k / block) * n..(k / block + 1) * n];
            for (d, v) in dst.iter_mut().zip(self.row(k)) {
                *d = d.max(*v);
            }
        }
        for v in values.iter_mut() {
            *v /= block as f64;
        }
        SampleMatrix { sites: self.sites.clone(), values }
    }
}

/// `m` fields from `sim`; replicate `k` uses stream `(seed, k)`.
pub fn simulate_matrix<F: FieldSimulator>(sim: &F, seed: u64, m: usize) -> SampleMatrix {
    let n = sim.sites().len();
    let mut values = vec![0.0; m * n];
    let mut scratch = Vec::new();
    for (k, row) in values.chunks_exact_mut(n).enumerate() {
        sim.simulate_into(&mut RngStream::new(seed, k as u64).rng(), row, &mut scratch);
    }
    SampleMatrix { sites: sim.sites().clone(), values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::WeightAtom;
    use crate::stats::{frechet_cdf, ks_one_sample, ks_two_sample};
    use crate::stdf::logistic_cdf;

    fn sites(labels: &[i64]) -> SiteSet {
        SiteSet::new(labels.to_vec()).unwrap()
    }

    fn disjoint_pair() -> SpectralModel {
        SpectralModel::DiscreteWeights {
            atoms: vec![
                WeightAtom { sites: vec![0], values: vec![1.0] },
                WeightAtom { sites: vec![1], values: vec![1.0] },
            ],
        }
    }

    #[test]
    fn lp_constant_one_single_site_marginal() {
        let sim = LpSimulator::new(SpectralModel::ConstantOne.bind(&sites(&[0])).unwrap(), 2.0, Truncation::threshold(1e-3)).unwrap();
        let mat = simulate_matrix(&sim, 1, 200_000);
        assert!((mat.joint_cdf(&[1.0]) - 0.367_879).abs() < 0.01);
    }

    #[test]
    fn lp_constant_one_pair_joint_cdf() {
        let sim = LpSimulator::new(SpectralModel::ConstantOne.bind(&sites(&[0, 1])).unwrap(), 2.0, Truncation::threshold(1e-3)).unwrap();
        let mat = simulate_matrix(&sim, 2, 200_000);
        let target = (-(2.0f64).sqrt()).exp();
        assert!((target - 0.243_117).abs() < 1e-6);
        assert!((mat.joint_cdf(&[1.0, 1.0]) - target).abs() < 0.01);
    }

    #[test]
    fn refining_threshold_moves_cdf_less_than_bias_bound() {
        let bound = SpectralModel::ConstantOne.bind(&sites(&[0, 1])).unwrap();
        let x = [1.0, 1.5];
        let coarse = LpSimulator::new(&bound, 2.0, Truncation::threshold(0.2)).unwrap();
        let mut last = simulate_matrix(&coarse, 3, 100_000).joint_cdf(&x);
        let mut eps = 0.2;
        for _ in 0..2 {
            let bias = LpSimulator::new(&bound, 2.0, Truncation::threshold(eps)).unwrap().report().cdf_bias_bound(&x).unwrap();
            eps /= 2.0;
            let finer = LpSimulator::new(&bound, 2.0, Truncation::threshold(eps)).unwrap();
            let bias_fine = finer.report().cdf_bias_bound(&x).unwrap();
            assert!(bias_fine < bias);
            // Common random numbers: the same seed reuses the same leading points.
            let now = simulate_matrix(&finer, 3, 100_000).joint_cdf(&x);
            assert!((now - last).abs() <= bias + bias_fine, "{now} vs {last}, bound {bias}");
            last = now;
        }
    }

    #[test]
    fn uncompensated_bound_is_looser_but_valid() {
        let bound = SpectralModel::ConstantOne.bind(&sites(&[0])).unwrap();
        let sim = LpSimulator::new(&bound, 2.0, Truncation::Threshold { eps: 0.05, compensate: false }).unwrap();
        let b = sim.report().cdf_bias_bound(&[1.0]).unwrap();
        // tail mean 0.05, Γ(1/2)² = π.
        assert!((b - 0.05 / core::f64::consts::PI).abs() < 1e-12);
        let mat = simulate_matrix(&sim, 4, 200_000);
        let err = (mat.joint_cdf(&[1.0]) - (-1.0f64).exp()).abs();
        assert!(err < b + 0.005, "{err} vs {b}");
    }

    #[test]
    fn threshold_for_bias_meets_target() {
        let bound = SpectralModel::ConstantOne.bind(&sites(&[0, 1, 2])).unwrap();
        let eps = threshold_for_cdf_bias(&bound, 2.0, 0.5, 1e-3).unwrap();
        let sim = LpSimulator::new(&bound, 2.0, Truncation::threshold(eps)).unwrap();
        let b = sim.report().cdf_bias_bound(&[0.5, 0.5, 0.5]).unwrap();
        assert!((b - 1e-3).abs() < 1e-9, "{b}");
    }

    #[test]
    fn fixed_count_has_no_bound_and_bad_params_fail() {
        let bound = SpectralModel::ConstantOne.bind(&sites(&[0])).unwrap();
        let sim = LpSimulator::new(&bound, 3.0, Truncation::FixedCount { n: 10 }).unwrap();
        assert!(sim.report().cdf_bias_bound(&[1.0]).is_none());
        assert!(LpSimulator::new(&bound, 1.0, Truncation::threshold(0.1)).is_err());
        assert!(LpSimulator::new(&bound, f64::INFINITY, Truncation::threshold(0.1)).is_err());
        assert!(LpSimulator::new(&bound, 2.0, Truncation::threshold(0.0)).is_err());
        assert!(LpSimulator::new(&bound, 2.0, Truncation::FixedCount { n: 0 }).is_err());
    }

    #[test]
    fn reich_shaby_single_atom_is_logistic() {
        for p in [1.5, 3.0] {
            let field = ReichShaby::new(sites(&[0, 1]), &SpectralModel::ConstantOne.bind(&sites(&[0, 1])).unwrap().as_weight_table().unwrap(), p).unwrap();
            let mat = simulate_matrix(&field, 5, 100_000);
            let target = (-(2.0f64).powf(1.0 / p)).exp();
            assert!((mat.joint_cdf(&[1.0, 1.0]) - target).abs() < 0.01);
            assert!((mat.joint_cdf(&[0.7, 2.0]) - logistic_cdf(p, &[0.7, 2.0]).unwrap()).abs() < 0.01);
        }
    }

    #[test]
    fn reich_shaby_rejects_bad_weights_and_log_gaussian() {
        let bad = SpectralModel::DiscreteWeights { atoms: vec![WeightAtom { sites: vec![0, 1], values: vec![0.3, 0.3] }] };
        assert!(matches!(simulate_reich_shaby(&bad, 2.0, &sites(&[0, 1]), RngStream::new(0, 0)), Err(crate::Error::ModelValidation(_))));
        let lg = SpectralModel::LogGaussian { covariance: crate::models::Covariance::Exponential { variance: 1.0, range: 1.0 } };
        assert!(simulate_reich_shaby(&lg, 2.0, &sites(&[0, 1]), RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn spectral_inf_constant_one_is_complete_dependence() {
        let f = simulate_spectral_inf(&SpectralModel::ConstantOne, &sites(&[0, 1, 2]), RngStream::new(6, 0)).unwrap();
        assert!(f.values.iter().all(|&v| v == f.values[0]));
        let lg = SpectralModel::LogGaussian { covariance: crate::models::Covariance::Exponential { variance: 1.0, range: 1.0 } };
        assert!(matches!(simulate_spectral_inf(&lg, &sites(&[0]), RngStream::new(0, 0)), Err(crate::Error::Refused(_))));
    }

    #[test]
    fn spectral_inf_terminates_many_times() {
        let job = FieldJob::new(&SpectralModel::ConstantOne, &sites(&[0]), PIndex::INFINITY, Route::Auto, Truncation::threshold(1.0)).unwrap();
        let mat = simulate_matrix(&job, 7, 1_000_000);
        assert_eq!(mat.replicates(), 1_000_000);
        assert!(mat.values().iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn spectral_inf_disjoint_marginals_and_independence() {
        let job = FieldJob::new(&disjoint_pair(), &sites(&[0, 1]), PIndex::INFINITY, Route::Auto, Truncation::threshold(1.0)).unwrap();
        let mat = simulate_matrix(&job, 8, 100_000);
        for i in 0..2 {
            assert!(ks_one_sample(&mat.column(i), |x| frechet_cdf(1.0, x)) < 0.01);
        }
        assert!((mat.joint_cdf(&[1.0, 1.0]) - (-2.0f64).exp()).abs() < 0.01);
    }

    #[test]
    fn reich_shaby_and_lp_agree_on_discrete_weights() {
        let model = SpectralModel::GaussianKernel { centers: vec![0.0, 2.0, 5.0], bandwidth: 1.5 };
        let s = sites(&[0, 1, 3]);
        let rs = FieldJob::new(&model, &s, PIndex::new(2.0).unwrap(), Route::ReichShaby, Truncation::threshold(1.0)).unwrap();
        let lp = FieldJob::new(&model, &s, PIndex::new(2.0).unwrap(), Route::Lp, Truncation::threshold(1e-3)).unwrap();
        let a = simulate_matrix(&rs, 9, 100_000);
        let b = simulate_matrix(&lp, 10, 100_000);
        for i in 0..3 {
            assert!(ks_two_sample(&a.column(i), &b.column(i)) < 0.02);
        }
        assert!(ks_two_sample(&a.subset_max(&[0, 1, 2]), &b.subset_max(&[0, 1, 2])) < 0.02);
    }

    #[test]
    fn routing() {
        let s = sites(&[0, 1]);
        let p2 = PIndex::new(2.0).unwrap();
        let t = Truncation::threshold(1e-2);
        assert_eq!(FieldJob::new(&SpectralModel::ConstantOne, &s, p2, Route::Auto, t).unwrap().route(), Route::ReichShaby);
        let lg = SpectralModel::LogGaussian { covariance: crate::models::Covariance::Exponential { variance: 1.0, range: 1.0 } };
        assert_eq!(FieldJob::new(&lg, &s, p2, Route::Auto, t).unwrap().route(), Route::Lp);
        assert!(FieldJob::new(&lg, &s, PIndex::INFINITY, Route::Auto, t).is_err());
        assert!(FieldJob::new(&SpectralModel::ConstantOne, &s, p2, Route::SpectralInf, t).is_err());
        assert!(FieldJob::new(&SpectralModel::ConstantOne, &s, PIndex::INFINITY, Route::ReichShaby, t).is_err());
    }

    #[test]
    fn block_max_rescaling() {
        let s = sites(&[0]);
        let m = SampleMatrix::from_values(s, alloc::vec![1.0, 4.0, 2.0, 6.0]).unwrap();
        assert_eq!(m.block_max_rescaled(2).values(), &[2.0, 3.0]);
    }
}
