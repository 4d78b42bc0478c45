//! Stationarity, mixing and ergodicity diagnostics for fields on ℤ.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::field::{simulate_matrix, FieldJob, Route, Truncation};
use crate::models::{mean_max_pairs, PathSampler, SpectralModel};
use crate::pindex::PIndex;
use crate::rng::{derive_seed, RngStream};
use crate::sites::SiteSet;
use crate::stats::{Estimate, MeanVar};
use crate::stdf::{beta_mixing_bound, extremal_coefficient, EcEstimate};
use crate::transform::lift_to_spectral;

/// Default largest lag.
pub const DEFAULT_MAX_LAG: i64 = 64;
/// Default tolerance on `θ ≥ 2 - tol`.
pub const DEFAULT_TOL: f64 = 0.03;
/// Target 99% half-width of stationarity probes.
pub const PROBE_HALF_WIDTH: f64 = 0.02;

/// `E Πᵢ V(s + oᵢ)^{uᵢ}` with `Σ uᵢ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub offsets: Vec<i64>,
    pub exponents: Vec<f64>,
}

impl Probe {
    pub fn new(offsets: Vec<i64>, exponents: Vec<f64>) -> Result<Self> {
        if offsets.is_empty() || offsets.len() > 3 || offsets.len() != exponents.len() {
            bail!(Domain, "a probe has one to three sites with one exponent each");
        }
        if exponents.iter().any(|u| !(0.0..=1.0).contains(u)) {
            bail!(Domain, "probe exponents must lie in [0, 1]");
        }
        let total: f64 = exponents.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            bail!(Domain, "probe exponents must sum to 1, got {total}");
        }
        SiteSet::new(offsets.clone())?;
        Ok(Self { offsets, exponents })
    }

    /// `(½, ½)` at lags 1 and 2 and `(⅓, ⅓, ⅓)` on three consecutive sites.
    pub fn default_set() -> Vec<Probe> {
        let third = 1.0 / 3.0;
        vec![
            Probe { offsets: vec![0, 1], exponents: vec![0.5, 0.5] },
            Probe { offsets: vec![0, 2], exponents: vec![0.5, 0.5] },
            Probe { offsets: vec![0, 1, 2], exponents: vec![third, third, 1.0 - 2.0 * third] },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityRow {
    pub probe: usize,
    pub shift: i64,
    pub base: Estimate,
    pub shifted: Estimate,
    /// Paired difference `shifted - base`.
    pub difference: Estimate,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub rows: Vec<StationarityRow>,
    pub pass: bool,
}

/// Compares each probe at the origin and shifted, on common paths of
/// `V = U·W/Γ(1-1/p)`. Replicates double from `m` up to `max_m` until the
/// difference's 99% half-width is below [`PROBE_HALF_WIDTH`]; a row passes
/// when the difference is within three standard errors of zero.
pub fn stationarity_moment_check(
    model: &SpectralModel,
    p: PIndex,
    probes: &[Probe],
    shifts: &[i64],
    m: usize,
    max_m: usize,
    seed: u64,
) -> Result<StationarityReport> {
    if m < 2 || max_m < m {
        bail!(Domain, "need 2 ≤ m ≤ max_m");
    }
    let mut rows = Vec::new();
    for (pi, probe) in probes.iter().enumerate() {
        Probe::new(probe.offsets.clone(), probe.exponents.clone())?;
        for &shift in shifts {
            let mut labels = probe.offsets.clone();
            labels.extend(probe.offsets.iter().map(|o| o + shift).filter(|s| !probe.offsets.contains(s)));
            let sites = SiteSet::new(labels)?;
            let bound = model.bind(&sites)?;
            let v = lift_to_spectral(&bound, p)?;
            let idx = |s: i64| sites.index_of(s).expect("site present");
            let a: Vec<usize> = probe.offsets.iter().map(|&o| idx(o)).collect();
            let b: Vec<usize> = probe.offsets.iter().map(|&o| idx(o + shift)).collect();
            let stream_seed = derive_seed(seed, (pi as u64) << 32 ^ shift as u64);
            let (mut base, mut shifted, mut diff) = (MeanVar::new(), MeanVar::new(), MeanVar::new());
            let mut path = vec![0.0; sites.len()];
            let mut done = 0usize;
            let mut target = m;
            loop {
                for k in done..target {
                    v.sample_into(&mut RngStream::new(stream_seed, k as u64).rng(), &mut path);
                    let prod = |ix: &[usize]| ix.iter().zip(&probe.exponents).map(|(&i, u)| path[i].powf(*u)).product::<f64>();
                    let (x, y) = (prod(&a), prod(&b));
                    base.push(x);
                    shifted.push(y);
                    diff.push(y - x);
                }
                done = target;
                if diff.estimate().half_width() < PROBE_HALF_WIDTH || target >= max_m {
                    break;
                }
                target = (2 * target).min(max_m);
            }
            let d = diff.estimate();
            rows.push(StationarityRow {
                probe: pi,
                shift,
                base: base.estimate(),
                shifted: shifted.estimate(),
                difference: d,
                pass: d.agrees_with(0.0, 3.0, 1e-12),
            });
        }
    }
    Ok(StationarityReport { pass: rows.iter().all(|r| r.pass), rows })
}

/// `θ̂(o, o + r)` from one simulation, and `E max{W(o), W(o + r)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcSequence {
    pub p: PIndex,
    pub lags: Vec<i64>,
    pub theta: Vec<EcEstimate>,
    pub mean_max: Vec<Estimate>,
}

impl EcSequence {
    pub fn theta_values(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t.theta).collect()
    }
}

/// Simulates `m` fields on `origin` and `origin + r` for every lag `r`.
/// `E max W` is exact for weight-table models and estimated from `m`
/// independent paths otherwise.
pub fn ec_sequence(
    model: &SpectralModel,
    p: PIndex,
    origin: i64,
    lags: &[i64],
    truncation: Truncation,
    m: usize,
    seed: u64,
) -> Result<EcSequence> {
    if lags.is_empty() || lags.contains(&0) {
        bail!(Domain, "lags must be nonzero");
    }
    let mut labels = vec![origin];
    labels.extend(lags.iter().map(|r| origin + r));
    let sites = SiteSet::new(labels)?;
    let job = FieldJob::new(model, &sites, p, Route::Auto, truncation)?;
    let mat = simulate_matrix(&job, derive_seed(seed, 1), m);
    let theta = (1..sites.len()).map(|j| extremal_coefficient(&mat, &[0, j])).collect::<Result<Vec<_>>>()?;
    let bound = model.bind(&sites)?;
    let pairs: Vec<(usize, usize)> = (1..sites.len()).map(|j| (0, j)).collect();
    let mean_max = match bound.as_weight_table() {
        Some(t) => pairs.iter().map(|&(i, j)| Estimate::exact(t.mean_max(i, j))).collect(),
        None => mean_max_pairs(&bound, &pairs, m, derive_seed(seed, 2))?,
    };
    Ok(EcSequence { p, lags: lags.to_vec(), theta, mean_max })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub sequence: EcSequence,
    pub tol: f64,
    /// `θ̂(0, R) ≥ 2 - tol`.
    pub consistent_with_mixing: bool,
    pub beta_bound: f64,
}

/// `θ̂(0, r)` for `r = 1..=max_lag`; mixing requires `θ(0, r) → 2`.
pub fn mixing_diagnostic(
    model: &SpectralModel,
    p: PIndex,
    max_lag: i64,
    truncation: Truncation,
    m: usize,
    tol: f64,
    seed: u64,
) -> Result<MixingReport> {
    if max_lag < 1 {
        bail!(Domain, "max lag must be at least 1");
    }
    let lags: Vec<i64> = (1..=max_lag).collect();
    let sequence = ec_sequence(model, p, 0, &lags, truncation, m, seed)?;
    Ok(mixing_report(sequence, tol))
}

pub fn mixing_report(sequence: EcSequence, tol: f64) -> MixingReport {
    let last = sequence.theta.last().map_or(f64::NAN, |t| t.theta);
    MixingReport {
        consistent_with_mixing: last >= 2.0 - tol,
        beta_bound: beta_mixing_bound(&sequence.theta_values()),
        sequence,
        tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    /// `(1/r) Σ_{k ≤ r} θ̂(0, k)`.
    pub cesaro: Vec<f64>,
    pub tol: f64,
    pub consistent_with_ergodicity: bool,
}

pub fn ergodicity_diagnostic(sequence: &EcSequence, tol: f64) -> ErgodicityReport {
    let mut total = 0.0;
    let cesaro: Vec<f64> = sequence
        .theta
        .iter()
        .enumerate()
        .map(|(k, t)| {
            total += t.theta;
            total / (k + 1) as f64
        })
        .collect();
    let last = cesaro.last().copied().unwrap_or(f64::NAN);
    ErgodicityReport { cesaro, tol, consistent_with_ergodicity: last >= 2.0 - tol }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseInvarianceRow {
    pub lag: i64,
    pub lower: f64,
    pub theta: f64,
    pub upper: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseInvarianceReport {
    pub rows: Vec<NoiseInvarianceRow>,
    pub theta_reaches: bool,
    pub mean_max_reaches: bool,
    pub pass: bool,
}

/// Checks `E max W - 3 se ≤ θ̂ ≤ 2^{1/p} (E max W)^{1-1/p} + 3 se` at every
/// lag, and that `θ̂` and `E max W` agree on reaching `2 - tol` at the last
/// lag.
pub fn noise_invariance_check(sequence: &EcSequence, tol: f64) -> NoiseInvarianceReport {
    let a = sequence.p.recip();
    let c = 2.0.powf(a);
    let rows: Vec<NoiseInvarianceRow> = sequence
        .lags
        .iter()
        .zip(&sequence.theta)
        .zip(&sequence.mean_max)
        .map(|((&lag, t), mm)| {
            let up = c * mm.value.powf(1.0 - a);
            let up_se = c * (1.0 - a) * mm.value.powf(-a) * mm.se;
            let lower = mm.value - 3.0 * t.se.hypot(mm.se);
            let upper = up + 3.0 * t.se.hypot(up_se);
            NoiseInvarianceRow { lag, lower, theta: t.theta, upper, pass: lower <= t.theta && t.theta <= upper }
        })
        .collect();
    let theta_reaches = sequence.theta.last().is_some_and(|t| t.theta >= 2.0 - tol);
    let mean_max_reaches = sequence.mean_max.last().is_some_and(|e| e.value >= 2.0 - tol);
    let pass = rows.iter().all(|r| r.pass) && theta_reaches == mean_max_reaches;
    NoiseInvarianceReport { rows, theta_reaches, mean_max_reaches, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> PIndex {
        PIndex::new(2.0).unwrap()
    }

    fn trunc() -> Truncation {
        Truncation::threshold(1e-3)
    }

    #[test]
    fn probe_validation() {
        assert!(Probe::new(vec![0, 1], vec![0.5, 0.4]).is_err());
        assert!(Probe::new(vec![0, 1, 2, 3], vec![0.25; 4]).is_err());
        assert!(Probe::new(vec![0, 0], vec![0.5, 0.5]).is_err());
        assert!(Probe::default_set().iter().all(|p| Probe::new(p.offsets.clone(), p.exponents.clone()).is_ok()));
        let bad = [Probe { offsets: vec![0, 1], exponents: vec![0.7, 0.7] }];
        assert!(stationarity_moment_check(&SpectralModel::ConstantOne, p2(), &bad, &[1], 100, 100, 0).is_err());
    }

    #[test]
    fn stationary_models_pass() {
        let models = [SpectralModel::ConstantOne, SpectralModel::periodic_gaussian_kernel(1.0, -20, 40)];
        for model in &models {
            let r =
                stationarity_moment_check(model, p2(), &Probe::default_set(), &[1, 3, 7], 20_000, 80_000, 1).unwrap();
            assert!(r.pass, "{model:?}: {r:?}");
        }
    }

    #[test]
    fn clustered_kernel_fails() {
        let model = SpectralModel::GaussianKernel { centers: vec![0.0, 6.0], bandwidth: 1.5 };
        let probe = [Probe { offsets: vec![-6, -5], exponents: vec![0.5, 0.5] }];
        let r = stationarity_moment_check(&model, p2(), &probe, &[9], 20_000, 80_000, 2).unwrap();
        assert!(!r.pass, "{r:?}");
    }

    #[test]
    fn moving_window_mixes() {
        let model = SpectralModel::moving_window(3, -5, 30);
        let r = mixing_diagnostic(&model, p2(), 20, trunc(), 20_000, DEFAULT_TOL, 3).unwrap();
        assert!(r.consistent_with_mixing);
        for (lag, t) in r.sequence.lags.iter().zip(&r.sequence.theta) {
            if *lag >= 3 {
                assert!((t.theta - 2.0).abs() < 4.0 * t.se, "lag {lag}: {}", t.theta);
            }
        }
        let n = noise_invariance_check(&r.sequence, DEFAULT_TOL);
        assert!(n.pass, "{n:?}");
        let e = ergodicity_diagnostic(&r.sequence, DEFAULT_TOL);
        assert!(e.consistent_with_ergodicity);
    }

    #[test]
    fn logistic_control_does_not_mix() {
        let r = mixing_diagnostic(&SpectralModel::ConstantOne, p2(), 8, trunc(), 20_000, DEFAULT_TOL, 4).unwrap();
        assert!(!r.consistent_with_mixing);
        assert!(r.sequence.theta.iter().all(|t| (t.theta - 2.0f64.sqrt()).abs() < 4.0 * t.se));
        assert!(!ergodicity_diagnostic(&r.sequence, DEFAULT_TOL).consistent_with_ergodicity);
        assert!(noise_invariance_check(&r.sequence, DEFAULT_TOL).pass);
        assert!(r.beta_bound > 0.0);
    }

    #[test]
    fn verdict_is_monotone_in_tol() {
        let model = SpectralModel::moving_window(4, -5, 15);
        let seq = ec_sequence(&model, p2(), 0, &[1, 2, 3], trunc(), 5_000, 5).unwrap();
        let mut prev = false;
        for tol in [0.0, 0.01, 0.05, 0.2, 0.6, 1.0] {
            let v = mixing_report(seq.clone(), tol).consistent_with_mixing;
            assert!(v || !prev);
            prev = v;
        }
        assert!(prev);
    }

    #[test]
    fn lag_negation_symmetry() {
        let model = SpectralModel::moving_window(3, -20, 20);
        let lags = [1, 2, 5, -1, -2, -5];
        let seq = ec_sequence(&model, p2(), 0, &lags, trunc(), 20_000, 6).unwrap();
        for k in 0..3 {
            let (a, b) = (&seq.theta[k], &seq.theta[k + 3]);
            assert!((a.theta - b.theta).abs() < 4.0 * a.se.hypot(b.se));
            assert_eq!(seq.mean_max[k].value, seq.mean_max[k + 3].value);
        }
    }
}
