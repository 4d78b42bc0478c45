//! Stable tail dependence functions, finite-dimensional distributions and
//! extremal coefficients.
//!
//! For an ℓᵖ field with spectral function `W`,
//! `P(X(sᵢ) ≤ xᵢ ∀i) = exp(-E‖(W(sᵢ)/xᵢ)ᵢ‖_p)` and the stdf is
//! `l(x) = E‖(xᵢ W(sᵢ))ᵢ‖_p`. The extremal coefficient of a site subset `S`
//! is `θ(S) = l(1_S)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::field::{simulate_matrix, FieldJob, Route, SampleMatrix, Truncation};
use crate::models::{mean_max_pairs, BoundModel, PathSampler, SpectralModel, WeightTable};
use crate::pindex::PIndex;
use crate::rng::{derive_seed, RngStream};
use crate::sites::SiteSet;
use crate::stats::{Estimate, MeanVar};

/// `‖x‖_r` of a nonnegative vector; `r = ∞` is the maximum.
pub fn lp_norm(r: f64, x: impl IntoIterator<Item = f64>) -> f64 {
    if r.is_infinite() {
        return x.into_iter().fold(0.0, f64::max);
    }
    // scale by the maximum to avoid overflow for large r
    let x: Vec<f64> = x.into_iter().collect();
    let m = x.iter().copied().fold(0.0, f64::max);
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * x.iter().map(|v| (v / m).powf(r)).sum::<f64>().powf(1.0 / r)
}

fn check_positive(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        bail!(Domain, "empty argument");
    }
    if let Some(v) = x.iter().find(|v| !(**v > 0.0)) {
        bail!(Domain, "cdf arguments must be positive, got {v}");
    }
    Ok(())
}

fn check_stdf_arg(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        bail!(Domain, "expected {n} coordinates, got {}", x.len());
    }
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        bail!(Domain, "stdf arguments must be finite and nonnegative, got {v}");
    }
    Ok(())
}

/// `exp(-(Σ xᵢ^{-p})^{1/p})`, the fidi of the ℓᵖ field with `W ≡ 1`.
pub fn logistic_cdf(p: f64, x: &[f64]) -> Result<f64> {
    check_positive(x)?;
    PIndex::new(p)?;
    Ok((-lp_norm(p, x.iter().map(|v| 1.0 / v))).exp())
}

/// `(Σ xᵢ^r)^{1/r}`.
pub fn logistic_stdf(r: f64, x: &[f64]) -> f64 {
    lp_norm(r, x.iter().copied())
}

/// `Σₗ ‖(wₗ(sᵢ) xᵢ)ᵢ‖_p`.
pub fn reich_shaby_stdf(weights: &WeightTable, p: f64, x: &[f64]) -> f64 {
    (0..weights.atoms()).map(|l| lp_norm(p, weights.row(l).iter().zip(x).map(|(w, xi)| w * xi))).sum()
}

/// Closed-form fidi `exp(-Σₗ ‖(wₗ(sᵢ)/xᵢ)ᵢ‖_p)` of the Reich–Shaby field.
pub fn reich_shaby_cdf(weights: &WeightTable, p: f64, x: &[f64]) -> Result<f64> {
    check_positive(x)?;
    if x.len() != weights.n_sites() {
        bail!(Domain, "expected {} coordinates, got {}", weights.n_sites(), x.len());
    }
    PIndex::new(p)?;
    let inv: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
    Ok((-reich_shaby_stdf(weights, p, &inv)).exp())
}

/// Stored paths for common-random-number stdf evaluation:
/// `l̂(x) = mean_k ‖x ∘ W_k‖_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBank {
    order: PIndex,
    n_sites: usize,
    paths: Vec<f64>,
}

impl PathBank {
    /// `m` paths from `sampler`; path `k` uses stream `(seed, k)`. Use
    /// `order = p` with ℓᵖ spectral functions and `∞` with classical ones.
    pub fn from_sampler<S: PathSampler>(sampler: &S, order: PIndex, m: usize, seed: u64) -> Result<Self> {
        if m < 2 {
            bail!(Domain, "a path bank needs at least two paths");
        }
        let n = sampler.len();
        let mut paths = vec![0.0; m * n];
        for (k, row) in paths.chunks_exact_mut(n).enumerate() {
            sampler.sample_into(&mut RngStream::new(seed, k as u64).rng(), row);
        }
        Ok(Self { order, n_sites: n, paths })
    }

    pub fn order(&self) -> PIndex {
        self.order
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn replicates(&self) -> usize {
        self.paths.len() / self.n_sites
    }

    pub fn eval(&self, x: &[f64]) -> Result<Estimate> {
        check_stdf_arg(x, self.n_sites)?;
        let r = self.order.get();
        let acc: MeanVar =
            self.paths.chunks_exact(self.n_sites).map(|w| lp_norm(r, w.iter().zip(x).map(|(a, b)| a * b))).collect();
        Ok(acc.estimate())
    }
}

/// An stdf `l` on `[0,∞)ⁿ`, exact or Monte Carlo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StdfEvaluator {
    /// `l(x) = Σ xᵢ`.
    Independence { n: usize },
    /// `l(x) = ‖x‖_r`.
    Logistic { r: PIndex, n: usize },
    /// `l(x) = Σₗ ‖wₗ ∘ x‖_p`.
    ReichShaby { weights: WeightTable, p: PIndex },
    MonteCarlo(PathBank),
}

impl StdfEvaluator {
    /// Exact stdf of a bound model at index `p` where one exists.
    pub fn closed_form(model: &BoundModel, p: PIndex) -> Option<Self> {
        model.as_weight_table().map(|weights| Self::ReichShaby { weights, p })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Independence { n } | Self::Logistic { n, .. } => *n,
            Self::ReichShaby { weights, .. } => weights.n_sites(),
            Self::MonteCarlo(bank) => bank.n_sites(),
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Self::MonteCarlo(_))
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Independence { n } => alloc::format!("independence (n = {n})"),
            Self::Logistic { r, n } => alloc::format!("logistic r = {r} (n = {n})"),
            Self::ReichShaby { weights, p } => {
                alloc::format!("Reich-Shaby p = {p} ({} atoms, n = {})", weights.atoms(), weights.n_sites())
            }
            Self::MonteCarlo(b) => {
                alloc::format!("Monte Carlo order {} ({} paths, n = {})", b.order(), b.replicates(), b.n_sites())
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Estimate> {
        check_stdf_arg(x, self.dim())?;
        Ok(match self {
            Self::Independence { .. } => Estimate::exact(x.iter().sum()),
            Self::Logistic { r, .. } => Estimate::exact(logistic_stdf(r.get(), x)),
            Self::ReichShaby { weights, p } => Estimate::exact(reich_shaby_stdf(weights, p.get(), x)),
            Self::MonteCarlo(bank) => bank.eval(x)?,
        })
    }

    /// `θ(S) = l(1_S)`.
    pub fn extremal_coefficient(&self, subset: &[usize]) -> Result<Estimate> {
        let mut x = vec![0.0; self.dim()];
        for &i in subset {
            if i >= x.len() {
                bail!(Domain, "site index {i} out of range");
            }
            x[i] = 1.0;
        }
        self.eval(&x)
    }
}

/// `l(x) = E maxᵢ xᵢ V(sᵢ)` from `m` classical spectral paths.
pub fn stdf_mc<S: PathSampler>(sampler: &S, x: &[f64], m: usize, seed: u64) -> Result<Estimate> {
    PathBank::from_sampler(sampler, PIndex::INFINITY, m, seed)?.eval(x)
}

/// `exp(-E‖W/x‖_p)` from `m` ℓᵖ spectral paths, with a delta-method
/// standard error.
pub fn fidi_cdf_mc<S: PathSampler>(sampler: &S, p: PIndex, x: &[f64], m: usize, seed: u64) -> Result<Estimate> {
    check_positive(x)?;
    let inv: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
    let l = PathBank::from_sampler(sampler, p, m, seed)?.eval(&inv)?;
    let v = (-l.value).exp();
    Ok(Estimate { value: v, se: v * l.se, n: l.n })
}

/// Minimum replicates for [`extremal_coefficient`].
pub const MIN_EC_REPLICATES: usize = 100;

/// `θ̂(S) = m / Σₖ 1/maxᵢ∈S Xₖ(sᵢ)`. With unit Fréchet margins
/// `1/max X ~ Exp(θ)`, so the denominator is an unbiased estimate of `m/θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcEstimate {
    pub sites: Vec<i64>,
    pub theta: f64,
    pub se: f64,
    pub replicates: usize,
}

impl EcEstimate {
    pub fn half_width(&self) -> f64 {
        self.estimate().half_width()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.theta, se: self.se, n: self.replicates }
    }
}

pub fn extremal_coefficient(mat: &SampleMatrix, subset: &[usize]) -> Result<EcEstimate> {
    let m = mat.replicates();
    if m < MIN_EC_REPLICATES {
        bail!(Data, "need at least {MIN_EC_REPLICATES} replicates, got {m}");
    }
    if subset.is_empty() || subset.iter().any(|&i| i >= mat.n_sites()) {
        bail!(Domain, "invalid site subset");
    }
    let mut total = 0.0;
    for r in mat.rows() {
        let mx = subset.iter().map(|&i| r[i]).fold(f64::NEG_INFINITY, f64::max);
        if !(mx > 0.0 && mx.is_finite()) {
            bail!(Data, "subset maximum must be positive and finite, got {mx}");
        }
        total += 1.0 / mx;
    }
    let theta = m as f64 / total;
    Ok(EcEstimate {
        sites: subset.iter().map(|&i| mat.sites().labels()[i]).collect(),
        theta,
        se: theta / (m as f64).sqrt(),
        replicates: m,
    })
}

/// Madogram estimate `(1 + 2ν)/(1 - 2ν)`, `ν = ½ E|F(X(sᵢ)) - F(X(sⱼ))|`
/// with `F` the unit Fréchet cdf.
pub fn madogram_ec(mat: &SampleMatrix, i: usize, j: usize) -> Result<f64> {
    if mat.replicates() < MIN_EC_REPLICATES {
        bail!(Data, "need at least {MIN_EC_REPLICATES} replicates");
    }
    if i >= mat.n_sites() || j >= mat.n_sites() {
        bail!(Domain, "site index out of range");
    }
    let f = |x: f64| (-1.0 / x).exp();
    let nu: f64 = mat.rows().map(|r| (f(r[i]) - f(r[j])).abs()).sum::<f64>() / (2.0 * mat.replicates() as f64);
    Ok((1.0 + 2.0 * nu) / (1.0 - 2.0 * nu))
}

/// One pair of the two-sided check
/// `E max W ≤ θ ≤ 2^{1/p} (E max W)^{1-1/p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub pair: (i64, i64),
    pub lower: Estimate,
    pub theta: EcEstimate,
    pub upper: Estimate,
    pub tol_lower: f64,
    pub tol_upper: f64,
    pub pass: bool,
}

/// Bounds around simulated `θ̂`. `E max W` is exact for weight-table models
/// and estimated from `m_w` paths of `w` otherwise.
pub fn ec_bounds_from(
    mat: &SampleMatrix,
    w: &BoundModel,
    p: PIndex,
    pairs: &[(usize, usize)],
    m_w: usize,
    seed: u64,
) -> Result<Vec<BoundsRow>> {
    if w.len() != mat.n_sites() {
        bail!(Domain, "model and sample have different site counts");
    }
    let lowers: Vec<Estimate> = match w.weights() {
        Some(t) => pairs.iter().map(|&(i, j)| Estimate::exact(t.mean_max(i, j))).collect(),
        None if w.bound() == Some(1.0) => pairs.iter().map(|_| Estimate::exact(1.0)).collect(),
        None => mean_max_pairs(w, pairs, m_w, seed)?,
    };
    let a = p.recip();
    let c = 2.0.powf(a);
    pairs
        .iter()
        .zip(lowers)
        .map(|(&(i, j), lower)| {
            let theta = extremal_coefficient(mat, &[i, j])?;
            let upper = Estimate {
                value: c * lower.value.powf(1.0 - a),
                se: c * (1.0 - a) * lower.value.powf(-a) * lower.se,
                n: lower.n,
            };
            let tol_lower = 3.0 * theta.se.hypot(lower.se);
            let tol_upper = 3.0 * theta.se.hypot(upper.se);
            let pass = theta.theta >= lower.value - tol_lower && theta.theta <= upper.value + tol_upper;
            Ok(BoundsRow { pair: (theta.sites[0], theta.sites[1]), lower, theta, upper, tol_lower, tol_upper, pass })
        })
        .collect()
}

/// [`ec_bounds_from`] on `m` fresh fields simulated with stream seed `seed`.
pub fn check_ec_bounds(
    model: &SpectralModel,
    sites: &SiteSet,
    p: PIndex,
    pairs: &[(usize, usize)],
    truncation: Truncation,
    m: usize,
    seed: u64,
) -> Result<Vec<BoundsRow>> {
    let job = FieldJob::new(model, sites, p, Route::Auto, truncation)?;
    let mat = simulate_matrix(&job, derive_seed(seed, 1), m);
    ec_bounds_from(&mat, &model.bind(sites)?, p, pairs, m, derive_seed(seed, 2))
}

/// `θ(S₁ ∪ S₂) ≥ 2^{1/p} (θ(S₁) + θ(S₂))/2` for disjoint `S₁, S₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionBound {
    pub theta1: EcEstimate,
    pub theta2: EcEstimate,
    pub theta_union: EcEstimate,
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `tol = None` uses three combined standard errors.
pub fn check_union_bound(
    mat: &SampleMatrix,
    s1: &[usize],
    s2: &[usize],
    p: PIndex,
    tol: Option<f64>,
) -> Result<UnionBound> {
    if s1.iter().any(|i| s2.contains(i)) {
        bail!(Domain, "subsets must be disjoint");
    }
    let theta1 = extremal_coefficient(mat, s1)?;
    let theta2 = extremal_coefficient(mat, s2)?;
    let union: Vec<usize> = s1.iter().chain(s2).copied().collect();
    let theta_union = extremal_coefficient(mat, &union)?;
    let c = 2.0.powf(p.recip());
    let margin = theta_union.theta - c * (theta1.theta + theta2.theta) / 2.0;
    let tol = tol.unwrap_or_else(|| 3.0 * theta_union.se.hypot(c / 2.0 * theta1.se.hypot(theta2.se)));
    Ok(UnionBound { pass: margin >= -tol, theta1, theta2, theta_union, margin, tol })
}

/// `4 Σ_r max(0, 2 - θ(0, r))`, an upper bound on the β-mixing
/// coefficient beyond the lags covered.
pub fn beta_mixing_bound(thetas: &[f64]) -> f64 {
    4.0 * thetas.iter().map(|t| (2.0 - t).max(0.0)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::WeightAtom;
    use crate::transform::lift_to_spectral;
    use proptest::prelude::*;

    fn sites(labels: &[i64]) -> SiteSet {
        SiteSet::new(labels.to_vec()).unwrap()
    }

    fn p(v: f64) -> PIndex {
        PIndex::new(v).unwrap()
    }

    #[test]
    fn logistic_examples() {
        assert!((logistic_cdf(2.0, &[2.0]).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        let v = logistic_cdf(2.0, &[1.0, 1.0]).unwrap();
        assert!((v - (-(2.0f64).sqrt()).exp()).abs() < 1e-15);
        assert!(logistic_cdf(2.0, &[1.0, 0.0]).is_err());
        assert!(logistic_cdf(2.0, &[1.0, -1.0]).is_err());
        assert!(logistic_cdf(1.0, &[1.0]).is_err());
        assert!((logistic_stdf(2.0, &[1.0, 1.0]) - 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(logistic_stdf(f64::INFINITY, &[0.5, 3.0]), 3.0);
    }

    #[test]
    fn lp_norm_large_order_is_stable() {
        let v = lp_norm(500.0, [1e300, 1e300]);
        assert!((v / 1e300 - 2.0f64.powf(1.0 / 500.0)).abs() < 1e-12);
    }

    #[test]
    fn reich_shaby_single_atom_is_logistic() {
        let t = SpectralModel::ConstantOne.bind(&sites(&[0, 1, 2])).unwrap().as_weight_table().unwrap();
        let x = [0.5, 1.0, 2.0];
        assert!((reich_shaby_cdf(&t, 2.0, &x).unwrap() - logistic_cdf(2.0, &x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn evaluator_projection_and_margins() {
        let model = SpectralModel::moving_window(2, 0, 2);
        let b = model.bind(&sites(&[0, 1, 2])).unwrap();
        let l = StdfEvaluator::closed_form(&b, p(2.0)).unwrap();
        for i in 0..3 {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            assert!((l.eval(&e).unwrap().value - 1.0).abs() < 1e-12);
        }
        let b2 = model.bind(&sites(&[0, 1])).unwrap();
        let l2 = StdfEvaluator::closed_form(&b2, p(2.0)).unwrap();
        let x = [0.3, 1.7];
        assert!((l.eval(&[0.3, 1.7, 0.0]).unwrap().value - l2.eval(&x).unwrap().value).abs() < 1e-12);
        assert!(l.eval(&[1.0, -1.0, 0.0]).is_err());
        assert!(l.eval(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn mc_stdf_matches_closed_form() {
        let model = SpectralModel::DiscreteWeights {
            atoms: vec![
                WeightAtom { sites: vec![0, 1], values: vec![0.7, 0.2] },
                WeightAtom { sites: vec![0, 1], values: vec![0.3, 0.8] },
            ],
        };
        let b = model.bind(&sites(&[0, 1])).unwrap();
        let exact = StdfEvaluator::closed_form(&b, p(2.0)).unwrap();
        let bank = StdfEvaluator::MonteCarlo(PathBank::from_sampler(&b, p(2.0), 50_000, 1).unwrap());
        let v = lift_to_spectral(&b, p(2.0)).unwrap();
        for x in [[1.0, 1.0], [0.2, 3.0], [2.0, 0.0]] {
            let e = exact.eval(&x).unwrap().value;
            assert!(bank.eval(&x).unwrap().agrees_with(e, 4.0, 1e-12));
            assert!(stdf_mc(&v, &x, 200_000, 2).unwrap().agrees_with(e, 4.0, 0.0));
        }
        let f = fidi_cdf_mc(&b, p(2.0), &[1.0, 2.0], 50_000, 3).unwrap();
        assert!(f.agrees_with(reich_shaby_cdf(b.weights().unwrap(), 2.0, &[1.0, 2.0]).unwrap(), 4.0, 1e-12));
    }

    #[test]
    fn ec_estimator_on_logistic_field() {
        let s = sites(&[0, 1, 2, 3]);
        for pv in [1.5, 2.0, 4.0] {
            let job = FieldJob::new(&SpectralModel::ConstantOne, &s, p(pv), Route::Auto, Truncation::threshold(1e-3))
                .unwrap();
            let mat = simulate_matrix(&job, 11, 20_000);
            let th = extremal_coefficient(&mat, &[0, 1]).unwrap();
            assert!((th.theta - 2.0f64.powf(1.0 / pv)).abs() < 4.0 * th.se, "{pv}: {th:?}");
            let mdg = madogram_ec(&mat, 0, 1).unwrap();
            assert!((mdg - 2.0f64.powf(1.0 / pv)).abs() < 0.05, "{pv}: {mdg}");
            let ub = check_union_bound(&mat, &[0, 1], &[2, 3], p(pv), None).unwrap();
            assert!(ub.pass, "{ub:?}");
        }
    }

    #[test]
    fn ec_errors() {
        let s = sites(&[0, 1]);
        let small = SampleMatrix::from_values(s.clone(), vec![1.0; 2 * 50]).unwrap();
        assert!(extremal_coefficient(&small, &[0, 1]).is_err());
        let mut v = vec![1.0; 2 * 200];
        v[7] = 0.0;
        v[6] = -1.0;
        let bad = SampleMatrix::from_values(s.clone(), v).unwrap();
        assert!(matches!(extremal_coefficient(&bad, &[0, 1]), Err(crate::Error::Data(_))));
        let ok = SampleMatrix::from_values(s, vec![1.0; 2 * 200]).unwrap();
        assert!(check_union_bound(&ok, &[0], &[0, 1], p(2.0), None).is_err());
    }

    #[test]
    fn ec_bounds_on_kernel_model() {
        let model = SpectralModel::GaussianKernel { centers: vec![0.0, 1.5, 3.0], bandwidth: 1.0 };
        let s = sites(&[0, 1, 2, 3]);
        let b = model.bind(&s).unwrap();
        let job = FieldJob::new(&model, &s, p(2.0), Route::Auto, Truncation::threshold(1e-3)).unwrap();
        let mat = simulate_matrix(&job, 12, 20_000);
        let rows = ec_bounds_from(&mat, &b, p(2.0), &[(0, 1), (0, 3), (1, 2)], 0, 0).unwrap();
        assert!(rows.iter().all(|r| r.pass && r.lower.value <= r.upper.value), "{rows:?}");
    }

    #[test]
    fn ec_bounds_degenerate_cases() {
        let s = sites(&[0, 1]);
        let rows = check_ec_bounds(&SpectralModel::ConstantOne, &s, p(2.0), &[(0, 1)], Truncation::threshold(1e-3), 20_000, 3)
            .unwrap();
        assert_eq!(rows[0].lower.value, 1.0);
        assert!((rows[0].upper.value - 2.0f64.sqrt()).abs() < 1e-15);
        assert!(rows[0].pass);
        let disjoint = SpectralModel::moving_window(1, 0, 1);
        for pv in [p(2.0), PIndex::INFINITY] {
            let rows = check_ec_bounds(&disjoint, &s, pv, &[(0, 1)], Truncation::threshold(1e-3), 20_000, 4).unwrap();
            assert!((rows[0].lower.value - 2.0).abs() < 1e-12 && (rows[0].upper.value - 2.0).abs() < 1e-12);
            assert!(rows[0].pass, "{rows:?}");
        }
    }

    #[test]
    fn logistic_limit_and_monotonicity() {
        assert!((logistic_cdf(64.0, &[1.0, 1.0]).unwrap() - (-1.0f64).exp()).abs() < 0.006);
        let t = SpectralModel::moving_window(2, 0, 2).bind(&sites(&[0, 1, 2])).unwrap().as_weight_table().unwrap();
        let grid = [0.3, 0.8, 1.5, 4.0];
        for &a in &grid {
            let mut prev = 0.0;
            for &b in &grid {
                let v = reich_shaby_cdf(&t, 2.0, &[a, b, 1.0]).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn mc_examples() {
        let b = SpectralModel::ConstantOne.bind(&sites(&[0, 1])).unwrap();
        let inf = stdf_mc(&b, &[0.3, 2.5], 10, 0).unwrap();
        assert_eq!((inf.value, inf.se), (2.5, 0.0));
        let v = lift_to_spectral(&b, p(2.0)).unwrap();
        assert!((stdf_mc(&v, &[1.0, 1.0], 400_000, 1).unwrap().value - 2.0f64.sqrt()).abs() < 0.01);
        assert!(stdf_mc(&v, &[1.0, 0.0], 400_000, 2).unwrap().agrees_with(1.0, 3.0, 0.0));
        let f = fidi_cdf_mc(&b, p(2.0), &[1.0, 1.0], 10, 3).unwrap();
        assert!((f.value - 0.243117).abs() < 1e-6);
        let k = SpectralModel::GaussianKernel { centers: vec![0.0, 2.0], bandwidth: 1.0 }.bind(&sites(&[1])).unwrap();
        assert!((fidi_cdf_mc(&k, p(3.0), &[1.0], 100_000, 4).unwrap().value - (-1.0f64).exp()).abs() < 0.01);
    }

    #[test]
    fn denoised_mixing_bound_is_larger() {
        let s = sites(&[0, 1, 2]);
        let model = SpectralModel::moving_window(2, 0, 2);
        let t = model.bind(&s).unwrap().as_weight_table().unwrap();
        let l = StdfEvaluator::ReichShaby { weights: t.clone(), p: p(2.0) };
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let th: Vec<f64> = pairs.iter().map(|&(i, j)| l.extremal_coefficient(&[i, j]).unwrap().value).collect();
        let mm: Vec<f64> = pairs.iter().map(|&(i, j)| t.mean_max(i, j)).collect();
        assert!(beta_mixing_bound(&mm) >= beta_mixing_bound(&th));
        assert!((beta_mixing_bound(&[2.0f64.sqrt()]) - 2.343146).abs() < 1e-6);
    }

    #[test]
    fn mixing_bound_examples() {
        assert_eq!(beta_mixing_bound(&[2.0, 2.1, 2.0]), 0.0);
        assert!((beta_mixing_bound(&[1.5, 1.9, 2.0]) - 2.4).abs() < 1e-12);
    }

    fn table_strategy() -> impl Strategy<Value = WeightTable> {
        (1usize..4, 1usize..4).prop_flat_map(|(atoms, n)| {
            prop::collection::vec(0.01f64..1.0, atoms * n).prop_map(move |raw| {
                let mut rows = vec![vec![0.0; n]; atoms];
                for i in 0..n {
                    let s: f64 = (0..atoms).map(|l| raw[l * n + i]).sum();
                    for (l, row) in rows.iter_mut().enumerate() {
                        row[i] = raw[l * n + i] / s;
                    }
                }
                WeightTable::from_rows(&rows, n).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn rs_cdf_is_max_stable(t in table_strategy(), pv in 1.05f64..8.0, m in 1.0f64..10.0, seed in 0u64..1000) {
            let n = t.n_sites();
            let x: Vec<f64> = (0..n).map(|i| 0.3 + ((seed + i as u64 * 7919) % 97) as f64 / 20.0).collect();
            let mx: Vec<f64> = x.iter().map(|v| v * m).collect();
            let a = reich_shaby_cdf(&t, pv, &mx).unwrap();
            let b = reich_shaby_cdf(&t, pv, &x).unwrap().powf(1.0 / m);
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn stdf_between_max_and_sum(t in table_strategy(), pv in 1.05f64..8.0, x in prop::collection::vec(0.0f64..5.0, 3)) {
            let n = t.n_sites();
            let x = &x[..n];
            let l = StdfEvaluator::ReichShaby { weights: t, p: PIndex::new(pv).unwrap() };
            let v = l.eval(x).unwrap().value;
            let mx = x.iter().copied().fold(0.0, f64::max);
            let sum: f64 = x.iter().sum();
            prop_assert!(v >= mx - 1e-12 && v <= sum + 1e-12);
            let v2 = l.eval(&x.iter().map(|a| 2.5 * a).collect::<Vec<_>>()).unwrap().value;
            prop_assert!((v2 - 2.5 * v).abs() < 1e-12 * (1.0 + v));
        }
    }
}
