//! Conditionally negative definite checks for `f_p(x) = l(x^{1/p})`.
//!
//! An ℓᵖ representation exists iff `f_p` is conditionally negative definite
//! on `[0,∞)ⁿ`: `Σᵢⱼ aᵢaⱼ f_p(xᵢ + xⱼ) ≤ 0` whenever `Σ aᵢ = 0`. With
//! `P = I - 11ᵀ/m` this is `λ_max(P M P) ≤ 0` for `M_ij = f_p(xᵢ + xⱼ)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::pindex::PIndex;
use crate::rng::RngStream;
use crate::stats::{Estimate, Z99};
use crate::stdf::StdfEvaluator;

/// Default eigenvalue tolerance, relative to `max(1, ‖M‖_F)`.
pub const DEFAULT_EIG_TOL: f64 = 1e-8;
/// Default bisection tolerance of [`pmin_search`].
pub const DEFAULT_BISECT_TOL: f64 = 0.02;
/// Largest finite upper bracket tried before reporting an unbounded `p_min`.
pub const P_CAP: f64 = 1024.0;

/// `f_p(x) = l(x^{1/p})`.
#[derive(Debug, Clone, Copy)]
pub struct Fp<'a> {
    stdf: &'a StdfEvaluator,
    p: f64,
}

pub fn build_fp(stdf: &StdfEvaluator, p: f64) -> Result<Fp<'_>> {
    if !(p > 0.0) {
        bail!(Domain, "p must be positive, got {p}");
    }
    Ok(Fp { stdf, p })
}

impl Fp<'_> {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.stdf.dim()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Estimate> {
        let y: Vec<f64> = x.iter().map(|v| v.powf(1.0 / self.p)).collect();
        self.stdf.eval(&y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NoViolationFound,
    Violation,
    Inconclusive,
}

/// Outcome of one CND test, with enough data to re-verify it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CndCertificate {
    pub p: f64,
    pub points: Vec<Vec<f64>>,
    pub verdict: Verdict,
    /// Centered eigenvector of `λ_max`, scaled to `max|aᵢ| = 1` with its
    /// first nonzero entry positive.
    pub weights: Vec<f64>,
    /// `aᵀ M a` for [`Self::weights`].
    pub quadratic_form: f64,
    pub lambda_max: f64,
    /// Eigenvalues above this count as violations.
    pub threshold: f64,
    /// 99% half-width propagated from Monte Carlo error; 0 for exact `f`.
    pub lambda_ci: f64,
    /// For inconclusive Monte Carlo tests, replicates needed for a decision.
    pub required_replicates: Option<usize>,
}

impl CndCertificate {
    /// Recomputes `aᵀ M a` on the stored points.
    pub fn recompute_quadratic_form(&self, f: &Fp<'_>) -> Result<f64> {
        let (m, _) = build_matrix(f, &self.points)?;
        Ok(quadratic_form(&m, &self.weights))
    }
}

fn build_matrix(f: &Fp<'_>, points: &[Vec<f64>]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let k = points.len();
    let n = f.dim();
    if k < 2 {
        bail!(Domain, "need at least two points");
    }
    if points.iter().any(|x| x.len() != n) {
        bail!(Domain, "points must have {n} coordinates");
    }
    let mut m = DMatrix::zeros(k, k);
    let mut se = DMatrix::zeros(k, k);
    let mut sum = vec![0.0; n];
    for i in 0..k {
        for j in 0..=i {
            for ((s, a), b) in sum.iter_mut().zip(&points[i]).zip(&points[j]) {
                *s = a + b;
            }
            let e = f.eval(&sum)?;
            m[(i, j)] = e.value;
            m[(j, i)] = e.value;
            se[(i, j)] = e.se;
            se[(j, i)] = e.se;
        }
    }
    Ok((m, se))
}

fn quadratic_form(m: &DMatrix<f64>, a: &[f64]) -> f64 {
    let k = a.len();
    (0..k).map(|i| (0..k).map(|j| a[i] * a[j] * m[(i, j)]).sum::<f64>()).sum()
}

/// Tests `f` on one point set. Exact `f`: violation iff
/// `λ_max > eig_tol·max(1, ‖M‖_F)`. Monte Carlo `f`: violation iff
/// `λ_max` also exceeds three propagated 99% half-widths, and inconclusive
/// when that noise level exceeds the spectral radius of `P M P`.
pub fn cnd_test(f: &Fp<'_>, points: &[Vec<f64>], eig_tol: f64) -> Result<CndCertificate> {
    if !(eig_tol >= 0.0) {
        bail!(Domain, "eigenvalue tolerance must be nonnegative");
    }
    let (m, se) = build_matrix(f, points)?;
    let k = points.len();
    let centering = DMatrix::<f64>::identity(k, k) - DMatrix::from_element(k, k, 1.0 / k as f64);
    let pmp = &centering * &m * &centering;
    let pmp = (&pmp + pmp.transpose()) * 0.5;
    let eig = SymmetricEigen::new(pmp);
    let (imax, &lambda_max) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least two eigenvalues");
    let radius = eig.eigenvalues.iter().fold(0.0f64, |r, v| r.max(v.abs()));

    let mut a: Vec<f64> = eig.eigenvectors.column(imax).iter().copied().collect();
    let mean = a.iter().sum::<f64>() / k as f64;
    a.iter_mut().for_each(|v| *v -= mean);
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale > 0.0 {
        let tiny = 1e-9 * scale;
        let sign = a.iter().find(|v| v.abs() > tiny).map_or(1.0, |v| v.signum());
        a.iter_mut().for_each(|v| {
            *v *= sign / scale;
            if v.abs() <= 1e-12 {
                *v = 0.0;
            }
        });
    }
    let q = quadratic_form(&m, &a);

    let lambda_ci = Z99 * se.iter().map(|s| s * s).sum::<f64>().sqrt();
    let mut threshold = eig_tol * m.norm().max(1.0);
    let mut required = None;
    let verdict = if lambda_ci == 0.0 {
        if lambda_max > threshold {
            Verdict::Violation
        } else {
            Verdict::NoViolationFound
        }
    } else {
        threshold = threshold.max(3.0 * lambda_ci);
        if lambda_max > threshold {
            Verdict::Violation
        } else if 3.0 * lambda_ci > radius {
            let n = se.iter().zip(m.iter()).find(|(s, _)| **s > 0.0).map_or(0, |_| {
                let reps = self_replicates(f);
                let ratio = 6.0 * lambda_ci / radius.max(f64::MIN_POSITIVE);
                (reps as f64 * ratio * ratio).ceil().min(usize::MAX as f64) as usize
            });
            required = Some(n);
            Verdict::Inconclusive
        } else {
            Verdict::NoViolationFound
        }
    };
    Ok(CndCertificate {
        p: f.p,
        points: points.to_vec(),
        verdict,
        weights: a,
        quadratic_form: q,
        lambda_max,
        threshold,
        lambda_ci,
        required_replicates: required,
    })
}

fn self_replicates(f: &Fp<'_>) -> usize {
    match f.stdf {
        StdfEvaluator::MonteCarlo(b) => b.replicates(),
        _ => 0,
    }
}

/// Point sets for [`pmin_search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub description: String,
    pub sets: Vec<Vec<Vec<f64>>>,
}

/// Random sets in the default battery.
pub const RANDOM_SETS: usize = 64;

impl Battery {
    /// All pairs `{eᵢ, eⱼ}`, block splits `{1_{<k}, 1_{≥k}}`, singleton
    /// versus rest `{eᵢ, 1 - eᵢ}`, and [`RANDOM_SETS`] sets of 2 to 8 points
    /// with coordinates on the grid `2^{j/2}`, `|j| ≤ 8`, drawn from `seed`.
    pub fn default_for(n: usize, seed: u64) -> Self {
        let unit = |i: usize| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        };
        let mut sets = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                sets.push(vec![unit(i), unit(j)]);
            }
        }
        for k in 1..n {
            let a: Vec<f64> = (0..n).map(|i| if i < k { 1.0 } else { 0.0 }).collect();
            let b: Vec<f64> = a.iter().map(|v| 1.0 - v).collect();
            sets.push(vec![a, b]);
        }
        if n > 2 {
            for i in 0..n {
                let e = unit(i);
                let rest = e.iter().map(|v| 1.0 - v).collect();
                sets.push(vec![e, rest]);
            }
        }
        let mut rng = RngStream::new(seed, 0).rng();
        for _ in 0..RANDOM_SETS {
            let size = rng.random_range(2..=8);
            sets.push(
                (0..size).map(|_| (0..n).map(|_| 2.0.powf(rng.random_range(-8i32..=8) as f64 / 2.0)).collect()).collect(),
            );
        }
        Self {
            description: alloc::format!(
                "pairs, block splits, singleton-vs-rest and {RANDOM_SETS} random sets (n = {n}, seed = {seed})"
            ),
            sets,
        }
    }
}

/// Battery result at one `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryStep {
    pub p: f64,
    pub verdict: Verdict,
    /// First violating certificate, else the one with the largest `λ_max`.
    pub certificate: CndCertificate,
}

pub fn run_battery(stdf: &StdfEvaluator, p: f64, battery: &Battery, eig_tol: f64) -> Result<BatteryStep> {
    let f = build_fp(stdf, p)?;
    let mut worst: Option<CndCertificate> = None;
    let mut inconclusive = false;
    for set in &battery.sets {
        let c = cnd_test(&f, set, eig_tol)?;
        match c.verdict {
            Verdict::Violation => return Ok(BatteryStep { p, verdict: Verdict::Violation, certificate: c }),
            Verdict::Inconclusive => inconclusive = true,
            Verdict::NoViolationFound => {}
        }
        if worst.as_ref().is_none_or(|w| c.lambda_max > w.lambda_max) {
            worst = Some(c);
        }
    }
    let Some(certificate) = worst else { bail!(Domain, "empty battery") };
    let verdict = if inconclusive { Verdict::Inconclusive } else { Verdict::NoViolationFound };
    Ok(BatteryStep { p, verdict, certificate })
}

/// `ln 2 / ln θ`: a pair with extremal coefficient `θ` forces `p_min` at
/// least this large.
pub fn pairwise_p_bound(theta: f64) -> f64 {
    if theta >= 2.0 {
        1.0
    } else if theta <= 1.0 {
        f64::INFINITY
    } else {
        core::f64::consts::LN_2 / theta.ln()
    }
}

/// Bracket `p_lo ≤ p_min ≤ p_hi` for the smallest ℓᵖ index. `p_lo` is a
/// battery violation (or the pairwise bound); `p_hi` passed the battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PminResult {
    pub p_lo: PIndex,
    pub p_hi: PIndex,
    pub pairwise_bound: f64,
    pub battery: String,
    pub steps: Vec<BatteryStep>,
    /// Some step was inconclusive and was treated as passing.
    pub inconclusive: bool,
}

impl PminResult {
    pub fn width(&self) -> f64 {
        self.p_hi.get() - self.p_lo.get()
    }

    pub fn contains(&self, p: f64) -> bool {
        self.p_lo.get() <= p && p <= self.p_hi.get()
    }
}

fn sanity_check(stdf: &StdfEvaluator) -> Result<()> {
    let n = stdf.dim();
    let slack = |e: &Estimate| 5.0 * e.se + 1e-9 * (1.0 + e.value.abs());
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let v = stdf.eval(&e)?;
        if (v.value - 1.0).abs() > slack(&v) {
            bail!(Input, "l(e_{i}) = {} instead of 1", v.value);
        }
    }
    let x: Vec<f64> = (0..n).map(|i| 0.5 + i as f64 * 0.37).collect();
    let a = stdf.eval(&x)?;
    let b = stdf.eval(&x.iter().map(|v| 3.0 * v).collect::<Vec<_>>())?;
    if (b.value - 3.0 * a.value).abs() > slack(&b) + 3.0 * slack(&a) {
        bail!(Input, "l is not homogeneous: l(3x) = {}, 3 l(x) = {}", b.value, 3.0 * a.value);
    }
    Ok(())
}

fn passes(step: &BatteryStep) -> bool {
    step.verdict != Verdict::Violation
}

/// Bisection for the smallest `p` whose `f_p` passes `battery`.
pub fn pmin_search(stdf: &StdfEvaluator, battery: &Battery, bisect_tol: f64, eig_tol: f64) -> Result<PminResult> {
    if !(bisect_tol > 0.0) {
        bail!(Domain, "bisection tolerance must be positive");
    }
    sanity_check(stdf)?;
    let n = stdf.dim();
    let mut bound = 1.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let th = stdf.extremal_coefficient(&[i, j])?.value;
            bound = bound.max(pairwise_p_bound(th));
        }
    }
    let mut steps = Vec::new();
    let mut inconclusive = false;
    let mut run = |p: f64, steps: &mut Vec<BatteryStep>| -> Result<bool> {
        let s = run_battery(stdf, p, battery, eig_tol)?;
        inconclusive |= s.verdict == Verdict::Inconclusive;
        let ok = passes(&s);
        steps.push(s);
        Ok(ok)
    };
    let done = |lo: f64, hi: f64, steps: Vec<BatteryStep>, inconclusive: bool| PminResult {
        p_lo: PIndex::new(lo.max(1.0 + f64::EPSILON)).unwrap_or(PIndex::INFINITY),
        p_hi: PIndex::new(hi).unwrap_or(PIndex::INFINITY),
        pairwise_bound: bound,
        battery: battery.description.clone(),
        steps,
        inconclusive,
    };
    if bound > P_CAP {
        return Ok(done(f64::INFINITY, f64::INFINITY, steps, inconclusive));
    }
    let mut lo = bound;
    let mut hi;
    if bound <= 1.0 {
        // e.g. independence: p slightly above 1 already passes
        hi = 1.0 + bisect_tol;
        if !run(hi, &mut steps)? {
            lo = hi;
            hi = f64::NAN;
        }
    } else {
        hi = f64::NAN;
    }
    if hi.is_nan() {
        hi = 4.0f64.max(2.0 * bound);
        while !run(hi, &mut steps)? {
            lo = hi;
            hi *= 2.0;
            if hi > P_CAP {
                return Ok(done(lo, f64::INFINITY, steps, inconclusive));
            }
        }
    }
    while hi - lo > bisect_tol {
        let mid = 0.5 * (lo + hi);
        if run(mid, &mut steps)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(done(lo, hi, steps, inconclusive))
}
