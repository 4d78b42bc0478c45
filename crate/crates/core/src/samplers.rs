//! Random variates: α-Fréchet noise, positive stable laws and the Poisson
//! points `{Aᵢ}` with intensity `a⁻² da`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::rng::RngStream;

/// Inverse transform of the α-Fréchet law: `(-ln u)^{-1/α}`.
///
/// Monotone in `u`, so common random numbers give coupled draws across `α`.
/// For `α = ∞` every draw equals 1.
pub fn frechet_from_uniform(alpha: f64, u: f64) -> f64 {
    if alpha.is_infinite() {
        1.0
    } else {
        (-u.ln()).powf(-1.0 / alpha)
    }
}

/// α-Fréchet distribution, `P(X ≤ x) = exp(-x^{-α})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frechet {
    alpha: f64,
}

impl Frechet {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            bail!(Domain, "Fréchet shape must be positive or infinite, got {alpha}");
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Distribution<f64> for Frechet {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.alpha.is_infinite() {
            return 1.0;
        }
        let u: f64 = Open01.sample(rng);
        frechet_from_uniform(self.alpha, u)
    }
}

/// `count` i.i.d. α-Fréchet draws from `stream`.
pub fn sample_frechet(alpha: f64, count: usize, stream: RngStream) -> Result<Vec<f64>> {
    let dist = Frechet::new(alpha)?;
    if count == 0 {
        bail!(Domain, "count must be at least 1");
    }
    let mut rng = stream.rng();
    Ok((0..count).map(|_| dist.sample(&mut rng)).collect())
}

/// Positive α-stable law with Laplace transform `E e^{-tT} = e^{-t^α}`,
/// `α ∈ (0, 1)`, sampled with Kanter's method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveStable {
    alpha: f64,
}

impl PositiveStable {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            bail!(Domain, "positive stable index must lie in (0, 1), got {alpha}");
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `ln T` from Kanter's transform of `u ∈ (0, π)` and a unit
    /// exponential `e`. For small `α`, `T` itself overflows long before
    /// `ln T` loses precision.
    pub fn ln_from_parts(&self, u: f64, e: f64) -> f64 {
        let a = self.alpha;
        let b = 1.0 - a;
        // ln of Zolotarev's function sin(au)^{a/b} sin(bu) / sin(u)^{1/b}
        let ln_zolotarev = (a / b) * (a * u).sin().ln() + (b * u).sin().ln() - u.sin().ln() / b;
        (ln_zolotarev - e.ln()) * (b / a)
    }

    pub fn sample_ln<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = Open01.sample(rng);
        let e: f64 = Exp1.sample(rng);
        self.ln_from_parts(PI * u, e)
    }
}

impl Distribution<f64> for PositiveStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_ln(rng).exp()
    }
}

/// `count` i.i.d. positive α-stable draws from `stream`.
pub fn sample_positive_stable(alpha: f64, count: usize, stream: RngStream) -> Result<Vec<f64>> {
    let dist = PositiveStable::new(alpha)?;
    if count == 0 {
        bail!(Domain, "count must be at least 1");
    }
    let mut rng = stream.rng();
    Ok((0..count).map(|_| dist.sample(&mut rng)).collect())
}

/// When to stop generating Poisson points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Keep exactly the `n` largest points.
    FixedCount(usize),
    /// Keep every point `Aᵢ ≥ ε`; stop at the first `Aᵢ < ε`.
    Threshold(f64),
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StopRule::FixedCount(0) => bail!(Domain, "fixed point count must be at least 1"),
            StopRule::Threshold(eps) if !(eps > 0.0) => {
                bail!(Domain, "threshold must be positive, got {eps}")
            }
            _ => Ok(()),
        }
    }
}

/// Decreasing points `A₁ > A₂ > …` of a Poisson process with intensity
/// `a⁻² da`, generated as `Aᵢ = 1/Γᵢ` from unit-rate arrival times `Γᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonPoints {
    pub points: Vec<f64>,
    pub arrivals: Vec<f64>,
    pub truncation_index: usize,
}

pub fn sample_poisson_points<R: Rng + ?Sized>(rule: StopRule, rng: &mut R) -> Result<PoissonPoints> {
    rule.validate()?;
    let mut points = Vec::new();
    let mut arrivals = Vec::new();
    for (gamma, a) in PoissonArrivals::new(rng) {
        match rule {
            StopRule::FixedCount(n) if points.len() == n => break,
            StopRule::Threshold(eps) if a < eps => break,
            _ => {}
        }
        arrivals.push(gamma);
        points.push(a);
    }
    let truncation_index = points.len();
    Ok(PoissonPoints { points, arrivals, truncation_index })
}

/// Unbounded iterator over `(Γᵢ, Aᵢ = 1/Γᵢ)`.
pub struct PoissonArrivals<'a, R: ?Sized> {
    rng: &'a mut R,
    gamma: f64,
}

impl<'a, R: Rng + ?Sized> PoissonArrivals<'a, R> {
    pub fn new(rng: &'a mut R) -> Self {
        Self { rng, gamma: 0.0 }
    }

    /// Next point only.
    pub fn next_point(&mut self) -> f64 {
        let e: f64 = Exp1.sample(self.rng);
        self.gamma += e;
        1.0 / self.gamma
    }

    pub fn rng(&mut self) -> &mut R {
        self.rng
    }
}

impl<R: Rng + ?Sized> Iterator for PoissonArrivals<'_, R> {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        let a = self.next_point();
        Some((self.gamma, a))
    }
}
