//! Monte Carlo summaries and goodness-of-fit statistics.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use serde::{Deserialize, Serialize};

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    /// Number of Monte Carlo replicates; 0 for closed-form values.
    pub n: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0, n: 0 }
    }

    /// Half-width of the normal-approximation 99% confidence interval.
    pub fn half_width(&self) -> f64 {
        Z99 * self.se
    }

    pub fn ci(&self) -> (f64, f64) {
        let h = self.half_width();
        (self.value - h, self.value + h)
    }

    /// `|value - target| <= k·se + tol`.
    pub fn agrees_with(&self, target: f64, k: f64, tol: f64) -> bool {
        (self.value - target).abs() <= k * self.se + tol
    }

    pub fn map_scale(self, factor: f64) -> Self {
        Self { value: self.value * factor, se: self.se * factor.abs(), n: self.n }
    }
}

/// Streaming mean and variance (Welford), mergeable across workers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanVar {
    n: usize,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanVar) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> Estimate {
        let se = if self.n == 0 { f64::INFINITY } else { (self.variance() / self.n as f64).sqrt() };
        Estimate { value: self.mean, se, n: self.n }
    }
}

impl FromIterator<f64> for MeanVar {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MeanVar::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// CDF of the α-Fréchet law, `exp(-x^{-α})`; `α = ∞` is the unit step at 1.
pub fn frechet_cdf(alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if alpha.is_infinite() {
        if x >= 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (-x.powf(-alpha)).exp()
    }
}

fn sorted(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// One-sample Kolmogorov–Smirnov distance between `data` and `cdf`.
pub fn ks_one_sample(data: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let xs = sorted(data);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let xa = sorted(a);
    let xb = sorted(b);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let t = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= t {
            i += 1;
        }
        while j < xb.len() && xb[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, -3.0, 7.25, 0.5];
        let acc: MeanVar = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 6.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 5.0;
        assert!((acc.mean() - mean).abs() < 1e-14);
        assert!((acc.variance() - var).abs() < 1e-12);

        let mut left: MeanVar = xs[..2].iter().copied().collect();
        let right: MeanVar = xs[2..].iter().copied().collect();
        left.merge(&right);
        assert!((left.mean() - mean).abs() < 1e-14);
        assert!((left.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn ks_statistics() {
        // Uniform grid midpoints against the uniform CDF: D = 1/(2n).
        let n = 10;
        let data: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_one_sample(&data, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.05).abs() < 1e-12);

        assert_eq!(ks_two_sample(&data, &data), 0.0);
        let shifted: Vec<f64> = data.iter().map(|x| x + 10.0).collect();
        assert_eq!(ks_two_sample(&data, &shifted), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0], &vec![1.5]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn frechet_cdf_values() {
        assert!((frechet_cdf(1.0, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((frechet_cdf(1.0, 2.0) - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert_eq!(frechet_cdf(f64::INFINITY, 0.999), 0.0);
        assert_eq!(frechet_cdf(f64::INFINITY, 1.0), 1.0);
    }
}
