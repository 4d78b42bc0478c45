//! Switching between equivalent representations of the same field.
//!
//! - [`lift_to_spectral`]: an ℓᵖ representation with spectral function `W`
//!   is the classical (`p = ∞`) representation with
//!   `V = U W / Γ(1 - 1/p)`, `U` i.i.d. `p`-Fréchet.
//! - [`transform_p_to_q`]: for `p < q < ∞` the same field has an ℓ^q
//!   representation with
//!   `W_q(s) = Γ(1-1/q)/Γ(1-1/p) · T(s)^{1/q} · W(s)`, `T(s)` i.i.d.
//!   positive (p/q)-stable.

#[allow(unused_imports)]
use num_traits::Float;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp1;

use crate::error::{bail, Result};
use crate::models::PathSampler;
use crate::pindex::PIndex;
use crate::samplers::{Frechet, PositiveStable};
use crate::sites::SiteSet;
use crate::special::{gamma, lp_normalizer};

/// Spectral functions `V = U·W/Γ(1-1/p)` of the lifted representation.
#[derive(Debug, Clone)]
pub struct LiftedSpectral<S> {
    source: S,
    p: PIndex,
    normalizer: f64,
    noise: Frechet,
}

/// Lifts an ℓᵖ spectral function to the classical representation. At
/// `p = ∞` the lift is the identity.
pub fn lift_to_spectral<S: PathSampler>(source: S, p: PIndex) -> Result<LiftedSpectral<S>> {
    Ok(LiftedSpectral { source, p, normalizer: lp_normalizer(p.get()), noise: Frechet::new(p.get())? })
}

impl<S> LiftedSpectral<S> {
    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn p(&self) -> PIndex {
        self.p
    }
}

impl<S: PathSampler> PathSampler for LiftedSpectral<S> {
    fn sites(&self) -> &SiteSet {
        self.source.sites()
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        self.source.sample_into(rng, out);
        if self.p.is_infinite() {
            return;
        }
        for v in out.iter_mut() {
            let u: f64 = self.noise.sample(rng);
            *v *= u / self.normalizer;
        }
    }

    fn bound(&self) -> Option<f64> {
        if self.p.is_infinite() {
            self.source.bound()
        } else {
            None
        }
    }

    fn moment(&self, site: usize, order: f64) -> Option<f64> {
        if self.p.is_infinite() {
            return self.source.moment(site, order);
        }
        let p = self.p.get();
        if order >= p {
            return None;
        }
        // E U^k = Γ(1 - k/p) for p-Fréchet U.
        let m = gamma(1.0 - order / p) / self.normalizer.powf(order) * self.source.moment(site, order)?;
        m.is_finite().then_some(m)
    }
}

/// Spectral function `W_q` of the ℓ^q representation of an ℓᵖ field.
#[derive(Debug, Clone)]
pub struct TransformedToQ<S> {
    source: S,
    p: f64,
    q: f64,
    factor: f64,
    stable: PositiveStable,
}

pub fn transform_p_to_q<S: PathSampler>(source: S, p: f64, q: f64) -> Result<TransformedToQ<S>> {
    if !(p > 1.0 && p.is_finite()) {
        bail!(Domain, "source index p must be finite and > 1, got {p}");
    }
    if !(q > p && q.is_finite()) {
        bail!(Domain, "target index q must satisfy p < q < ∞, got p = {p}, q = {q}");
    }
    Ok(TransformedToQ {
        source,
        p,
        q,
        factor: lp_normalizer(q) / lp_normalizer(p),
        stable: PositiveStable::new(p / q)?,
    })
}

impl<S> TransformedToQ<S> {
    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// One draw of `T^{1/q}`, `T` positive (p/q)-stable.
    pub fn stable_root<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (self.stable.sample_ln(rng) / self.q).exp()
    }
}

impl<S: PathSampler> PathSampler for TransformedToQ<S> {
    fn sites(&self) -> &SiteSet {
        self.source.sites()
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        self.source.sample_into(rng, out);
        for w in out.iter_mut() {
            *w *= self.factor * self.stable_root(rng);
        }
    }

    fn moment(&self, site: usize, order: f64) -> Option<f64> {
        // E T^{k/q} = Γ(1 - k/p) / Γ(1 - k/q), finite only for k < p.
        if order >= self.p {
            return None;
        }
        let t = gamma(1.0 - order / self.p) / gamma(1.0 - order / self.q);
        let m = self.factor.powf(order) * t * self.source.moment(site, order)?;
        m.is_finite().then_some(m)
    }
}

/// Paths multiplied by one independent `Y ~ Exp(1)` each. Leaves the law
/// of every field built from them unchanged; used to test that estimators
/// depend on the field and not on the representation.
#[derive(Debug, Clone)]
pub struct MeanOneMultiplier<S> {
    source: S,
}

impl<S> MeanOneMultiplier<S> {
    pub fn new(source: S) -> Self {
        Self { source }
    }
}

impl<S: PathSampler> PathSampler for MeanOneMultiplier<S> {
    fn sites(&self) -> &SiteSet {
        self.source.sites()
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        self.source.sample_into(rng, out);
        let y: f64 = Exp1.sample(rng);
        for w in out.iter_mut() {
            *w *= y;
        }
    }

    fn moment(&self, site: usize, order: f64) -> Option<f64> {
        Some(gamma(1.0 + order) * self.source.moment(site, order)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{simulate_matrix, LpSimulator, MaxSimulator, Truncation};
    use crate::models::SpectralModel;
    use crate::rng::RngStream;
    use crate::stats::{frechet_cdf, ks_one_sample, ks_two_sample, MeanVar};
    use alloc::vec;
    use alloc::vec::Vec;

    fn sites(labels: &[i64]) -> SiteSet {
        SiteSet::new(labels.to_vec()).unwrap()
    }

    fn mean_path<S: PathSampler>(s: &S, m: usize, seed: u64) -> Vec<MeanVar> {
        let mut acc = vec![MeanVar::new(); s.len()];
        let mut path = vec![0.0; s.len()];
        for k in 0..m as u64 {
            s.sample_into(&mut RngStream::new(seed, k).rng(), &mut path);
            for (a, v) in acc.iter_mut().zip(&path) {
                a.push(*v);
            }
        }
        acc
    }

    #[test]
    fn lift_constant_one_has_unit_mean() {
        let b = SpectralModel::ConstantOne.bind(&sites(&[0])).unwrap();
        let v = lift_to_spectral(&b, PIndex::new(2.0).unwrap()).unwrap();
        let acc = mean_path(&v, 1_000_000, 1);
        assert!((acc[0].mean() - 1.0).abs() < 0.005, "{}", acc[0].mean());
    }

    #[test]
    fn lift_at_infinity_is_identity() {
        let model = SpectralModel::GaussianKernel { centers: vec![0.0, 2.0], bandwidth: 1.0 };
        let b = model.bind(&sites(&[0, 1])).unwrap();
        let v = lift_to_spectral(&b, PIndex::INFINITY).unwrap();
        for k in 0..10 {
            assert_eq!(v.sample_vec(RngStream::new(2, k)), b.sample(RngStream::new(2, k)));
        }
        assert_eq!(v.bound(), b.bound());
    }

    #[test]
    fn transform_constant_one_has_unit_mean() {
        let b = SpectralModel::ConstantOne.bind(&sites(&[0])).unwrap();
        let w4 = transform_p_to_q(&b, 2.0, 4.0).unwrap();
        let acc = mean_path(&w4, 1_000_000, 3);
        assert!((acc[0].mean() - 1.0).abs() < 0.01, "{}", acc[0].mean());
        assert!(w4.moment(0, 1.0).is_some_and(|m| (m - 1.0).abs() < 1e-12));
        assert!(w4.moment(0, 4.0).is_none());
    }

    #[test]
    fn transform_domain() {
        let b = SpectralModel::ConstantOne.bind(&sites(&[0])).unwrap();
        assert!(transform_p_to_q(&b, 2.0, 2.0).is_err());
        assert!(transform_p_to_q(&b, 2.0, 1.5).is_err());
        assert!(transform_p_to_q(&b, 2.0, f64::INFINITY).is_err());
    }

    #[test]
    fn stable_root_approaches_frechet_as_q_grows() {
        let b = SpectralModel::ConstantOne.bind(&sites(&[0])).unwrap();
        let mut last = f64::INFINITY;
        for q in [8.0, 32.0, 128.0] {
            let t = transform_p_to_q(&b, 2.0, q).unwrap();
            let draws: Vec<f64> = (0..100_000u64).map(|k| t.stable_root(&mut RngStream::new(4, k).rng())).collect();
            let d = ks_one_sample(&draws, |x| frechet_cdf(2.0, x));
            assert!(d < last, "q = {q}: {d} vs {last}");
            last = d;
        }
        assert!(last < 0.02);
    }

    #[test]
    fn lifted_max_field_matches_lp_field() {
        let model = SpectralModel::moving_window(2, 0, 1);
        let b = model.bind(&sites(&[0, 1])).unwrap();
        let v = lift_to_spectral(&b, PIndex::new(2.0).unwrap()).unwrap();
        let max_field = MaxSimulator::truncated(&v, 2e-3).unwrap();
        let lp = LpSimulator::new(&b, 2.0, Truncation::threshold(1e-3)).unwrap();
        let a = simulate_matrix(&max_field, 5, 100_000);
        let c = simulate_matrix(&lp, 6, 100_000);
        for i in 0..2 {
            assert!(ks_two_sample(&a.column(i), &c.column(i)) < 0.02);
        }
        assert!(ks_two_sample(&a.subset_max(&[0, 1]), &c.subset_max(&[0, 1])) < 0.02);
    }

    #[test]
    fn transform_then_lift_matches_direct_lift() {
        let model = SpectralModel::moving_window(2, 0, 1);
        let b = model.bind(&sites(&[0, 1])).unwrap();
        let direct = lift_to_spectral(&b, PIndex::new(2.0).unwrap()).unwrap();
        let w4 = transform_p_to_q(&b, 2.0, 4.0).unwrap();
        let composed = lift_to_spectral(&w4, PIndex::new(4.0).unwrap()).unwrap();
        let a = simulate_matrix(&MaxSimulator::truncated(&direct, 2e-3).unwrap(), 8, 50_000);
        let c = simulate_matrix(&MaxSimulator::truncated(&composed, 2e-3).unwrap(), 9, 50_000);
        assert!(ks_two_sample(&a.column(0), &c.column(0)) < 0.02);
        assert!(ks_two_sample(&a.subset_max(&[0, 1]), &c.subset_max(&[0, 1])) < 0.02);
    }

    #[test]
    fn randomized_paths_keep_unit_mean() {
        let b = SpectralModel::ConstantOne.bind(&sites(&[0, 1])).unwrap();
        let y = MeanOneMultiplier::new(&b);
        let acc = mean_path(&y, 200_000, 7);
        assert!(acc.iter().all(|a| a.estimate().agrees_with(1.0, 3.0, 0.0)));
    }

    trait SampleVec {
        fn sample_vec(&self, stream: RngStream) -> Vec<f64>;
    }

    impl<S: PathSampler> SampleVec for S {
        fn sample_vec(&self, stream: RngStream) -> Vec<f64> {
            let mut out = vec![0.0; self.len()];
            self.sample_into(&mut stream.rng(), &mut out);
            out
        }
    }
}
