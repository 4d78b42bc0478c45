//! Simulation and analysis of simple max-stable processes written as
//! pointwise ℓᵖ norms of Poisson-weighted spectral functions.
//!
//! A simple max-stable field is simulated as
//!
//! ```text
//! X(s) = U(s) / Γ(1 - 1/p) · ( Σᵢ (Aᵢ Wᵢ(s))^p )^{1/p}
//! ```
//!
//! where `Aᵢ` are the points of a Poisson process with intensity `a⁻² da`,
//! `Wᵢ` are i.i.d. mean-one spectral functions and `U(s)` is independent
//! `p`-Fréchet noise. `p = ∞` recovers the classical spectral representation
//! `X(s) = maxᵢ Aᵢ Wᵢ(s)`.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, parallel drivers
//! and the command-line tool live in the `lpmax` crate.
//!
//! Module map:
//!
//! - [`samplers`]: Fréchet and positive stable variates, Poisson points.
//! - [`models`]: spectral-function laws `W` bound to a [`SiteSet`].
//! - [`field`]: ℓᵖ, Reich–Shaby and `p = ∞` field simulators.
//! - [`transform`]: lifting to the classical representation and ℓᵖ → ℓ^q.
//! - [`stdf`]: stable tail dependence functions, CDFs, extremal coefficients.
//! - [`cnd`]: conditional negative definiteness tests and `p_min` search.
//! - [`diagnostics`]: stationarity, mixing and ergodicity on ℤ.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cnd;
pub mod diagnostics;
mod error;
pub mod field;
pub mod models;
mod pindex;
mod rng;
pub mod samplers;
mod sites;
pub mod special;
pub mod stats;
pub mod stdf;
pub mod transform;

pub use error::{Error, Result};
pub use field::{FieldJob, FieldSample, Route, SampleMatrix, Truncation, TruncationReport};
pub use models::{BoundModel, Covariance, PathSampler, SpectralModel, WeightAtom, WeightTable};
pub use pindex::PIndex;
pub use rng::{derive_seed, RngStream, StreamRng};
pub use sites::SiteSet;
pub use stats::Estimate;
