//! Special functions.

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `Γ(1 - 1/p)`, the normalizer of the ℓᵖ representation. Equals 1 at `p = ∞`.
pub fn lp_normalizer(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else {
        gamma(1.0 - 1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reference_values() {
        // Γ(1/2) = √π, Γ(1/3), Γ(3/4), Γ(5) = 24.
        assert!(rel(gamma(0.5), core::f64::consts::PI.sqrt()) < 1e-14);
        assert!(rel(gamma(1.0 / 3.0), 2.678_938_534_707_747_6) < 1e-13);
        assert!(rel(gamma(0.75), 1.225_416_702_465_177_6) < 1e-13);
        assert!(rel(gamma(5.0), 24.0) < 1e-14);
        assert!(rel(lp_normalizer(2.0), core::f64::consts::PI.sqrt()) < 1e-14);
        assert_eq!(lp_normalizer(f64::INFINITY), 1.0);
    }

    #[test]
    fn recurrence() {
        for k in 1..50 {
            let x = 0.05 + k as f64 * 0.07;
            assert!(rel(gamma(x + 1.0), x * gamma(x)) < 1e-13, "x = {x}");
        }
    }
}
