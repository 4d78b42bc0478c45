use lpmax_core::cnd::{build_fp, cnd_test, pairwise_p_bound, Verdict, DEFAULT_EIG_TOL};
use lpmax_core::field::{simulate_matrix, LpSimulator};
use lpmax_core::samplers::frechet_from_uniform;
use lpmax_core::special::gamma;
use lpmax_core::stats::frechet_cdf;
use lpmax_core::stdf::{logistic_cdf, logistic_stdf, reich_shaby_cdf, StdfEvaluator};
use lpmax_core::{PIndex, SiteSet, SpectralModel, Truncation, WeightAtom};
use proptest::prelude::*;

fn weights(rows: &[[f64; 2]]) -> SpectralModel {
    let atoms = rows.iter().map(|r| WeightAtom { sites: vec![0, 1], values: r.to_vec() }).collect();
    SpectralModel::DiscreteWeights { atoms }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_matches_statrs(x in 0.05f64..30.0) {
        let want = statrs::function::gamma::gamma(x);
        prop_assert!((gamma(x) - want).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn frechet_quantile_inverts_cdf(alpha in 0.3f64..8.0, u in 1e-9f64..1.0 - 1e-9) {
        let x = frechet_from_uniform(alpha, u);
        prop_assert!((frechet_cdf(alpha, x) - u).abs() < 1e-10);
    }

    #[test]
    fn logistic_stdf_lies_between_max_and_sum(r in 1.0f64..20.0, x in prop::collection::vec(0.0f64..5.0, 1..6)) {
        let l = logistic_stdf(r, &x);
        let max = x.iter().copied().fold(0.0, f64::max);
        let sum: f64 = x.iter().sum();
        prop_assert!(l >= max * (1.0 - 1e-12) && l <= sum * (1.0 + 1e-12));
        let c = 2.5;
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        prop_assert!((logistic_stdf(r, &scaled) - c * l).abs() <= 1e-12 * (1.0 + c * l));
    }

    #[test]
    fn single_atom_reich_shaby_is_logistic(p in 1.05f64..10.0, a in 0.1f64..5.0, b in 0.1f64..5.0) {
        let s = SiteSet::new(vec![0, 1]).unwrap();
        let t = weights(&[[1.0, 1.0]]).bind(&s).unwrap().as_weight_table().unwrap();
        let rs = reich_shaby_cdf(&t, p, &[a, b]).unwrap();
        prop_assert!((rs - logistic_cdf(p, &[a, b]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn logistic_is_cnd_exactly_up_to_r(r in 1.1f64..4.0, frac in 0.05f64..0.95) {
        let l = StdfEvaluator::Logistic { r: PIndex::new(r).unwrap(), n: 2 };
        let e = [vec![1.0, 0.0], vec![0.0, 1.0]];
        let below = 1.0 + frac * (r - 1.0);
        prop_assert_eq!(cnd_test(&build_fp(&l, r).unwrap(), &e, DEFAULT_EIG_TOL).unwrap().verdict, Verdict::NoViolationFound);
        prop_assert_eq!(cnd_test(&build_fp(&l, below).unwrap(), &e, DEFAULT_EIG_TOL).unwrap().verdict, Verdict::Violation);
        prop_assert!((pairwise_p_bound(2f64.powf(1.0 / r)) - r).abs() < 1e-9 * r);
    }

    #[test]
    fn fields_are_reproducible_and_positive(seed in any::<u64>(), p in 1.2f64..6.0) {
        let s = SiteSet::new(vec![-2, 0, 5]).unwrap();
        let b = SpectralModel::ConstantOne.bind(&s).unwrap();
        let sim = LpSimulator::new(&b, p, Truncation::FixedCount { n: 32 }).unwrap();
        let one = simulate_matrix(&sim, seed, 8);
        let two = simulate_matrix(&sim, seed, 8);
        prop_assert_eq!(&one, &two);
        prop_assert!(one.rows().flatten().all(|v| *v > 0.0 && v.is_finite()));
    }
}
