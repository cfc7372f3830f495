use proptest::prelude::*;

use reuse_risk::capacity::{max_studies, pairwise_overlap_tail, unit_reuse, CapacityQuery, TailMethod};
use reuse_risk::dist::{bernoulli_sum_pmf, hypergeom_tail, Hypergeometric};
use reuse_risk::error_calculus::{
    expected_utility, fdr_global_null, fwer, pcer, stop_loss_compare, stop_loss_curve, stop_loss_premium,
    two_event_distribution, DependentEventPair, StopLossOrdering, UtilityFunction,
};
use reuse_risk::portfolio::{
    expected_portfolio_utility, DependenceMode, PortfolioConfig, PortfolioUtility, StudyPlan,
};
use reuse_risk::power::{power, type2_error, SampleVector, TestKind, TestSpec};

fn valid_pair() -> impl Strategy<Value = DependentEventPair> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_filter_map("joint table", |(p1, p2, c)| {
        DependentEventPair::new(p1, p2, c).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn hypergeometric_pmf_sums_to_one_and_tail_decreases(n in 1u64..400, k_frac in 0.0..=1.0f64, d_frac in 0.0..=1.0f64) {
        let k = (k_frac * n as f64) as u64;
        let d = (d_frac * n as f64) as u64;
        let h = Hypergeometric::new(n, k, d).unwrap();
        let (lo, hi) = h.support();
        let total: f64 = (lo..=hi).map(|x| h.pmf(x as i64)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let mut prev = 1.0 + 1e-15;
        for ell in 0..=d as i64 + 1 {
            let t = hypergeom_tail(n, k, d, ell).unwrap();
            prop_assert!(t <= prev + 1e-15);
            prev = t;
        }
    }

    #[test]
    fn bernoulli_sum_is_a_permutation_invariant_pmf(rates in prop::collection::vec(0.0..=1.0f64, 0..40), seed in any::<u64>()) {
        let a = bernoulli_sum_pmf(&rates).unwrap();
        let total: f64 = a.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(a.probabilities().iter().all(|p| (0.0..=1.0).contains(p)));
        let mut shuffled = rates.clone();
        let len = shuffled.len();
        if len > 1 {
            shuffled.rotate_left((seed as usize) % len);
            shuffled.reverse();
        }
        let b = bernoulli_sum_pmf(&shuffled).unwrap();
        for (x, y) in a.probabilities().iter().zip(b.probabilities()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn two_event_distribution_invariants(pair in valid_pair()) {
        let d = two_event_distribution(&pair);
        let total: f64 = d.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((d.mean() - pair.p1() - pair.p2()).abs() < 1e-12);
        let curve = stop_loss_curve(&d);
        prop_assert!((curve.at(0) - d.mean()).abs() < 1e-12);
        let p = curve.premiums();
        for w in p.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15);
        }
        for w in p.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-15);
        }
        let (pc, fdr, fw) = (pcer(&d).unwrap(), fdr_global_null(&d), fwer(&d));
        prop_assert!(pc <= fdr + 1e-15);
        prop_assert_eq!(fdr, fw);
    }

    #[test]
    fn dependence_raises_tail_risk_but_not_the_mean(alpha in 0.001..0.5f64, c1 in 0.0..=1.0f64, c2 in 0.0..=1.0f64) {
        prop_assume!((c1 - c2).abs() > 1e-9);
        let (lo, hi) = if c1 < c2 { (c1, c2) } else { (c2, c1) };
        let a = two_event_distribution(&DependentEventPair::symmetric(alpha, lo).unwrap());
        let b = two_event_distribution(&DependentEventPair::symmetric(alpha, hi).unwrap());
        prop_assert!(stop_loss_premium(&a, 1).unwrap() < stop_loss_premium(&b, 1).unwrap());
        prop_assert!((pcer(&a).unwrap() - pcer(&b).unwrap()).abs() < 1e-12);
        let u = UtilityFunction::LinearErrorCount;
        prop_assert!((expected_utility(&a, &u).unwrap() - expected_utility(&b, &u).unwrap()).abs() < 1e-12);
        prop_assert!(fwer(&b) <= fwer(&a) + 1e-15);
        prop_assert_eq!(stop_loss_compare(&stop_loss_curve(&a), &stop_loss_curve(&b)), StopLossOrdering::ASmaller);
    }

    #[test]
    fn stop_loss_compare_is_a_partial_order(x in valid_pair(), y in valid_pair(), z in valid_pair()) {
        let (cx, cy, cz) = [x, y, z].map(|p| stop_loss_curve(&two_event_distribution(&p))).into();
        prop_assert_eq!(stop_loss_compare(&cx, &cx), StopLossOrdering::Equal);
        let xy = stop_loss_compare(&cx, &cy);
        let yx = stop_loss_compare(&cy, &cx);
        let flipped = match xy {
            StopLossOrdering::ASmaller => StopLossOrdering::BSmaller,
            StopLossOrdering::BSmaller => StopLossOrdering::ASmaller,
            other => other,
        };
        prop_assert_eq!(yx, flipped);
        let below = |o: StopLossOrdering| matches!(o, StopLossOrdering::ASmaller | StopLossOrdering::Equal);
        if below(xy) && below(stop_loss_compare(&cy, &cz)) {
            prop_assert!(below(stop_loss_compare(&cx, &cz)));
        }
    }

    #[test]
    fn power_is_monotone_in_sample_size(
        kind in prop_oneof![Just(TestKind::ZKnownVariance), Just(TestKind::TPooled)],
        two_sided in any::<bool>(),
        alpha in 0.005..0.2f64,
        delta in 0.0..1.5f64,
        n1 in 2u64..120, n2 in 2u64..120, e1 in 0u64..60, e2 in 0u64..60,
    ) {
        let spec = TestSpec::new(kind, alpha, two_sided, delta, 1.0).unwrap();
        let small = SampleVector::new(n1, n2);
        let large = SampleVector::new(n1 + e1, n2 + e2);
        let (ps, pl) = (power(&spec, small).unwrap(), power(&spec, large).unwrap());
        prop_assert!(ps <= pl + 1e-12, "{ps} > {pl}");
        prop_assert_eq!(type2_error(&spec, small).unwrap() + ps, 1.0);
    }

    #[test]
    fn power_is_nondecreasing_in_effect(alpha in 0.01..0.1f64, d1 in 0.0..1.0f64, d2 in 0.0..1.0f64, n in 5u64..80) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let n = SampleVector::new(n, n);
        let p_lo = power(&TestSpec::t_test(alpha, lo).unwrap(), n).unwrap();
        let p_hi = power(&TestSpec::t_test(alpha, hi).unwrap(), n).unwrap();
        prop_assert!(p_lo <= p_hi + 1e-12);
    }

    #[test]
    fn z_and_t_agree_for_large_arms(alpha in 0.01..0.1f64, delta in 0.0..0.4f64, n in 200u64..600) {
        let n = SampleVector::new(n, n);
        let z = power(&TestSpec::z_test(alpha, delta).unwrap(), n).unwrap();
        let t = power(&TestSpec::t_test(alpha, delta).unwrap(), n).unwrap();
        prop_assert!((z - t).abs() < 0.005, "z {z} t {t}");
    }

    #[test]
    fn exact_tail_never_exceeds_hoeffding(n in 10u64..20_000, k_frac in 0.01..0.9f64, slack in 0.0..1.0f64) {
        let k = ((k_frac * n as f64) as u64).max(1);
        let ell_min = (k * k).div_ceil(n);
        let ell = ell_min + ((k - ell_min) as f64 * slack) as u64;
        let q = CapacityQuery::new(n, k, ell, 0.05).unwrap();
        let exact = pairwise_overlap_tail(&q, TailMethod::ExactTail).unwrap();
        let bound = pairwise_overlap_tail(&q, TailMethod::Hoeffding).unwrap();
        prop_assert!(exact <= bound * (1.0 + 1e-12), "exact {exact} bound {bound}");
        let ce = max_studies(&q, TailMethod::ExactTail).unwrap();
        let ch = max_studies(&q, TailMethod::Hoeffding).unwrap();
        prop_assert!(ce.ln_bound >= ch.ln_bound - 1e-12);
    }

    #[test]
    fn capacity_monotone_in_tolerance_and_ell(n in 100u64..5_000, k_frac in 0.05..0.5f64, p1 in 0.001..0.5f64, p2 in 0.001..0.5f64) {
        let k = (k_frac * n as f64) as u64;
        let ell = (k * k).div_ceil(n);
        let (lo, hi) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
        let at = |ell: u64, p: f64| max_studies(&CapacityQuery::new(n, k, ell, p).unwrap(), TailMethod::ExactTail).unwrap().c_bound_f64();
        prop_assert!(at(ell, lo) <= at(ell, hi));
        if ell < k {
            prop_assert!(at(ell, lo) <= at(ell + 1, lo));
        }
    }

    #[test]
    fn unit_reuse_matches_poisson_mean(rates in prop::collection::vec(0.0..=1.0f64, 1..50)) {
        let r = unit_reuse(&rates).unwrap();
        let lambda: f64 = rates.iter().sum();
        prop_assert!((r.exact_pmf.mean() - lambda).abs() < 1e-12 * lambda.max(1.0));
        prop_assert!((r.poisson_lambda - lambda).abs() < 1e-12);
    }

    #[test]
    fn adding_a_costly_plan_lowers_utility(alpha in 0.01..0.2f64, n in 5u64..60, extra in 1usize..4) {
        let test = TestSpec::t_test(alpha, 0.5).unwrap();
        let plan = StudyPlan::new(test, SampleVector::new(n, n), 1.0, vec![(0.0, 0.5), (0.5, 0.5)]).unwrap();
        let mut cfg = PortfolioConfig {
            plans: vec![plan.clone(); extra],
            dataset_size: n,
            utility: PortfolioUtility::ErrorCount(UtilityFunction::LinearErrorCount),
            dependence_mode: DependenceMode::AnalyticIndependent,
        };
        let before = expected_portfolio_utility(&cfg).unwrap();
        cfg.plans.push(plan);
        prop_assert!(expected_portfolio_utility(&cfg).unwrap() < before);
    }
}
