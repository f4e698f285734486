use collat_core::calibration::{calibrate_firm_value, CalibrationTarget, RootFindConfig};
use collat_core::credit::{pd_from_spread, spread_from_pd, CreditQuote};
use collat_core::mc::{simulate_survival, BarrierSchedule, McConfig};
use collat_core::{
    barrier_shift, composite_survival, survival_probability, BarrierSpec, CompositeBarrier, FirmParams, DAILY,
    MONTHLY, WEEKLY,
};
use proptest::prelude::*;

fn interval() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.0, DAILY, WEEKLY, MONTHLY])
}

fn firm() -> impl Strategy<Value = FirmParams> {
    (1.05..3.0f64, 0.1..0.8f64, 1.0..10.0f64, -0.02..0.06f64, 0.0..0.04f64)
        .prop_map(|(v, sigma, t, r, d)| FirmParams::new(v, 1.0, t, r, d, sigma).unwrap())
}

proptest! {
    #[test]
    fn survival_in_unit_interval(p in firm(), b in 0.0..1.2f64, dt in interval()) {
        prop_assume!(b < p.firm_value);
        let res = survival_probability(&p, &BarrierSpec::discrete(b, dt)).unwrap();
        prop_assert!((0.0..=1.0).contains(&res.probability));
        prop_assert!(res.effective_barrier <= b);
    }

    #[test]
    fn nonincreasing_in_barrier(p in firm(), b1 in 0.0..1.2f64, b2 in 0.0..1.2f64, dt in interval()) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        prop_assume!(hi < p.firm_value);
        let a = survival_probability(&p, &BarrierSpec::discrete(lo, dt)).unwrap().probability;
        let b = survival_probability(&p, &BarrierSpec::discrete(hi, dt)).unwrap().probability;
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn nondecreasing_in_firm_value(p in firm(), dv in 0.0..1.0f64, b in 0.0..1.0f64, dt in interval()) {
        let barrier = BarrierSpec::discrete(b, dt);
        let a = survival_probability(&p, &barrier).unwrap().probability;
        let c = survival_probability(&p.with_firm_value(p.firm_value + dv), &barrier).unwrap().probability;
        prop_assert!(c >= a - 1e-12);
    }

    #[test]
    fn nonincreasing_in_strike(p in firm(), k1 in 0.5..1.5f64, k2 in 0.5..1.5f64, b in 0.0..1.0f64, dt in interval()) {
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        let barrier = BarrierSpec::discrete(b, dt);
        let a = survival_probability(&p.with_strike(lo), &barrier).unwrap().probability;
        let c = survival_probability(&p.with_strike(hi), &barrier).unwrap().probability;
        prop_assert!(c <= a + 1e-12);
    }

    #[test]
    fn finer_monitoring_never_raises_survival(p in firm(), b in 0.05..1.0f64) {
        let at = |dt: f64| survival_probability(&p, &BarrierSpec::discrete(b, dt)).unwrap().probability;
        let seq = [MONTHLY, WEEKLY, DAILY, 0.0].map(at);
        prop_assert!(seq.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{:?}", seq);
        let merton = survival_probability(&p, &BarrierSpec::none()).unwrap().probability;
        prop_assert!(merton >= seq[0] - 1e-12);
    }

    #[test]
    fn composite_monotone_in_levels_and_intervals(
        p in firm(),
        b1 in 0.1..1.0f64, b2 in 0.1..1.0f64, bump in 0.0..0.2f64,
        dt1 in interval(), dt2 in interval(), widen in 0.0..0.1f64,
    ) {
        let base = CompositeBarrier::new(vec![BarrierSpec::discrete(b1, dt1), BarrierSpec::discrete(b2, dt2)]).unwrap();
        let higher = CompositeBarrier::new(vec![BarrierSpec::discrete(b1 + bump, dt1), BarrierSpec::discrete(b2, dt2)]).unwrap();
        let sparser = CompositeBarrier::new(vec![BarrierSpec::discrete(b1, dt1 + widen), BarrierSpec::discrete(b2, dt2)]).unwrap();
        prop_assume!(b1 + bump < p.firm_value);
        let s0 = composite_survival(&p, &base).unwrap().probability;
        prop_assert!(composite_survival(&p, &higher).unwrap().probability <= s0 + 1e-12);
        prop_assert!(composite_survival(&p, &sparser).unwrap().probability >= s0 - 1e-12);
    }

    #[test]
    fn shift_bounds(b in 0.0..2.0f64, sigma in 0.05..1.0f64, dt in 0.0..1.0f64) {
        let shifted = barrier_shift(&BarrierSpec::discrete(b, dt), sigma);
        prop_assert!(shifted <= b);
        prop_assert!(shifted >= 0.0);
    }

    #[test]
    fn pd_spread_round_trip(pd in 1e-6..0.9f64, rec in 0.0..0.8f64, tenor in prop::sample::select(vec![1.0, 5.0, 10.0])) {
        let s = spread_from_pd(pd, rec, tenor).unwrap();
        let back = pd_from_spread(&CreditQuote::new(s, rec, tenor).unwrap()).unwrap();
        prop_assert!((back - pd).abs() <= 1e-9 * pd);
    }

    #[test]
    fn spread_monotone(pd in 1e-4..0.8f64, dpd in 1e-4..0.1f64, rec in 0.0..0.7f64, drec in 1e-3..0.2f64) {
        let s = spread_from_pd(pd, rec, 5.0).unwrap();
        prop_assert!(spread_from_pd(pd + dpd, rec, 5.0).unwrap() > s);
        prop_assert!(spread_from_pd(pd, rec + drec, 5.0).unwrap() < s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn calibration_forward_consistent(target in 0.55..0.999f64, sigma in 0.1..0.8f64) {
        // Targets below the at-the-money survival lie outside the default bracket.
        let atm = FirmParams::new(1.0 + 1e-6, 1.0, 5.0, 0.02, 0.0, sigma).unwrap();
        prop_assume!(target > survival_probability(&atm, &BarrierSpec::none()).unwrap().probability);
        let calib = CalibrationTarget::firm_value(target, 1.0, 5.0, 0.02, 0.0, sigma);
        let v = calibrate_firm_value(&calib, &RootFindConfig::default()).unwrap();
        let p = FirmParams::new(v, 1.0, 5.0, 0.02, 0.0, sigma).unwrap();
        let back = survival_probability(&p, &BarrierSpec::none()).unwrap().probability;
        prop_assert!((back - target).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mc_antimonotone_in_barrier(p in firm(), b in 0.0..0.9f64, bump in 0.0..0.15f64, seed in any::<u64>()) {
        prop_assume!(b + bump < p.firm_value);
        let run = |level: f64| {
            let cfg = McConfig::new(5_000, seed).with_schedule(BarrierSchedule::every(level, MONTHLY, p.horizon));
            simulate_survival(&p, &cfg).unwrap().p_hat
        };
        prop_assert!(run(b + bump) <= run(b));
    }

    #[test]
    fn mc_bridge_ordering(p in firm(), b in 0.3..1.0f64, seed in any::<u64>()) {
        prop_assume!(b < p.firm_value);
        let cfg = McConfig::new(5_000, seed).with_schedule(BarrierSchedule::continuous(b));
        let plain = simulate_survival(&p, &cfg).unwrap().p_hat;
        let bridged = simulate_survival(&p, &cfg.clone().with_bridge(true)).unwrap().p_hat;
        prop_assert!(bridged <= plain);
    }
}
