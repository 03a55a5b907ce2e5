use proptest::prelude::*;

use stabledev::bounds_mean::{
    intermediate_v2_certificate, v1_eps_threshold, v2_eps_threshold,
};
use stabledev::certificate::Interval;
use stabledev::chernoff::HRCurve;
use stabledev::levy::{SpectralMeasure, StableModel};
use stabledev::roots::{solve_h_roots, solve_un, theta, theta_inverse, un_residual};
use stabledev::stats::{clopper_pearson, estimate_tail};

fn model(alpha: f64, mass: f64) -> StableModel {
    StableModel::new(alpha, SpectralMeasure::symmetric_axes(2, mass).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn un_solves_inside_bracket(n in 2u32..200, alpha in 1.01f64..1.99) {
        let u = solve_un(n, alpha, 1.0).unwrap();
        let lc = ((n as f64 - 1.0) / (2.0 - alpha)).ln();
        prop_assert!(un_residual(u, n, alpha, 1.0).abs() < 1e-12 * (1.0 + u.exp()));
        prop_assert!(u > lc && u < 2.0 * lc);
    }

    #[test]
    fn theta_round_trip(k in 1.0f64..1e4, alpha in 1.05f64..1.95, s in 0.1f64..5.0) {
        let u = s * k;
        let x = theta(u, alpha, s).unwrap();
        let back = theta_inverse(x, alpha, s).unwrap();
        prop_assert!((back - u).abs() <= 1e-9 * u);
    }

    #[test]
    fn h_roots_straddle_the_minimum(nd in 1.0f64..100.0, alpha in 1.05f64..1.95, f in 1.01f64..20.0) {
        let eps = f * (2.0 - alpha) * std::f64::consts::E / (2.0 * alpha * nd);
        let h = solve_h_roots(nd, alpha, eps).unwrap();
        prop_assert!(h.u1 < 1.0 && 1.0 < h.u2);
    }

    #[test]
    fn v2_bound_is_a_nonincreasing_probability(n in 2u32..40, alpha in 1.05f64..1.95, mass in 0.1f64..5.0) {
        let m = model(alpha, mass);
        let c = intermediate_v2_certificate(n, 1.05 * v2_eps_threshold(n, alpha), &m).unwrap();
        prop_assume!(c.is_applicable());
        let v = c.valid_x;
        let mut prev = f64::INFINITY;
        for i in 0..=50 {
            let x = v.lo + (v.hi - v.lo) * i as f64 / 50.0;
            let b = c.evaluate(x);
            prop_assert!((0.0..=1.0).contains(&b));
            prop_assert!(b <= prev + 1e-15);
            prev = b;
        }
    }

    #[test]
    fn h_roots_spread_as_eps_grows(n in 3u32..40, alpha in 1.05f64..1.95, f in 1.05f64..5.0) {
        let t = v1_eps_threshold(n, 1.0, alpha);
        let nd = n as f64;
        let narrow = solve_h_roots(nd, alpha, f * t).unwrap();
        let wide = solve_h_roots(nd, alpha, 2.0 * f * t).unwrap();
        prop_assert!(wide.u1 < narrow.u1 && narrow.u2 < wide.u2);
    }

    #[test]
    fn h_inverse_round_trip(r in 0.1f64..10.0, s in 0.1f64..5.0, alpha in 0.5f64..1.95, t in 1e-6f64..1e3) {
        let c = HRCurve::new(r, s, alpha).unwrap();
        let u = c.inverse(t).unwrap();
        prop_assert!((c.h(u).unwrap() - t).abs() <= 1e-9 * t);
    }

    #[test]
    fn clopper_pearson_covers_the_estimate(n in 1usize..5000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as usize;
        let (lo, hi) = clopper_pearson(k, n);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn empirical_tail_is_nonincreasing(xs in prop::collection::vec(-100.0f64..100.0, 1..300)) {
        let grid: Vec<f64> = (0..20).map(|i| -50.0 + 5.0 * i as f64).collect();
        let t = estimate_tail(&xs, 0.0, &grid).unwrap();
        for w in t.windows(2) {
            prop_assert!(w[1].p_hat <= w[0].p_hat);
            prop_assert!(w[0].ci_lo <= w[0].p_hat && w[0].p_hat <= w[0].ci_hi);
        }
    }

    #[test]
    fn interval_membership(lo in -10.0f64..10.0, len in 0.0f64..10.0, x in -30.0f64..30.0) {
        let hi = lo + len;
        let open = Interval::open(lo, hi);
        let closed = Interval::closed(lo, hi);
        prop_assert!(!open.contains(x) || closed.contains(x));
        prop_assert_eq!(closed.contains(x), lo <= x && x <= hi);
        prop_assert!(closed.contains_interval(&open));
        prop_assert!(closed.distance(x) >= 0.0);
        prop_assert_eq!(closed.distance(x) == 0.0, closed.contains(x));
    }
}
