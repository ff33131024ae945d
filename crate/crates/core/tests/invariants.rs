//! Property-based invariants.

use ecpa::ecpa::{ecpa_statistic, EvaluationPanel, InstrumentSpec};
use ecpa::loss::{BregmanSpec, Loss, QuantileLossSpec, Interval};
use ecpa::power::{alp, omega_closed_form, SimParams};
use ecpa::stats::{chi2_cdf, chi2_quantile, noncentral_chi2_sf, HacConfig};
use proptest::prelude::*;

fn series(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn loss_difference_antisymmetric(y in -10.0f64..10.0, x1 in -10.0f64..10.0, x2 in -10.0f64..10.0) {
        let se = BregmanSpec::squared_error(1);
        let a = se.loss_difference(&[y], &[x1], &[x2]).unwrap();
        let b = se.loss_difference(&[y], &[x2], &[x1]).unwrap();
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
        let q = QuantileLossSpec::pinball(0.3, Interval::closed(-10.0, 10.0)).unwrap();
        prop_assert_eq!(q.loss_difference(y, x1, x2).unwrap(), -q.loss_difference(y, x2, x1).unwrap());
    }

    #[test]
    fn bregman_difference_is_affine(y in 0.05f64..20.0, x1 in 0.05f64..20.0, x2 in 0.05f64..20.0) {
        for spec in [BregmanSpec::squared_error(1), BregmanSpec::qlike(1)] {
            let (a, b) = spec.affine_decomposition(&[x1], &[x2]).unwrap();
            let direct = spec.loss_difference(&[y], &[x1], &[x2]).unwrap();
            let scale = 1.0 + direct.abs() + a.abs() + (b[0] * y).abs();
            prop_assert!((a + b[0] * y - direct).abs() <= 1e-10 * scale, "{} {} {}", spec.name(), a + b[0] * y, direct);
        }
    }

    #[test]
    fn swapping_forecasts_keeps_statistic(y in series(40), f1 in series(40), f2 in series(40)) {
        let p = EvaluationPanel::new(y, f1, f2).unwrap();
        let spec = InstrumentSpec::constant_and_lagged_proxy();
        let cov = HacConfig::bartlett(2);
        let loss = Loss::squared_error();
        if let (Ok(a), Ok(b)) = (ecpa_statistic(&p, &loss, &spec, &cov), ecpa_statistic(&p.swapped(), &loss, &spec, &cov)) {
            prop_assert!((a.statistic - b.statistic).abs() <= 1e-9 * (1.0 + a.statistic));
            prop_assert!((a.p_value - b.p_value).abs() <= 1e-9);
        }
    }

    #[test]
    fn constant_instrument_closed_form(y in series(30), f1 in series(30), f2 in series(30)) {
        let p = EvaluationPanel::new(y, f1, f2).unwrap();
        let loss = Loss::squared_error();
        let d: Vec<f64> = (0..p.len()).map(|t| loss.difference(p.proxy()[t], p.forecast1()[t], p.forecast2()[t]).unwrap()).collect();
        let n = d.len() as f64;
        let m = d.iter().sum::<f64>() / n;
        let s2 = d.iter().map(|v| v * v).sum::<f64>() / n;
        if s2 > 1e-8 {
            let r = ecpa_statistic(&p, &loss, &InstrumentSpec::constant(), &HacConfig::outer_product()).unwrap();
            let expected = n * m * m / s2;
            prop_assert!((r.statistic - expected).abs() <= 1e-9 * (1.0 + expected));
        }
    }

    #[test]
    fn chi2_quantile_inverts_cdf(df in 0.5f64..60.0, p in 0.001f64..0.999) {
        let q = chi2_quantile(df, p).unwrap();
        prop_assert!((chi2_cdf(df, q).unwrap() - p).abs() < 1e-10);
    }

    #[test]
    fn noncentral_sf_monotone(df in 1.0f64..6.0, lam in 0.0f64..30.0, x in 0.1f64..40.0, dl in 0.01f64..5.0) {
        let a = noncentral_chi2_sf(df, lam, x).unwrap();
        let b = noncentral_chi2_sf(df, lam + dl, x).unwrap();
        let c = noncentral_chi2_sf(df, lam, x * 1.1).unwrap();
        prop_assert!(b >= a - 1e-14);
        prop_assert!(c <= a + 1e-14);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn alp_increasing_along_ray(s in 0.1f64..3.0, sh in 0.0f64..2.0, tau in 0.01f64..0.2) {
        let p = SimParams { sigma_hat2: sh, ..SimParams::baseline() };
        let o = omega_closed_form(&p).unwrap();
        let a = alp(&[s, s], &o, tau).unwrap().alp;
        let b = alp(&[1.5 * s, 1.5 * s], &o, tau).unwrap().alp;
        prop_assert!(b > a && a > tau);
    }
}
