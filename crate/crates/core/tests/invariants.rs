use heavytail::mc::McConfig;
use heavytail::model::{two_point_scalar, ModelSpec};
use heavytail::spectral::ColumnSample;
use heavytail::tail::{solve_alpha_on, AlphaOptions, AlphaStatus};
use heavytail::transfer::{bin_center, bin_index};
use proptest::prelude::*;
use std::sync::OnceLock;

fn gauss_sample() -> &'static (ModelSpec, ColumnSample) {
    static S: OnceLock<(ModelSpec, ColumnSample)> = OnceLock::new();
    S.get_or_init(|| {
        let spec = ModelSpec::rank1_gauss(2, 4, 0.5).unwrap();
        let sample = ColumnSample::draw(&spec, 20_000, &McConfig::new(99));
        (spec, sample)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn h_is_log_convex_in_s(xi in 0.01f64..0.5, s in 0.1f64..5.0, ds in 0.05f64..1.0) {
        let (_, sample) = gauss_sample();
        let (a, b, c) = (sample.h_value(xi, s), sample.h_value(xi, s + ds), sample.h_value(xi, s + 2.0 * ds));
        prop_assert!(b.ln() <= 0.5 * (a.ln() + c.ln()) + 1e-12);
    }

    #[test]
    fn h_at_zero_is_one(xi in 0.0f64..2.0) {
        let (_, sample) = gauss_sample();
        prop_assert!((sample.h_value(xi, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_two_point_h(lo in 0.1f64..1.0, hi in 1.5f64..4.0, xi in 0.05f64..1.5, s in 0.1f64..4.0) {
        let spec = two_point_scalar(lo, hi, 1.0).unwrap();
        let sample = ColumnSample::exact(&spec, 16).unwrap();
        let expect = 0.5 * (1.0 - xi * lo).abs().powf(s) + 0.5 * (1.0 - xi * hi).abs().powf(s);
        prop_assert!((sample.h_value(xi, s) - expect).abs() <= 1e-12 * expect.max(1.0));
    }

    #[test]
    fn alpha_root_solves_h_equals_one(lo in 0.2f64..0.9, hi in 2.1f64..3.0) {
        // A in {1 - lo, 1 - hi} with |1 - hi| > 1: a root exists when gamma < 0
        let spec = two_point_scalar(lo, hi, 1.0).unwrap();
        let sample = ColumnSample::exact(&spec, 16).unwrap();
        let r = solve_alpha_on(&sample, 1.0, &AlphaOptions::default());
        if r.status == AlphaStatus::Converged {
            prop_assert!((sample.h_value(1.0, r.alpha) - 1.0).abs() <= 1e-3);
        } else {
            prop_assert!(sample.gamma(1.0).mean >= 0.0 || r.status == AlphaStatus::NoRootBelowSMax);
        }
    }

    #[test]
    fn bin_center_lies_in_its_bin(n in 1usize..2048, frac in 0.0f64..1.0) {
        let j = ((frac * n as f64) as usize).min(n - 1);
        prop_assert_eq!(bin_index(bin_center(j, n), n), j);
    }
}
