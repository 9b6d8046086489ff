use fieldforge::analysis::{amdahl_fit, rmse, ComparisonRow, RmseMode, ScalingSample};
use proptest::prelude::*;

/// Simulated and measured values in MHz for eight devices.
const F_GE: [(f64, f64); 8] =
    [(4600., 4200.), (5130., 4650.), (5610., 5370.), (4180., 4220.), (3960., 3900.), (4330., 4450.), (3420., 3590.), (3850., 4100.)];
const ALPHA: [(f64, f64); 8] =
    [(193., 212.), (171., 180.), (178., 140.), (144., 153.), (142., 154.), (173., 189.), (143., 164.), (178., 210.)];
const F_R: [(f64, f64); 8] =
    [(7120., 6940.), (7270., 7090.), (7430., 7210.), (6340., 6120.), (6600., 6350.), (6720., 6470.), (6820., 6570.), (6960., 6660.)];
const G: [(f64, f64); 8] = [(56., 60.), (55., 61.), (48., 54.), (75., 60.), (90., 66.), (88., 70.), (89., 66.), (66., 52.)];

fn rows(data: &[(f64, f64)]) -> Vec<ComparisonRow> {
    data.iter().enumerate().map(|(i, (s, m))| ComparisonRow::new(&format!("q{i}"), *s, *m, "MHz")).collect()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a / b - 1.0).abs() <= rel
}

#[test]
fn device_table_errors() {
    let cases = [(&F_GE, 264.34, 5.99), (&ALPHA, 21.886, 13.25), (&G, 15.564, 24.53), (&F_R, 234.28, 3.54)];
    for (data, abs, pct) in cases {
        let r = rows(data);
        let a = rmse(&r, RmseMode::Absolute).unwrap();
        let p = rmse(&r, RmseMode::Percentage).unwrap();
        assert!(close(a, abs, 5e-3), "{a} vs {abs}");
        assert!(close(p, pct, 5e-3), "{p} vs {pct}");
    }
}

#[test]
fn rmse_rejects_bad_input() {
    assert!(rmse(&[], RmseMode::Absolute).is_err());
    let mixed = vec![ComparisonRow::new("a", 1.0, 2.0, "MHz"), ComparisonRow::new("b", 1.0, 2.0, "GHz")];
    assert!(rmse(&mixed, RmseMode::Absolute).is_err());
    let zero = vec![ComparisonRow::new("a", 1.0, 0.0, "MHz")];
    assert!(rmse(&zero, RmseMode::Percentage).is_err());
    assert_eq!(rmse(&zero, RmseMode::Absolute).unwrap(), 1.0);
}

fn model(t1: f64, f: f64, workers: &[usize]) -> Vec<ScalingSample> {
    workers.iter().map(|&n| ScalingSample { workers: n, seconds: t1 * ((1.0 - f) + f / n as f64) }).collect()
}

#[test]
fn amdahl_recovers_model_parameters() {
    let samples = model(88900.0, 0.992, &[20, 40, 60, 80, 100, 120, 140, 160, 180, 200]);
    let fit = amdahl_fit(&samples).unwrap();
    assert!(close(fit.t1_seconds, 88900.0, 1e-6));
    assert!(close(fit.parallel_fraction, 0.992, 1e-6));
    assert!(fit.residual < 1e-10);
    assert!(close(fit.predict(40), samples[1].seconds, 1e-9));
}

#[test]
fn amdahl_clamps_to_valid_fraction() {
    // times that grow with workers would need f < 0
    let s = vec![
        ScalingSample { workers: 1, seconds: 1.0 },
        ScalingSample { workers: 2, seconds: 1.2 },
        ScalingSample { workers: 4, seconds: 1.3 },
    ];
    let fit = amdahl_fit(&s).unwrap();
    assert!((0.0..=1.0).contains(&fit.parallel_fraction));
    assert!(amdahl_fit(&s[..2]).is_err());
    let zero = vec![ScalingSample { workers: 0, seconds: 1.0 }; 3];
    assert!(amdahl_fit(&zero).is_err());
}

proptest! {
    #[test]
    fn rmse_is_permutation_invariant(data in proptest::collection::vec((1.0f64..100.0, 1.0f64..100.0), 1..20), seed in any::<u64>()) {
        let r = rows(&data);
        let mut shuffled = r.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) >> 33) as usize % (i + 1);
            shuffled.swap(i, j);
        }
        for mode in [RmseMode::Absolute, RmseMode::Percentage] {
            let a = rmse(&r, mode).unwrap();
            let b = rmse(&shuffled, mode).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        }
    }

    #[test]
    fn rmse_scales_with_units(data in proptest::collection::vec((1.0f64..100.0, 1.0f64..100.0), 1..20), k in 1e-3f64..1e3) {
        let r = rows(&data);
        let scaled: Vec<ComparisonRow> = r.iter().map(|c| ComparisonRow::new(&c.label, c.simulated * k, c.measured * k, "MHz")).collect();
        let (a, b) = (rmse(&r, RmseMode::Absolute).unwrap(), rmse(&scaled, RmseMode::Absolute).unwrap());
        prop_assert!((b - k * a).abs() <= 1e-10 * (k * a).max(1e-300));
        let (p, q) = (rmse(&r, RmseMode::Percentage).unwrap(), rmse(&scaled, RmseMode::Percentage).unwrap());
        prop_assert!((p - q).abs() <= 1e-10 * p.max(1e-300));
    }

    #[test]
    fn amdahl_fit_is_exact_on_model_data(t1 in 1.0f64..1e6, f in 0.0f64..=1.0) {
        let fit = amdahl_fit(&model(t1, f, &[1, 2, 4, 8, 16])).unwrap();
        prop_assert!((fit.t1_seconds / t1 - 1.0).abs() < 1e-8);
        prop_assert!((fit.parallel_fraction - f).abs() < 1e-8);
    }
}
