use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;
use vlbias::stats::*;

#[derive(Deserialize)]
struct Case {
    a: Vec<f64>,
    b: Vec<f64>,
    t: f64,
    df: f64,
    p: f64,
}

#[derive(Deserialize)]
struct Fixture {
    cases: Vec<Case>,
}

// Reference values come from scipy.stats.ttest_ind(equal_var=False); see fixtures/gen_welch.py.
#[test]
fn welch_matches_reference_on_1000_pairs() {
    let fx: Fixture = serde_json::from_str(include_str!("fixtures/welch_reference.json")).unwrap();
    assert_eq!(fx.cases.len(), 1000);
    let (mut worst_t, mut worst_p) = (0.0f64, 0.0f64);
    for (i, c) in fx.cases.iter().enumerate() {
        let r = two_sample_test(&c.a, &c.b).unwrap();
        let dt = (r.t - c.t).abs();
        let dp = (r.p - c.p).abs();
        assert!(dt < 1e-9, "case {i}: t {} vs {}", r.t, c.t);
        assert!(dp < 1e-6, "case {i}: p {} vs {}", r.p, c.p);
        assert!((r.df - c.df).abs() < 1e-6 * c.df.max(1.0), "case {i}: df");
        worst_t = worst_t.max(dt);
        worst_p = worst_p.max(dp);
    }
    eprintln!("max |dt| = {worst_t:e}, max |dp| = {worst_p:e}");
}

#[test]
fn hand_computed_case() {
    let r = two_sample_test(&[0.8, 0.9, 0.7], &[0.2, 0.1, 0.3]).unwrap();
    assert!((r.t - 7.348).abs() < 1e-3, "{}", r.t);
    assert!((r.df - 4.0).abs() < 1e-9);
    assert!((r.p - 0.0018).abs() < 5e-5, "{}", r.p);
}

#[test]
fn null_p_values_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let normal = Normal::new(0.5, 0.1).unwrap();
    let mut ps: Vec<f64> = (0..2000)
        .map(|_| {
            let a: Vec<f64> = (0..30).map(|_| normal.sample(&mut rng)).collect();
            let b: Vec<f64> = (0..25).map(|_| normal.sample(&mut rng)).collect();
            two_sample_test(&a, &b).unwrap().p
        })
        .collect();
    ps.sort_by(f64::total_cmp);
    let n = ps.len() as f64;
    let d = ps
        .iter()
        .enumerate()
        .map(|(i, &p)| (p - i as f64 / n).abs().max(((i + 1) as f64 / n - p).abs()))
        .fold(0.0, f64::max);
    // Kolmogorov-Smirnov critical value at the 1% level
    assert!(d < 1.63 / n.sqrt(), "D = {d}");
}

#[test]
fn spearman_and_pearson_examples() {
    assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap(), Some(0.6));
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), Some(-1.0));
    assert_eq!(pearson(&[1.0, 1.0], &[0.0, 2.0]).unwrap(), None);
    assert!(pearson(&[1.0], &[1.0, 2.0]).is_err());
    assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 7.0]).unwrap().unwrap();
    // hand value: sxy = 5, sxx = 2, syy = 12.666..
    assert!((r - 5.0 / (2.0f64 * 38.0 / 3.0).sqrt()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn welch_is_antisymmetric(
        a in prop::collection::vec(0.0f64..1.0, 2..40),
        b in prop::collection::vec(0.0f64..1.0, 2..40),
    ) {
        let ab = two_sample_test(&a, &b).unwrap();
        let ba = two_sample_test(&b, &a).unwrap();
        prop_assert!((ab.t + ba.t).abs() < 1e-9 || (ab.t.is_infinite() && ab.t == -ba.t));
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        prop_assert!(ab.p >= P_FLOOR && ab.p <= 1.0);
    }

    #[test]
    fn welch_ignores_sample_order(
        a in prop::collection::vec(0.0f64..1.0, 2..40),
        b in prop::collection::vec(0.0f64..1.0, 2..40),
    ) {
        let mut ar = a.clone();
        ar.reverse();
        let x = two_sample_test(&a, &b).unwrap();
        let y = two_sample_test(&ar, &b).unwrap();
        prop_assert!((x.t - y.t).abs() <= 1e-9 * x.t.abs().max(1.0) || x.t == y.t);
    }

    #[test]
    fn spearman_invariant_under_monotone_maps(x in prop::collection::vec(-10.0f64..10.0, 3..30), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let y: Vec<f64> = x.iter().map(|v| v + normal.sample(&mut rng)).collect();
        let base = spearman(&x, &y).unwrap();
        let ex: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let cubed: Vec<f64> = y.iter().map(|v| v * v * v + 2.0).collect();
        let moved = spearman(&ex, &cubed).unwrap();
        match (base, moved) {
            (Some(a), Some(b)) => {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&a));
                let sym = spearman(&y, &x).unwrap().unwrap();
                prop_assert!((a - sym).abs() < 1e-12);
            }
            (None, None) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }
}
