use aps_iv::algorithms::{AffineThresholdRule, Combinator, Condition, DecisionRule, Direction};
use aps_iv::aps::cap_fraction;
use aps_iv::{simulate_aps, ApsConfig, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn points(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n * p).map(|_| rng.random_range(-0.3..0.3)).collect();
    Dataset::builder(vec![0.0; n], vec![0.0; n], vec![0.0; n])
        .continuous(x, p)
        .build()
        .unwrap()
}

#[test]
fn half_space_scores_match_the_cap_fraction() {
    let s = 4000;
    for p in [1, 2, 3, 5] {
        let ds = points(200, p, p as u64);
        let w: Vec<f64> = (0..p).map(|j| 1.0 + j as f64 * 0.5).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rule = AffineThresholdRule::new(
            p,
            vec![Condition::new(w.clone(), 0.05, Direction::Ge)],
            Combinator::And,
            1.0,
            0.0,
        )
        .unwrap();
        let delta = 0.25;
        let aps = simulate_aps(&ds, &rule, &ApsConfig::new(delta, s, 99).unwrap()).unwrap();
        let mut worst = 0.0f64;
        for i in 0..ds.n() {
            let x = ds.x_cont_row(i);
            let dist = (w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + 0.05) / norm;
            let v = dist / delta;
            let exact = if v.abs() < 1.0 {
                cap_fraction(v, p).unwrap()
            } else {
                f64::from(u8::from(v > 0.0))
            };
            worst = worst.max((aps.values[i] - exact).abs());
            let fixed = rule.aps_fixed(x, &[], delta).unwrap();
            assert!((fixed - exact).abs() < 1e-12);
        }
        assert!(worst <= 4.0 / (s as f64).sqrt(), "p = {p}: {worst}");
    }
}

#[test]
fn more_draws_stay_in_range_and_are_reproducible() {
    let ds = points(100, 2, 1);
    let rule = AffineThresholdRule::univariate_threshold(2, 0, 0.0).unwrap();
    for s in [100, 200, 400] {
        let cfg = ApsConfig::new(0.2, s, 8).unwrap();
        let a = simulate_aps(&ds, &rule, &cfg).unwrap();
        let b = simulate_aps(&ds, &rule, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.values.iter().all(|v| (0.0..=1.0).contains(v)));
        // Indicator rules give multiples of 1/S.
        assert!(a.values.iter().all(|v| (v * s as f64 - (v * s as f64).round()).abs() < 1e-9));
    }
}
