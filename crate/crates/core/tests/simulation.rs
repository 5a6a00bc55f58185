use aps_iv::algorithms::{AffineThresholdRule, Combinator, Condition, DecisionRule, Direction};
use aps_iv::aps::ApsResult;
use aps_iv::estimators::{bandwidth_sweep, tsls_aps};
use aps_iv::simulation::{
    population_estimands, run_monte_carlo_with, Dgp, DgpConfig, McConfig, McEstimator, Model,
};
use aps_iv::stats::spearman;
use aps_iv::{simulate_aps, standardize, ApsConfig, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dgp(n: usize, p: usize, band: (f64, f64), model: Model) -> Dgp {
    Dgp::new(DgpConfig {
        n,
        p,
        band,
        model,
        seed: 5,
        ..DgpConfig::default()
    })
    .unwrap()
}

#[test]
fn baseline_index_has_unit_variance() {
    let g = dgp(10_000, 100, (0.495, 0.505), Model::A);
    let s = g.sample(1).unwrap();
    let x = s.dataset.x_cont_flat();
    let idx: Vec<f64> = (0..10_000)
        .map(|i| x[i * 100..(i + 1) * 100].iter().zip(g.alpha0()).map(|(a, b)| a * b).sum())
        .collect();
    let m = idx.iter().sum::<f64>() / idx.len() as f64;
    let var = idx.iter().map(|v| (v - m).powi(2)).sum::<f64>() / idx.len() as f64;
    assert!((var - 1.0).abs() < 0.05, "variance {var}");
}

#[test]
fn samples_satisfy_observed_consistency() {
    let g = dgp(3_000, 10, (0.4, 0.6), Model::B);
    for seed in 0..3 {
        let s = g.sample(seed).unwrap();
        assert!(s.potential.is_consistent_with(&s.dataset));
        assert!(s.potential.d0.iter().all(|&d| d == 0.0));
    }
}

#[test]
fn in_band_recommendations_are_fair_coins() {
    let g = dgp(20_000, 10, (0.3, 0.7), Model::A);
    let s = g.sample(9).unwrap();
    let (lo, hi) = s.band;
    let z: Vec<f64> = (0..s.dataset.n())
        .filter(|&i| {
            let x1 = s.dataset.x_cont_row(i)[0];
            lo <= x1 && x1 <= hi
        })
        .map(|i| s.dataset.z()[i])
        .collect();
    let nb = z.len() as f64;
    let mean = z.iter().sum::<f64>() / nb;
    assert!((mean - 0.5).abs() <= 4.0 * (0.25 / nb).sqrt(), "mean {mean} over {nb}");
}

#[test]
fn randomized_segment_late_matches_overall_late() {
    // Effects do not depend on X in model A, so the two coincide.
    let g = dgp(1_000, 10, (0.45, 0.55), Model::A);
    let e = population_estimands(&g, 1_000_000, 3).unwrap();
    let rct = e.late_rct.unwrap();
    assert!((rct - e.late).abs() < 0.03, "{rct} vs {}", e.late);
    assert!(e.ate.abs() < 0.01);
}

#[test]
fn sweep_sample_size_grows_with_bandwidth() {
    let deltas = [0.02, 0.05, 0.1, 0.2, 0.4, 0.8];
    let mut mean_n = vec![0.0; deltas.len()];
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 500;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let z: Vec<f64> = x.iter().map(|v| f64::from(u8::from(*v >= 0.0))).collect();
        let y: Vec<f64> = (0..n).map(|i| x[i] + 1.5 * z[i] + rng.random_range(-1.0..1.0)).collect();
        let ds = Dataset::builder(y, z.clone(), z).continuous(x, 1).build().unwrap();
        let (ds, _) = standardize(&ds).unwrap();
        let rule = AffineThresholdRule::univariate_threshold(1, 0, 0.0).unwrap();
        for (k, e) in bandwidth_sweep(&ds, &rule, &deltas, 200, seed).unwrap().iter().enumerate() {
            mean_n[k] += e.aps.as_ref().unwrap().n_nondegenerate() as f64 / 20.0;
        }
    }
    let rho = spearman(&deltas, &mean_n).unwrap();
    assert!(rho >= 0.9, "rho {rho}, {mean_n:?}");
}

#[test]
fn exact_and_simulated_scores_agree() {
    // Two-level rule: A(X) ∈ {0.3, 0.7} everywhere, heterogeneous effects.
    let n = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let rule = AffineThresholdRule::new(
        2,
        vec![Condition::new(vec![1.0, 1.0], 0.0, Direction::Ge)],
        Combinator::And,
        0.7,
        0.3,
    )
    .unwrap();
    let a: Vec<f64> = (0..n).map(|i| rule.evaluate(&x[2 * i..2 * i + 2], &[])).collect();
    let z: Vec<f64> = a.iter().map(|&ai| f64::from(u8::from(rng.random::<f64>() < ai))).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| x[2 * i] + (1.0 + 0.5 * x[2 * i + 1]) * z[i] + rng.random_range(-1.0..1.0))
        .collect();
    let ds = Dataset::builder(y, z.clone(), z).continuous(x, 2).build().unwrap();
    let (ds, _) = standardize(&ds).unwrap();
    let cfg = ApsConfig::new(0.1, 2000, 4).unwrap();
    let sim = tsls_aps(&ds, &simulate_aps(&ds, &rule, &cfg).unwrap()).unwrap();
    let exact = tsls_aps(&ds, &ApsResult::from_values(a, cfg)).unwrap();
    let joint = (sim.se_robust.powi(2) + exact.se_robust.powi(2)).sqrt();
    assert!((sim.beta1 - exact.beta1).abs() <= 3.0 * joint, "{} vs {}", sim.beta1, exact.beta1);
    assert_eq!(exact.n_used, n);
}

#[test]
fn small_monte_carlo_summary_is_coherent() {
    let g = dgp(400, 4, (0.2, 0.8), Model::A);
    let config = McConfig {
        dgp: g.config().clone(),
        deltas: vec![0.5],
        draws: 100,
        replications: 2,
        estimators: vec![McEstimator::ApsTsls, McEstimator::NaiveOls],
        seed: 1,
        oracle_n: 50_000,
        max_failure_rate: 0.1,
    };
    let s = run_monte_carlo_with(&g, &config).unwrap();
    for c in &s.cells {
        assert!((c.rmse.powi(2) - (c.bias.powi(2) + c.sd.powi(2))).abs() <= 1e-12 * (1.0 + c.rmse.powi(2)));
        assert!([0.0, 0.5, 1.0].contains(&c.coverage), "{}", c.coverage);
    }
    let again = run_monte_carlo_with(&g, &config).unwrap();
    assert_eq!(s.to_csv(), again.to_csv());
}
