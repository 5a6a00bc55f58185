//! Estimators against a Gauss–Jordan solution of the normal equations.

use aps_iv::aps::ApsResult;
use aps_iv::estimators::{self, bandwidth_sweep, EstimateReport};
use aps_iv::{ApsConfig, Dataset};

const Y: [f64; 10] = [2.1, -0.3, 1.7, 3.4, 0.2, 2.8, -1.1, 1.9, 0.6, 2.5];
const D: [f64; 10] = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
const Z: [f64; 10] = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
const P: [f64; 10] = [0.6, 0.2, 0.45, 0.8, 0.3, 0.55, 0.7, 0.25, 0.4, 0.65];
const W: [f64; 10] = [0.3, 1.2, -0.4, 0.9, 2.2, 0.1, -0.7, 1.5, 0.8, 0.0];

fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..k).map(|j| f64::from(u8::from(i == j))));
            row
        })
        .collect();
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..k {
            if r != c {
                let f = a[r][c];
                for j in 0..2 * k {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    a.into_iter().map(|r| r[k..].to_vec()).collect()
}

/// `β = (Z'X)⁻¹ Z'y` and `V = (Z'X)⁻¹ Z'diag(e²)Z (X'Z)⁻¹`.
fn oracle(x: &[Vec<f64>], z: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = x[0].len();
    let zx: Vec<Vec<f64>> = (0..k)
        .map(|a| (0..k).map(|b| x.iter().zip(z).map(|(xr, zr)| zr[a] * xr[b]).sum()).collect())
        .collect();
    let zy: Vec<f64> = (0..k).map(|a| z.iter().zip(y).map(|(zr, yi)| zr[a] * yi).sum()).collect();
    let inv = invert(&zx);
    let beta: Vec<f64> = (0..k).map(|a| (0..k).map(|b| inv[a][b] * zy[b]).sum()).collect();
    let e: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(xr, yi)| yi - xr.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let meat: Vec<Vec<f64>> = (0..k)
        .map(|a| (0..k).map(|b| z.iter().zip(&e).map(|(zr, ei)| ei * ei * zr[a] * zr[b]).sum()).collect())
        .collect();
    let cov = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    let mut s = 0.0;
                    for i in 0..k {
                        for j in 0..k {
                            s += inv[a][i] * meat[i][j] * inv[b][j];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    (beta, cov)
}

fn close(report: &EstimateReport, beta: &[f64], cov: &[Vec<f64>]) {
    let got: Vec<f64> = report.coefficients.iter().map(|c| c.estimate).collect();
    let bscale = beta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (g, e) in got.iter().zip(beta) {
        assert!((g - e).abs() <= 1e-10 * bscale, "{}: {g} vs {e}", report.mode);
    }
    let cscale = cov.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for (gr, er) in report.covariance.iter().zip(cov) {
        for (g, e) in gr.iter().zip(er) {
            assert!((g - e).abs() <= 1e-10 * cscale, "{}: {g} vs {e}", report.mode);
        }
    }
}

fn fixture() -> (Dataset, ApsResult) {
    let ds = Dataset::builder(Y.to_vec(), D.to_vec(), Z.to_vec())
        .continuous(vec![0.0; 10], 1)
        .build()
        .unwrap();
    let aps = ApsResult::from_values(P.to_vec(), ApsConfig::new(0.1, 100, 0).unwrap());
    (ds, aps)
}

fn rows(f: impl Fn(usize) -> Vec<f64>) -> Vec<Vec<f64>> {
    (0..10).map(f).collect()
}

#[test]
fn all_estimators_match_the_dense_oracle() {
    let (ds, aps) = fixture();
    let xd = rows(|i| vec![1.0, D[i], P[i]]);
    let xz = rows(|i| vec![1.0, Z[i], P[i]]);
    let (b, v) = oracle(&xd, &xz, &Y);
    close(&estimators::tsls_aps(&ds, &aps).unwrap(), &b, &v);
    let (b, v) = oracle(&xz, &xz, &Y);
    close(&estimators::ols_recommendation(&ds, &aps).unwrap(), &b, &v);
    let (b, v) = oracle(&xz, &xz, &W);
    close(&estimators::ols_balance(&ds, &W, &aps).unwrap(), &b, &v);

    let xd = rows(|i| vec![1.0, D[i]]);
    let xz = rows(|i| vec![1.0, Z[i]]);
    let (b, v) = oracle(&xd, &xd, &Y);
    close(&estimators::naive_ols(&ds).unwrap(), &b, &v);
    let (b, v) = oracle(&xd, &xz, &Y);
    close(&estimators::naive_tsls(&ds).unwrap(), &b, &v);
}

#[test]
fn first_stage_matches_the_oracle() {
    let (ds, aps) = fixture();
    let xz = rows(|i| vec![1.0, Z[i], P[i]]);
    let (b, v) = oracle(&xz, &xz, &D);
    let fs = estimators::tsls_aps(&ds, &aps).unwrap().first_stage.unwrap();
    assert!((fs.gamma1 - b[1]).abs() <= 1e-10 * b[1].abs());
    assert!((fs.se - v[1][1].sqrt()).abs() <= 1e-10 * v[1][1].sqrt());
}

#[test]
fn degenerate_rows_are_excluded() {
    let (ds, _) = fixture();
    let mut p = P.to_vec();
    p[3] = 1.0;
    p[7] = 0.0;
    let aps = ApsResult::from_values(p.clone(), ApsConfig::new(0.1, 100, 0).unwrap());
    let keep: Vec<usize> = (0..10).filter(|&i| i != 3 && i != 7).collect();
    let xd: Vec<Vec<f64>> = keep.iter().map(|&i| vec![1.0, D[i], p[i]]).collect();
    let xz: Vec<Vec<f64>> = keep.iter().map(|&i| vec![1.0, Z[i], p[i]]).collect();
    let y: Vec<f64> = keep.iter().map(|&i| Y[i]).collect();
    let (b, v) = oracle(&xd, &xz, &y);
    let r = estimators::tsls_aps(&ds, &aps).unwrap();
    assert_eq!(r.n_used, 8);
    close(&r, &b, &v);
}

#[test]
fn constant_score_drops_the_intercept() {
    let (ds, _) = fixture();
    let aps = ApsResult::from_values(vec![0.5; 10], ApsConfig::new(0.1, 100, 0).unwrap());
    let r = estimators::tsls_aps(&ds, &aps).unwrap();
    assert!(r.intercept_dropped);
    let xd = rows(|i| vec![D[i], 0.5]);
    let xz = rows(|i| vec![Z[i], 0.5]);
    let (b, v) = oracle(&xd, &xz, &Y);
    close(&r, &b, &v);
    // Any variation keeps the intercept.
    let mut p = vec![0.5; 10];
    p[0] = 0.5 + 1e-9;
    let aps = ApsResult::from_values(p, ApsConfig::new(0.1, 100, 0).unwrap());
    assert!(!estimators::tsls_aps(&ds, &aps).map(|r| r.intercept_dropped).unwrap_or(false));
}

#[test]
fn duplicate_bandwidths_in_a_sweep_use_their_own_seeds() {
    let n = 300;
    let x: Vec<f64> = (0..n).map(|i| i as f64 / n as f64 * 4.0 - 2.0).collect();
    let z: Vec<f64> = x.iter().map(|v| f64::from(u8::from(*v >= 0.0))).collect();
    let y: Vec<f64> = x.iter().zip(&z).map(|(v, zi)| v + 2.0 * zi + ((v * 37.0).sin())).collect();
    let ds = Dataset::builder(y, z.clone(), z).continuous(x, 1).build().unwrap();
    let (ds, _) = aps_iv::standardize(&ds).unwrap();
    let rule = aps_iv::algorithms::AffineThresholdRule::univariate_threshold(1, 0, 0.0).unwrap();
    let a = bandwidth_sweep(&ds, &rule, &[0.5, 0.5], 200, 3).unwrap();
    let b = bandwidth_sweep(&ds, &rule, &[0.5, 0.5], 200, 3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0].seed, a[1].seed);
    let single = bandwidth_sweep(&ds, &rule, &[0.5], 200, 3).unwrap();
    assert_eq!(single[0], a[0]);
}
