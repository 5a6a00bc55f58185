//! Exactly identified linear IV with an HC0 sandwich. OLS is the case `Z = X`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Reciprocal condition number below which the cross-moment matrix is
/// treated as singular.
pub const RCOND_MIN: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct Fit {
    pub coef: Vec<f64>,
    pub cov: DMatrix<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Singular {
    Weak,
    Design,
}

impl Singular {
    fn error(self, rcond: f64) -> Error {
        match self {
            Singular::Weak => Error::WeakDesignSingular { rcond },
            Singular::Design => Error::SingularDesign { rcond },
        }
    }
}

/// Solves `Σ z_i (y_i − x_i'β) = 0` and returns `β` with the sandwich
/// `M⁻¹ (Σ ε̂_i² z_i z_i') M⁻ᵀ`, where `M = Σ z_i x_i'`.
///
/// `x` and `z` are row-major `n × k`.
pub(crate) fn iv_fit(x: &[f64], z: &[f64], y: &[f64], k: usize, on_singular: Singular) -> Result<Fit> {
    let n = y.len();
    debug_assert_eq!(x.len(), n * k);
    debug_assert_eq!(z.len(), n * k);
    if n == 0 {
        return Err(on_singular.error(0.0));
    }

    // Column scales keep the conditioning test independent of units.
    let col_norm = |m: &[f64], j: usize| (0..n).map(|i| m[i * k + j].powi(2)).sum::<f64>().sqrt();
    let sx: Vec<f64> = (0..k).map(|j| col_norm(x, j)).collect();
    let sz: Vec<f64> = (0..k).map(|j| col_norm(z, j)).collect();
    if sx.iter().chain(&sz).any(|&s| s == 0.0) {
        return Err(on_singular.error(0.0));
    }

    let mut m = DMatrix::<f64>::zeros(k, k);
    let mut zy = DVector::<f64>::zeros(k);
    for i in 0..n {
        let (xi, zi) = (&x[i * k..(i + 1) * k], &z[i * k..(i + 1) * k]);
        for a in 0..k {
            let za = zi[a] / sz[a];
            zy[a] += za * y[i];
            for b in 0..k {
                m[(a, b)] += za * xi[b] / sx[b];
            }
        }
    }

    let sv = m.clone().singular_values();
    let smax = sv.max();
    let rcond = if smax > 0.0 { sv.min() / smax } else { 0.0 };
    if !(rcond >= RCOND_MIN) {
        return Err(on_singular.error(rcond));
    }

    let qr = m.qr();
    let scaled = qr
        .solve(&zy)
        .ok_or_else(|| on_singular.error(rcond))?;
    let coef: Vec<f64> = (0..k).map(|j| scaled[j] / sx[j]).collect();

    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..k).map(|j| x[i * k + j] * coef[j]).sum::<f64>())
        .collect();

    // Meat in the scaled instrument coordinates.
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for i in 0..n {
        let e2 = residuals[i] * residuals[i];
        if e2 == 0.0 {
            continue;
        }
        let zi = &z[i * k..(i + 1) * k];
        for a in 0..k {
            let za = zi[a] / sz[a];
            for b in 0..k {
                meat[(a, b)] += e2 * za * zi[b] / sz[b];
            }
        }
    }
    let m_inv = qr
        .solve(&DMatrix::identity(k, k))
        .ok_or_else(|| on_singular.error(rcond))?;
    let mut cov = &m_inv * meat * m_inv.transpose();
    for a in 0..k {
        for b in 0..k {
            cov[(a, b)] /= sx[a] * sx[b];
        }
    }
    // Symmetrize away rounding.
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(Fit {
        coef,
        cov,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<f64> = (0..5).flat_map(|i| [1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 3.0 - 2.0 * i as f64).collect();
        let fit = iv_fit(&x, &x, &y, 2, Singular::Design).unwrap();
        assert!((fit.coef[0] - 3.0).abs() < 1e-12);
        assert!((fit.coef[1] + 2.0).abs() < 1e-12);
        assert!(fit.cov.iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn residuals_are_orthogonal_to_instruments() {
        let n = 40;
        let z: Vec<f64> = (0..n).flat_map(|i| [1.0, (i % 2) as f64, (i % 7) as f64 / 7.0]).collect();
        let x: Vec<f64> = (0..n)
            .flat_map(|i| [1.0, ((i % 2) as f64 + (i % 3) as f64 * 0.4).min(1.0), (i % 7) as f64 / 7.0])
            .collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 4.0).collect();
        let fit = iv_fit(&x, &z, &y, 3, Singular::Weak).unwrap();
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for a in 0..3 {
            let s: f64 = (0..n).map(|i| z[i * 3 + a] * fit.residuals[i]).sum();
            assert!(s.abs() < 1e-8 * ynorm);
        }
    }

    #[test]
    fn collinear_columns_are_rejected() {
        let x: Vec<f64> = (0..6).flat_map(|i| [1.0, i as f64, 2.0 * i as f64]).collect();
        let y = vec![1.0; 6];
        assert!(matches!(
            iv_fit(&x, &x, &y, 3, Singular::Design),
            Err(Error::SingularDesign { .. })
        ));
        assert!(matches!(
            iv_fit(&x, &x, &y, 3, Singular::Weak),
            Err(Error::WeakDesignSingular { .. })
        ));
    }
}
