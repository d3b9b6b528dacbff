use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative size below which a column counts as linearly dependent on the ones before it.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    pub ssr: f64,
    /// `(X'X)^{-1}`, reused by the sandwich estimators.
    pub xtx_inv: DMatrix<f64>,
}

impl OlsFit {
    /// `1 - SSR / TSS` with TSS taken about the mean of `y`.
    pub fn r_squared(&self, y: &[f64]) -> f64 {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        1.0 - self.ssr / tss
    }
}

/// Least squares by Householder QR. Columns that are (numerically) linear
/// combinations of earlier columns are reported by name.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: n,
        });
    }
    if names.len() != k {
        return Err(Error::LengthMismatch {
            left: names.len(),
            right: k,
        });
    }
    if k == 0 {
        return Err(Error::Invalid("regression has no regressors".into()));
    }
    if n < k {
        return Err(Error::RankDeficient(names.to_vec()));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression input".into()));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let dependent: Vec<String> = (0..k)
        .filter(|&j| {
            let norm = x.column(j).norm();
            norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * norm
        })
        .map(|j| names[j].clone())
        .collect();
    if !dependent.is_empty() {
        return Err(Error::RankDeficient(dependent));
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let residuals = y - x * &beta;
    let ssr = residuals.norm_squared();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(OlsFit {
        beta,
        residuals,
        ssr,
        xtx_inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn exact_fit() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let fit = ols(&x, &y, &names(2)).unwrap();
        assert_abs_diff_eq!(fit.beta[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.beta[1], 2.0, epsilon = 1e-12);
        assert!(fit.residuals.amax() < 1e-12);
        assert_abs_diff_eq!(fit.r_squared(y.as_slice()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn intercept_only_is_mean() {
        let x = DMatrix::from_element(5, 1, 1.0);
        let y = DVector::from_vec(vec![2.0, 4.0, 9.0, 1.0, 3.0]);
        let fit = ols(&x, &y, &names(1)).unwrap();
        assert_abs_diff_eq!(fit.beta[0], 3.8, epsilon = 1e-12);
    }

    #[test]
    fn pseudo_inverse_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(50, 3, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(50, |_, _| rng.random_range(-1.0..1.0));
        let fit = ols(&x, &y, &names(3)).unwrap();
        // (X'X)^{-1} X'y through an explicit inverse
        let xtx = x.transpose() * &x;
        let oracle = xtx.clone().try_inverse().unwrap() * x.transpose() * &y;
        for j in 0..3 {
            assert_abs_diff_eq!(fit.beta[j], oracle[j], epsilon = 1e-9);
        }
        let ortho = x.transpose() * &fit.residuals;
        assert!(ortho.amax() < 1e-8);
        let ident = &fit.xtx_inv * xtx;
        assert!((ident - DMatrix::<f64>::identity(3, 3)).amax() < 1e-10);
    }

    #[test]
    fn names_dependent_columns() {
        let x = DMatrix::from_fn(6, 3, |i, j| match j {
            0 => i as f64,
            1 => (i * i) as f64,
            _ => 2.0 * i as f64,
        });
        let y = DVector::from_fn(6, |i, _| i as f64);
        match ols(&x, &y, &["a".into(), "b".into(), "c".into()]) {
            Err(Error::RankDeficient(cols)) => assert_eq!(cols, vec!["c".to_string()]),
            other => panic!("{other:?}"),
        }
        let zero = DMatrix::from_fn(4, 2, |i, j| if j == 0 { i as f64 } else { 0.0 });
        assert!(matches!(
            ols(&zero, &DVector::zeros(4), &names(2)),
            Err(Error::RankDeficient(c)) if c == vec!["x1".to_string()]
        ));
    }
}
