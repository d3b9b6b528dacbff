use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

use super::demean::{demean, DEFAULT_MAX_ITER, DEFAULT_TOL};
use super::panel::Panel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    /// SD after removing the fixed effects.
    pub within_sd: f64,
}

fn sample_sd_about(values: &[f64], center: f64) -> f64 {
    if values.len() < 2 {
        return f64::NAN;
    }
    (values.iter().map(|v| (v - center).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Mean, SD and within-SD of each column over its non-missing rows.
pub fn summary_stats(panel: &Panel, columns: &[String], fe: &[String]) -> Result<Vec<SummaryRow>> {
    columns
        .iter()
        .map(|name| {
            let col = panel.column(name)?;
            let keep: Vec<bool> = col.iter().map(|v| v.is_finite()).collect();
            let values: Vec<f64> = col.iter().copied().filter(|v| v.is_finite()).collect();
            let n = values.len();
            if n == 0 {
                return Ok(SummaryRow {
                    name: name.clone(),
                    n,
                    mean: f64::NAN,
                    sd: f64::NAN,
                    within_sd: f64::NAN,
                });
            }
            let mean = values.iter().sum::<f64>() / n as f64;
            let sub = panel.filter_rows(&keep);
            let ids: Vec<Vec<usize>> = fe.iter().map(|d| sub.group_ids(d)).collect::<Result<_>>()?;
            let refs: Vec<&[usize]> = ids.iter().map(Vec::as_slice).collect();
            let mut cols = vec![values.clone()];
            demean(&mut cols, &refs, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let within_sd = if fe.is_empty() {
                sample_sd_about(&values, mean)
            } else {
                sample_sd_about(&cols[0], 0.0)
            };
            Ok(SummaryRow {
                name: name.clone(),
                n,
                mean,
                sd: sample_sd_about(&values, mean),
                within_sd,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// Pearson correlations; `None` where a column has no variance.
    pub r: Vec<Vec<Option<f64>>>,
    /// Two-sided p-values times the number of distinct pairs, capped at 1.
    pub p_adjusted: Vec<Vec<Option<f64>>>,
    pub n: Vec<Vec<usize>>,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided p-value of a Pearson correlation from `n` pairs.
pub fn correlation_p_value(r: f64, n: usize) -> Option<f64> {
    if n < 3 {
        return None;
    }
    let df = (n - 2) as f64;
    if r.abs() >= 1.0 {
        return Some(0.0);
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some(2.0 * dist.sf(t.abs()))
}

/// Pairwise Pearson correlations on pairwise-complete rows, Bonferroni-adjusted.
pub fn correlation_matrix(panel: &Panel, columns: &[String]) -> Result<CorrelationMatrix> {
    if columns.len() < 2 {
        return Err(Error::Invalid("a correlation matrix needs at least two columns".into()));
    }
    let data: Vec<&[f64]> = columns.iter().map(|c| panel.column(c)).collect::<Result<_>>()?;
    let k = columns.len();
    let pairs = (k * (k - 1) / 2) as f64;
    let mut r = vec![vec![None; k]; k];
    let mut p = vec![vec![None; k]; k];
    let mut n = vec![vec![0; k]; k];
    for i in 0..k {
        for j in i..k {
            let (xs, ys): (Vec<f64>, Vec<f64>) = data[i]
                .iter()
                .zip(data[j])
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .map(|(a, b)| (*a, *b))
                .unzip();
            let rho = if xs.len() >= 2 { pearson(&xs, &ys) } else { None };
            let padj = if i == j {
                None
            } else {
                rho.and_then(|v| correlation_p_value(v, xs.len()))
                    .map(|v| (v * pairs).min(1.0))
            };
            for (a, b) in [(i, j), (j, i)] {
                r[a][b] = rho;
                p[a][b] = padj;
                n[a][b] = xs.len();
            }
        }
    }
    Ok(CorrelationMatrix {
        names: columns.to_vec(),
        r,
        p_adjusted: p,
        n,
    })
}
