use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemeanReport {
    pub iterations: usize,
    /// Largest absolute group mean removed in the final sweep.
    pub max_change: f64,
}

fn group_sizes(ids: &[usize]) -> Vec<f64> {
    let g = ids.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0.0; g];
    for &i in ids {
        sizes[i] += 1.0;
    }
    sizes
}

/// Sweeps out group means for each grouping in turn, repeating until no
/// sweep removes a mean larger than `tol`. Columns are modified in place.
pub fn demean(columns: &mut [Vec<f64>], groups: &[&[usize]], tol: f64, max_iter: usize) -> Result<DemeanReport> {
    let n = columns.first().map_or(0, Vec::len);
    for c in columns.iter() {
        if c.len() != n {
            return Err(Error::LengthMismatch {
                left: c.len(),
                right: n,
            });
        }
    }
    for g in groups {
        if g.len() != n {
            return Err(Error::LengthMismatch {
                left: g.len(),
                right: n,
            });
        }
    }
    if groups.is_empty() || n == 0 {
        return Ok(DemeanReport {
            iterations: 0,
            max_change: 0.0,
        });
    }
    let sizes: Vec<Vec<f64>> = groups.iter().map(|g| group_sizes(g)).collect();
    let mut sums: Vec<f64> = Vec::new();
    let mut max_change = f64::INFINITY;
    for iter in 1..=max_iter {
        max_change = 0.0f64;
        for col in columns.iter_mut() {
            for (ids, size) in groups.iter().zip(&sizes) {
                sums.clear();
                sums.resize(size.len(), 0.0);
                for (v, &g) in col.iter().zip(ids.iter()) {
                    sums[g] += v;
                }
                for (s, &m) in sums.iter_mut().zip(size) {
                    *s /= m;
                    max_change = max_change.max(s.abs());
                }
                for (v, &g) in col.iter_mut().zip(ids.iter()) {
                    *v -= sums[g];
                }
            }
        }
        if !max_change.is_finite() {
            return Err(Error::NonFinite("demeaning input".into()));
        }
        // a single grouping is exact after one sweep
        if max_change < tol || (groups.len() == 1 && iter == 1) {
            return Ok(DemeanReport {
                iterations: iter,
                max_change,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: max_change,
    })
}

/// Convenience wrapper for a single column.
pub fn demean_column(values: &[f64], groups: &[&[usize]]) -> Result<Vec<f64>> {
    let mut cols = vec![values.to_vec()];
    demean(&mut cols, groups, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok(cols.pop().expect("one column"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn group_means(col: &[f64], ids: &[usize]) -> Vec<f64> {
        let g = ids.iter().max().unwrap() + 1;
        let mut s = vec![0.0; g];
        let mut c = vec![0.0; g];
        for (v, &i) in col.iter().zip(ids) {
            s[i] += v;
            c[i] += 1.0;
        }
        s.iter().zip(&c).map(|(a, b)| a / b).collect()
    }

    #[test]
    fn single_firm_is_date_demeaning() {
        let firm = vec![0; 4];
        let date = vec![0, 1, 2, 3];
        let mut cols = vec![vec![1.0, 5.0, 2.0, 8.0]];
        let r = demean(&mut cols, &[&firm, &date], 1e-10, 10).unwrap();
        assert!(r.iterations <= 2);
        assert!(cols[0].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn balanced_two_by_two_closed_form() {
        // y_fd - ybar_f - ybar_d + ybar
        let firm = vec![0, 0, 1, 1];
        let date = vec![0, 1, 0, 1];
        let y = [1.0, 4.0, 2.0, 9.0];
        let ybar = 4.0;
        let fm = [2.5, 5.5];
        let dm = [1.5, 6.5];
        let expect: Vec<f64> = (0..4).map(|i| y[i] - fm[firm[i]] - dm[date[i]] + ybar).collect();
        let mut cols = vec![y.to_vec()];
        let r = demean(&mut cols, &[&firm, &date], 1e-10, 1000).unwrap();
        assert_eq!(r.iterations, 2);
        for i in 0..4 {
            assert_abs_diff_eq!(cols[0][i], expect[i], epsilon = 1e-15);
        }
        // the second sweep found nothing left to remove
        assert!(r.max_change < 1e-14);
    }

    #[test]
    fn reports_non_convergence() {
        let firm = vec![0, 0, 1, 1, 2];
        let date = vec![0, 1, 1, 2, 2];
        let mut cols = vec![vec![1.0, 2.0, 5.0, 3.0, 7.0]];
        match demean(&mut cols, &[&firm, &date], 1e-300, 3) {
            Err(Error::NoConvergence { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn group_means_vanish(
            cells in prop::collection::btree_set((0usize..6, 0usize..6), 4..36),
            seed in 0u64..1000,
        ) {
            let cells: Vec<_> = cells.into_iter().collect();
            let mut firm: Vec<usize> = cells.iter().map(|c| c.0).collect();
            let mut date: Vec<usize> = cells.iter().map(|c| c.1).collect();
            // dense ids
            for ids in [&mut firm, &mut date] {
                let mut u = ids.clone();
                u.sort();
                u.dedup();
                for v in ids.iter_mut() {
                    *v = u.binary_search(v).unwrap();
                }
            }
            let y: Vec<f64> = (0..cells.len()).map(|i| ((i as u64 * 7919 + seed) % 101) as f64 / 10.0).collect();
            let mut cols = vec![y];
            demean(&mut cols, &[&firm, &date], 1e-10, 100_000).unwrap();
            for ids in [&firm, &date] {
                for m in group_means(&cols[0], ids) {
                    prop_assert!(m.abs() <= 1e-9);
                }
            }
        }
    }
}
