use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredCovariance {
    pub covariance: DMatrix<f64>,
    /// The symmetrized combination before any eigenvalue repair.
    pub unfloored: DMatrix<f64>,
    /// Number of clusters in each dimension, in input order.
    pub n_clusters: Vec<usize>,
    pub eigen_floor: EigenFloor,
}

/// Set when the combined covariance had negative eigenvalues that were raised to zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EigenFloor {
    pub applied: bool,
    pub min_eigenvalue: f64,
}

fn n_groups(ids: &[usize]) -> usize {
    ids.iter().max().map_or(0, |m| m + 1)
}

/// `Σ_g (X_g'e_g)(X_g'e_g)'`.
pub fn cluster_meat(x: &DMatrix<f64>, e: &DVector<f64>, ids: &[usize]) -> DMatrix<f64> {
    let k = x.ncols();
    let g = n_groups(ids);
    let mut scores = DMatrix::<f64>::zeros(g, k);
    for (i, &c) in ids.iter().enumerate() {
        for j in 0..k {
            scores[(c, j)] += x[(i, j)] * e[i];
        }
    }
    scores.transpose() * scores
}

/// One-way cluster sandwich with the `G/(G-1) · (N-1)/(N-K)` correction.
pub fn cluster_cov_one_way(
    x: &DMatrix<f64>,
    e: &DVector<f64>,
    xtx_inv: &DMatrix<f64>,
    ids: &[usize],
) -> Result<(DMatrix<f64>, usize)> {
    let (n, k) = x.shape();
    if ids.len() != n || e.len() != n {
        return Err(Error::LengthMismatch {
            left: ids.len(),
            right: n,
        });
    }
    let g = {
        let mut seen = vec![false; n_groups(ids)];
        ids.iter().for_each(|&i| seen[i] = true);
        seen.iter().filter(|s| **s).count()
    };
    if g < 2 {
        return Err(Error::Invalid(format!(
            "clustered variance needs at least 2 clusters, found {g}"
        )));
    }
    if n <= k {
        return Err(Error::Invalid(format!("{n} observations for {k} regressors")));
    }
    let (gf, nf, kf) = (g as f64, n as f64, k as f64);
    let factor = gf / (gf - 1.0) * (nf - 1.0) / (nf - kf);
    let meat = cluster_meat(x, e, ids);
    Ok((xtx_inv * meat * xtx_inv * factor, g))
}

/// Dense ids for the pairwise intersection of two clusterings.
pub fn intersect_ids(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut map: HashMap<(usize, usize), usize> = HashMap::new();
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let next = map.len();
            *map.entry((x, y)).or_insert(next)
        })
        .collect()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn floor_eigenvalues(v: DMatrix<f64>) -> (DMatrix<f64>, EigenFloor) {
    if v.nrows() == 0 {
        return (v, EigenFloor::default());
    }
    let eig = SymmetricEigen::new(v.clone());
    let min = eig.eigenvalues.min();
    if min >= 0.0 {
        return (
            v,
            EigenFloor {
                applied: false,
                min_eigenvalue: min,
            },
        );
    }
    let lambda = eig.eigenvalues.map(|l| l.max(0.0));
    let repaired = &eig.eigenvectors * DMatrix::from_diagonal(&lambda) * eig.eigenvectors.transpose();
    (
        symmetrize(&repaired),
        EigenFloor {
            applied: true,
            min_eigenvalue: min,
        },
    )
}

/// Cluster-robust covariance for one or two clustering dimensions; two-way uses
/// `V_a + V_b - V_{a∩b}`. With no dimensions, each observation is its own cluster.
pub fn cluster_covariance(
    x: &DMatrix<f64>,
    e: &DVector<f64>,
    xtx_inv: &DMatrix<f64>,
    clusters: &[&[usize]],
) -> Result<ClusteredCovariance> {
    let n = x.nrows();
    let singletons: Vec<usize> = (0..n).collect();
    let (v, n_clusters) = match clusters {
        [] => {
            let (v, g) = cluster_cov_one_way(x, e, xtx_inv, &singletons)?;
            (v, vec![g])
        }
        [a] => {
            let (v, g) = cluster_cov_one_way(x, e, xtx_inv, a)?;
            (v, vec![g])
        }
        [a, b] => {
            let (va, ga) = cluster_cov_one_way(x, e, xtx_inv, a)?;
            let (vb, gb) = cluster_cov_one_way(x, e, xtx_inv, b)?;
            let ab = intersect_ids(a, b);
            let (vab, _) = cluster_cov_one_way(x, e, xtx_inv, &ab)?;
            (va + vb - vab, vec![ga, gb])
        }
        _ => return Err(Error::Invalid("at most two clustering dimensions are supported".into())),
    };
    let unfloored = symmetrize(&v);
    let (covariance, eigen_floor) = floor_eigenvalues(unfloored.clone());
    Ok(ClusteredCovariance {
        covariance,
        unfloored,
        n_clusters,
        eigen_floor,
    })
}
