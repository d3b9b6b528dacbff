use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tfidf::FeatureMatrix;
use super::{Emotion, EmotionDistribution, N_EMOTIONS};

const K: usize = N_EMOTIONS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CartConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for CartConfig {
    fn default() -> Self {
        CartConfig {
            max_depth: 20,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        dist: [f64; K],
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
    pub n_features: usize,
}

impl TreeModel {
    pub fn predict_row(&self, row: &[(u32, f64)]) -> EmotionDistribution {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { dist } => return EmotionDistribution::from_raw(*dist),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let v = row.binary_search_by_key(feature, |e| e.0).map_or(0.0, |p| row[p].1);
                    i = if v <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

fn gini_mass(counts: &[usize; K], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let s: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    n - s / n
}

struct Candidate {
    feature: u32,
    threshold: f64,
    impurity: f64,
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    labels: &'a [Emotion],
    cfg: CartConfig,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> [usize; K] {
        let mut c = [0; K];
        for &r in rows {
            c[self.labels[r].index()] += 1;
        }
        c
    }

    /// Lowest weighted Gini over all (feature, midpoint) splits; the first
    /// feature and smallest threshold win ties.
    fn best_split(&self, rows: &[usize], total: &[usize; K]) -> Option<Candidate> {
        let n = rows.len();
        let mut entries: Vec<(u32, f64, usize)> = Vec::new();
        for &r in rows {
            for &(j, v) in &self.x.rows[r] {
                if v != 0.0 {
                    entries.push((j, v, self.labels[r].index()));
                }
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

        let mut best: Option<Candidate> = None;
        let mut start = 0;
        while start < entries.len() {
            let feature = entries[start].0;
            let end = start + entries[start..].iter().take_while(|e| e.0 == feature).count();
            let run = &entries[start..end];
            start = end;

            // values in ascending order, with the implicit zeros slotted in
            let mut zero_counts = *total;
            for e in run {
                zero_counts[e.2] -= 1;
            }
            let n_zero = n - run.len();
            let split_at = run.partition_point(|e| e.1 < 0.0);
            let mut groups: Vec<(f64, [usize; K], usize)> = Vec::new();
            let push = |v: f64, c: &[usize; K], m: usize, groups: &mut Vec<(f64, [usize; K], usize)>| match groups
                .last_mut()
            {
                Some(g) if g.0 == v => {
                    for (acc, n) in g.1.iter_mut().zip(c) {
                        *acc += n;
                    }
                    g.2 += m;
                }
                _ => groups.push((v, *c, m)),
            };
            for e in &run[..split_at] {
                let mut c = [0; K];
                c[e.2] = 1;
                push(e.1, &c, 1, &mut groups);
            }
            if n_zero > 0 {
                push(0.0, &zero_counts, n_zero, &mut groups);
            }
            for e in &run[split_at..] {
                let mut c = [0; K];
                c[e.2] = 1;
                push(e.1, &c, 1, &mut groups);
            }

            let mut left = [0; K];
            let mut n_left = 0;
            for w in groups.windows(2) {
                for (acc, n) in left.iter_mut().zip(&w[0].1) {
                    *acc += n;
                }
                n_left += w[0].2;
                let n_right = n - n_left;
                if n_left < self.cfg.min_leaf || n_right < self.cfg.min_leaf {
                    continue;
                }
                let mut right = *total;
                for k in 0..K {
                    right[k] -= left[k];
                }
                let impurity = gini_mass(&left, n_left) + gini_mass(&right, n_right);
                if best.as_ref().is_none_or(|b| impurity < b.impurity - 1e-12) {
                    best = Some(Candidate {
                        feature,
                        threshold: 0.5 * (w[0].0 + w[1].0),
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let total = self.counts(&rows);
        let n = rows.len();
        let id = self.nodes.len();
        let dist = if n == 0 {
            [1.0 / K as f64; K]
        } else {
            total.map(|c| c as f64 / n as f64)
        };
        self.nodes.push(Node::Leaf { dist });
        let pure = total.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.cfg.max_depth || n < 2 * self.cfg.min_leaf.max(1) {
            return id;
        }
        let Some(split) = self.best_split(&rows, &total) else {
            return id;
        };
        let value = |r: usize| {
            let row = &self.x.rows[r];
            row.binary_search_by_key(&split.feature, |e| e.0)
                .map_or(0.0, |p| row[p].1)
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| value(r) <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

fn check_inputs(x: &FeatureMatrix, labels: &[Emotion]) -> Result<()> {
    if x.n_rows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Invalid("cannot train a tree on zero rows".into()));
    }
    Ok(())
}

/// Greedy CART with Gini impurity. Splits are taken even when they do not
/// reduce impurity, as long as depth and leaf-size limits allow.
pub fn train_cart(x: &FeatureMatrix, labels: &[Emotion], cfg: &CartConfig) -> Result<TreeModel> {
    check_inputs(x, labels)?;
    let mut b = Builder {
        x,
        labels,
        cfg: *cfg,
        nodes: Vec::new(),
    };
    b.grow((0..labels.len()).collect(), 0);
    Ok(TreeModel {
        nodes: b.nodes,
        n_features: x.n_cols,
    })
}

/// Bootstrap-aggregated trees; predictions average the leaf distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
}

impl ForestModel {
    pub fn predict_row(&self, row: &[(u32, f64)]) -> EmotionDistribution {
        let mut acc = [0.0; K];
        for t in &self.trees {
            for (a, p) in acc.iter_mut().zip(t.predict_row(row).probs()) {
                *a += p;
            }
        }
        let n = self.trees.len() as f64;
        EmotionDistribution::from_raw(acc.map(|a| a / n))
    }
}

pub fn train_forest(
    x: &FeatureMatrix,
    labels: &[Emotion],
    cfg: &CartConfig,
    n_trees: usize,
    seed: u64,
) -> Result<ForestModel> {
    check_inputs(x, labels)?;
    if n_trees == 0 {
        return Err(Error::Invalid("a forest needs at least one tree".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = labels.len();
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let xs = x.subset(&idx);
        let ys: Vec<Emotion> = idx.iter().map(|&i| labels[i]).collect();
        trees.push(train_cart(&xs, &ys, cfg)?);
    }
    Ok(ForestModel { trees })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (FeatureMatrix, Vec<Emotion>) {
        let mut dense = Vec::new();
        let mut labels = Vec::new();
        for a in [0.0, 1.0] {
            for b in [0.0, 1.0] {
                for _ in 0..3 {
                    dense.push(vec![a, b]);
                    labels.push(if (a == 1.0) ^ (b == 1.0) {
                        Emotion::Happy
                    } else {
                        Emotion::Sad
                    });
                }
            }
        }
        (FeatureMatrix::from_dense(&dense).unwrap(), labels)
    }

    #[test]
    fn pure_data_single_leaf() {
        let x = FeatureMatrix::from_dense(&[vec![1.0], vec![2.0], vec![0.0]]).unwrap();
        let t = train_cart(&x, &[Emotion::Fear; 3], &CartConfig::default()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict_row(&[]), EmotionDistribution::one_hot(Emotion::Fear));
    }

    #[test]
    fn xor_needs_depth_two() {
        let (x, y) = xor();
        let t = train_cart(
            &x,
            &y,
            &CartConfig {
                max_depth: 2,
                min_leaf: 1,
            },
        )
        .unwrap();
        for (row, label) in x.rows.iter().zip(&y) {
            assert_eq!(t.predict_row(row), EmotionDistribution::one_hot(*label));
        }
        // brute force: no single threshold split separates XOR
        let stump = train_cart(
            &x,
            &y,
            &CartConfig {
                max_depth: 1,
                min_leaf: 1,
            },
        )
        .unwrap();
        let correct = x
            .rows
            .iter()
            .zip(&y)
            .filter(|(r, l)| stump.predict_row(r).argmax() == **l)
            .count();
        assert!(correct < y.len());
    }

    #[test]
    fn min_leaf_too_large_gives_priors() {
        let (x, y) = xor();
        let t = train_cart(
            &x,
            &y,
            &CartConfig {
                max_depth: 5,
                min_leaf: 100,
            },
        )
        .unwrap();
        assert_eq!(t.nodes.len(), 1);
        let p = t.predict_row(&[]);
        assert_eq!(p.get(Emotion::Happy), 0.5);
        assert_eq!(p.get(Emotion::Sad), 0.5);
    }

    #[test]
    fn negative_values_split_correctly() {
        let x = FeatureMatrix::from_dense(&[vec![-2.0], vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        let y = [Emotion::Sad, Emotion::Sad, Emotion::Happy, Emotion::Happy];
        let t = train_cart(&x, &y, &CartConfig::default()).unwrap();
        assert_eq!(t.depth(), 1);
        match &t.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, -0.5),
            n => panic!("{n:?}"),
        }
    }

    #[test]
    fn leaves_respect_min_leaf() {
        let (x, y) = xor();
        let t = train_cart(
            &x,
            &y,
            &CartConfig {
                max_depth: 10,
                min_leaf: 4,
            },
        )
        .unwrap();
        fn sizes(t: &TreeModel, x: &FeatureMatrix) -> Vec<usize> {
            let mut per_leaf = std::collections::HashMap::new();
            for row in &x.rows {
                let mut i = 0;
                while let Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } = &t.nodes[i]
                {
                    let v = row.iter().find(|e| e.0 == *feature).map_or(0.0, |e| e.1);
                    i = if v <= *threshold { *left } else { *right };
                }
                *per_leaf.entry(i).or_insert(0) += 1;
            }
            per_leaf.into_values().collect()
        }
        assert!(sizes(&t, &x).iter().all(|&s| s >= 4));
    }

    #[test]
    fn forest_is_seed_deterministic() {
        let (x, y) = xor();
        let cfg = CartConfig::default();
        let a = train_forest(&x, &y, &cfg, 5, 3).unwrap();
        let b = train_forest(&x, &y, &cfg, 5, 3).unwrap();
        assert_eq!(a, b);
        let p = a.predict_row(&x.rows[0]);
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
