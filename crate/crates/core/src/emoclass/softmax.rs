use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tfidf::FeatureMatrix;
use super::{Emotion, EmotionDistribution, N_EMOTIONS};

const K: usize = N_EMOTIONS;
const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoftmaxConfig {
    /// Initial step size for the line search.
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
}

impl Default for SoftmaxConfig {
    fn default() -> Self {
        SoftmaxConfig {
            lr: 1.0,
            epochs: 500,
            l2: 1e-4,
            tol: 1e-6,
        }
    }
}

/// Multinomial logistic regression; weights are stored class-major (`K × V`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxModel {
    pub n_features: usize,
    pub weights: Vec<f64>,
    pub bias: [f64; K],
    pub final_loss: f64,
    /// Objective value after each accepted step, starting from the initial point.
    pub loss_history: Vec<f64>,
}

impl SoftmaxModel {
    pub fn zeros(n_features: usize) -> Self {
        SoftmaxModel {
            n_features,
            weights: vec![0.0; K * n_features],
            bias: [0.0; K],
            final_loss: f64::NAN,
            loss_history: Vec::new(),
        }
    }

    pub fn weight(&self, e: Emotion, j: usize) -> f64 {
        self.weights[e.index() * self.n_features + j]
    }

    fn logits(&self, row: &[(u32, f64)]) -> [f64; K] {
        let mut z = self.bias;
        for &(j, x) in row {
            let j = j as usize;
            if j >= self.n_features {
                continue;
            }
            for (k, zk) in z.iter_mut().enumerate() {
                *zk += self.weights[k * self.n_features + j] * x;
            }
        }
        z
    }

    pub fn predict_row(&self, row: &[(u32, f64)]) -> EmotionDistribution {
        EmotionDistribution::from_raw(softmax(&self.logits(row)))
    }

    /// Mean cross-entropy plus `l2/2 · ‖W‖²` and its gradient (weights, bias).
    pub fn loss_and_gradient(&self, x: &FeatureMatrix, labels: &[Emotion], l2: f64) -> (f64, Vec<f64>, [f64; K]) {
        let v = self.n_features;
        let n = x.n_rows() as f64;
        let mut loss = 0.0;
        let mut gw = vec![0.0; K * v];
        let mut gb = [0.0; K];
        for (row, y) in x.rows.iter().zip(labels) {
            let z = self.logits(row);
            let lse = log_sum_exp(&z);
            loss -= z[y.index()] - lse;
            for k in 0..K {
                let r = ((z[k] - lse).exp() - f64::from(k == y.index())) / n;
                gb[k] += r;
                for &(j, xv) in row {
                    gw[k * v + j as usize] += r * xv;
                }
            }
        }
        let sq: f64 = self.weights.iter().map(|w| w * w).sum();
        for (g, w) in gw.iter_mut().zip(&self.weights) {
            *g += l2 * w;
        }
        (loss / n + 0.5 * l2 * sq, gw, gb)
    }
}

fn log_sum_exp(z: &[f64; K]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(z: &[f64; K]) -> [f64; K] {
    let lse = log_sum_exp(z);
    let mut p = z.map(|v| (v - lse).exp());
    let s: f64 = p.iter().sum();
    for v in &mut p {
        *v /= s;
    }
    p
}

/// Full-batch gradient descent with Armijo backtracking.
pub fn train_softmax(x: &FeatureMatrix, labels: &[Emotion], cfg: &SoftmaxConfig) -> Result<SoftmaxModel> {
    if x.n_rows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: labels.len(),
        });
    }
    if x.n_rows() == 0 || x.n_cols == 0 {
        return Err(Error::Invalid(
            "softmax training needs at least one row and one feature".into(),
        ));
    }
    let first = labels[0];
    if labels.iter().all(|l| *l == first) {
        return Err(Error::Invalid(
            "softmax training needs at least two distinct labels".into(),
        ));
    }
    if !(cfg.lr > 0.0 && cfg.l2 >= 0.0 && cfg.tol >= 0.0) {
        return Err(Error::Invalid(format!("bad softmax hyperparameters {cfg:?}")));
    }

    let mut model = SoftmaxModel::zeros(x.n_cols);
    let (mut f, mut gw, mut gb) = model.loss_and_gradient(x, labels, cfg.l2);
    model.loss_history.push(f);
    let mut step = cfg.lr;
    for _ in 0..cfg.epochs {
        let g2: f64 = gw.iter().chain(&gb).map(|g| g * g).sum();
        if g2.sqrt() <= cfg.tol {
            break;
        }
        let mut accepted = None;
        while step >= MIN_STEP {
            let mut cand = model.clone();
            for (w, g) in cand.weights.iter_mut().zip(&gw) {
                *w -= step * g;
            }
            for (b, g) in cand.bias.iter_mut().zip(&gb) {
                *b -= step * g;
            }
            let (fc, gwc, gbc) = cand.loss_and_gradient(x, labels, cfg.l2);
            if !fc.is_finite() {
                return Err(Error::NonFinite(format!(
                    "softmax loss became {fc} at step size {step} (previous loss {f})"
                )));
            }
            if fc <= f - ARMIJO_C * step * g2 {
                accepted = Some((cand, fc, gwc, gbc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc, gwc, gbc)) = accepted else { break };
        let improvement = f - fc;
        model = cand;
        f = fc;
        gw = gwc;
        gb = gbc;
        model.loss_history.push(f);
        step *= 2.0;
        if improvement <= f64::EPSILON * f.abs().max(1.0) {
            break;
        }
    }
    model.final_loss = f;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_uniform() {
        let m = SoftmaxModel::zeros(3);
        assert_eq!(m.predict_row(&[(0, 1.0), (2, -4.0)]), EmotionDistribution::uniform());
    }

    #[test]
    fn hand_computed_two_feature_output() {
        let mut m = SoftmaxModel::zeros(2);
        // happy: 1·x0, sad: 2·x1, bias on fear
        m.weights[Emotion::Happy.index() * 2] = 1.0;
        m.weights[Emotion::Sad.index() * 2 + 1] = 2.0;
        m.bias[Emotion::Fear.index()] = 0.5;
        let (x0, x1) = (0.6, 0.8);
        let z = [0.0, x0, 2.0 * x1, 0.0, 0.0, 0.0, 0.5f64];
        let denom: f64 = z.iter().map(|v| v.exp()).sum();
        let p = m.predict_row(&[(0, x0), (1, x1)]);
        for (k, zk) in z.iter().enumerate() {
            assert_abs_diff_eq!(p.probs()[k], zk.exp() / denom, epsilon = 1e-15);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dense: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..7).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let x = FeatureMatrix::from_dense(&dense).unwrap();
        let labels: Vec<Emotion> = (0..5).map(|i| Emotion::ALL[(i * 3) % 7]).collect();
        let mut m = SoftmaxModel::zeros(7);
        for w in &mut m.weights {
            *w = rng.random_range(-0.5..0.5);
        }
        for b in &mut m.bias {
            *b = rng.random_range(-0.5..0.5);
        }
        let l2 = 0.1;
        let (_, gw, gb) = m.loss_and_gradient(&x, &labels, l2);
        let h = 1e-5;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
        for i in 0..m.weights.len() {
            let mut p = m.clone();
            p.weights[i] += h;
            let mut q = m.clone();
            q.weights[i] -= h;
            let fd = (p.loss_and_gradient(&x, &labels, l2).0 - q.loss_and_gradient(&x, &labels, l2).0) / (2.0 * h);
            assert!(rel(fd, gw[i]) <= 1e-5, "w{i}: {fd} vs {}", gw[i]);
        }
        for k in 0..K {
            let mut p = m.clone();
            p.bias[k] += h;
            let mut q = m.clone();
            q.bias[k] -= h;
            let fd = (p.loss_and_gradient(&x, &labels, l2).0 - q.loss_and_gradient(&x, &labels, l2).0) / (2.0 * h);
            assert!(rel(fd, gb[k]) <= 1e-5, "b{k}: {fd} vs {}", gb[k]);
        }
    }

    #[test]
    fn separable_two_class_reaches_full_accuracy() {
        let mut dense = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            dense.push(vec![s * (0.5 + i as f64 / 40.0), 1.0]);
            labels.push(if s > 0.0 { Emotion::Happy } else { Emotion::Sad });
        }
        let x = FeatureMatrix::from_dense(&dense).unwrap();
        let m = train_softmax(
            &x,
            &labels,
            &SoftmaxConfig {
                l2: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        for (row, y) in x.rows.iter().zip(&labels) {
            assert_eq!(m.predict_row(row).argmax(), *y);
        }
        assert!(m.loss_history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(m.final_loss, *m.loss_history.last().unwrap());
    }

    #[test]
    fn contract_errors() {
        let x = FeatureMatrix::new(vec![vec![], vec![]], 0).unwrap();
        assert!(train_softmax(&x, &[Emotion::Happy, Emotion::Sad], &SoftmaxConfig::default()).is_err());
        let x = FeatureMatrix::from_dense(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(train_softmax(&x, &[Emotion::Happy, Emotion::Happy], &SoftmaxConfig::default()).is_err());
        assert!(matches!(
            train_softmax(&x, &[Emotion::Happy], &SoftmaxConfig::default()),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
