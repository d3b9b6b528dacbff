use crate::error::{Error, Result};

/// Type-1 sample quantile: the order statistic at rank `ceil(q * n)`, clamped to `[1, n]`.
/// `sorted` must be ascending and free of NaN.
pub fn quantile_type1(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    // the epsilon keeps q * n from rounding up past an exact integer rank
    let k = (q * n as f64 - 1e-12).ceil().clamp(1.0, n as f64) as usize;
    sorted[k - 1]
}

/// Clamps the finite values of `values` to their `[lo, hi]` type-1 quantiles and
/// returns the bounds used. Non-finite entries are left alone.
pub fn winsorize_in_place(values: &mut [f64], lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::OutOfRange(format!("winsor limits ({lo}, {hi})")));
    }
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() {
        return Err(Error::Invalid("cannot winsorize a column with no finite values".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let (a, b) = (quantile_type1(&sorted, lo), quantile_type1(&sorted, hi));
    for v in values.iter_mut().filter(|v| v.is_finite()) {
        *v = v.clamp(a, b);
    }
    Ok((a, b))
}

pub fn winsorize(values: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    let mut out = values.to_vec();
    winsorize_in_place(&mut out, lo, hi)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn oracle(values: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        let mut s = values.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = s.len() as f64;
        let pick = |q: f64| {
            let mut k = 1usize;
            while (k as f64) < q * n - 1e-12 {
                k += 1;
            }
            s[k.min(s.len()) - 1]
        };
        let (a, b) = (pick(lo), pick(hi));
        values.iter().map(|v| v.max(a).min(b)).collect()
    }

    #[test]
    fn constant_column_unchanged() {
        assert_eq!(winsorize(&[3.0; 10], 0.001, 0.999).unwrap(), vec![3.0; 10]);
    }

    #[test]
    fn one_to_thousand() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        let w = winsorize(&xs, 0.01, 0.99).unwrap();
        assert_eq!(w[0], 10.0);
        assert_eq!(w[999], 990.0);
        assert_eq!(w, oracle(&xs, 0.01, 0.99));
        // rank ceil(0.999 * 1000) = 999 at the top, rank 1 at the bottom
        let w = winsorize(&xs, 0.001, 0.999).unwrap();
        assert_eq!(w[0], 1.0);
        assert_eq!(w[999], 999.0);
        assert_eq!(w, oracle(&xs, 0.001, 0.999));
    }

    #[test]
    fn missing_values_pass_through() {
        let w = winsorize(&[f64::NAN, 1.0, 2.0, 100.0], 0.0, 0.5).unwrap();
        assert!(w[0].is_nan());
        assert_eq!(&w[1..], &[1.0, 2.0, 2.0]);
        assert!(winsorize(&[f64::NAN, f64::NAN], 0.1, 0.9).is_err());
        assert!(winsorize(&[1.0], 0.9, 0.1).is_err());
    }

    #[test]
    fn bounds_are_attained_when_clamping() {
        let xs = [5.0, -3.0, 8.0, 1.0, 0.0, 12.0, 7.0];
        let mut w = xs.to_vec();
        let (a, b) = winsorize_in_place(&mut w, 0.2, 0.8).unwrap();
        assert_eq!(w.iter().copied().fold(f64::INFINITY, f64::min), a);
        assert_eq!(w.iter().copied().fold(f64::NEG_INFINITY, f64::max), b);
    }

    proptest! {
        #[test]
        fn matches_oracle(xs in prop::collection::vec(-1e3f64..1e3, 1..300), lo in 0.0f64..0.5, span in 0.0f64..0.5) {
            let hi = lo + span;
            prop_assert_eq!(winsorize(&xs, lo, hi).unwrap(), oracle(&xs, lo, hi));
        }

        #[test]
        fn idempotent(xs in prop::collection::vec(-1e3f64..1e3, 1..300), lo in 0.0f64..0.1, hi in 0.9f64..1.0) {
            let once = winsorize(&xs, lo, hi).unwrap();
            prop_assert_eq!(winsorize(&once, lo, hi).unwrap(), once);
        }

        #[test]
        fn order_independent(xs in prop::collection::vec(-1e3f64..1e3, 1..200), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut perm: Vec<usize> = (0..xs.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled: Vec<f64> = perm.iter().map(|&i| xs[i]).collect();
            let a = winsorize(&xs, 0.05, 0.95).unwrap();
            let b = winsorize(&shuffled, 0.05, 0.95).unwrap();
            let back: Vec<f64> = perm.iter().map(|&i| a[i]).collect();
            prop_assert_eq!(back, b);
        }
    }
}
