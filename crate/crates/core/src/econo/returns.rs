use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::panel::Panel;

pub const OPEN_CLOSE: &str = "open_close";
pub const CLOSE_OPEN: &str = "close_open";
pub const LAG_OPEN_CLOSE: &str = "lag_open_close";
pub const RET_M20_M1: &str = "ret_m20_m1";
pub const VOLATILITY: &str = "vol_m183_m1";
pub const LOG_MCAP: &str = "log_mcap";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "unit", content = "length")]
pub enum VolWindow {
    /// Returns dated within this many calendar days before t (t excluded).
    CalendarDays(u32),
    /// The previous this-many trading rows of the firm.
    TradingDays(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReturnConfig {
    pub open: String,
    pub close: String,
    /// Shares outstanding; market cap is skipped when the column is absent.
    pub shares: String,
    pub momentum_days: usize,
    pub volatility: VolWindow,
}

impl Default for ReturnConfig {
    fn default() -> Self {
        ReturnConfig {
            open: "open".into(),
            close: "close".into(),
            shares: "shares".into(),
            momentum_days: 20,
            volatility: VolWindow::CalendarDays(183),
        }
    }
}

fn ratio_minus_one(num: f64, den: f64) -> f64 {
    if den > 0.0 && num.is_finite() {
        num / den - 1.0
    } else {
        f64::NAN
    }
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Adds return and control columns. Each firm's rows are its trading days in
/// date order; anything needing an unavailable prior row is missing.
pub fn compute_returns(panel: &mut Panel, cfg: &ReturnConfig) -> Result<()> {
    let n = panel.n_rows();
    let open = panel.column(&cfg.open)?.to_vec();
    let close = panel.column(&cfg.close)?.to_vec();
    let shares = panel.column(&cfg.shares).ok().map(<[f64]>::to_vec);
    let dates = panel.dates().to_vec();

    let mut oc = vec![f64::NAN; n];
    let mut co = vec![f64::NAN; n];
    let mut lag_oc = vec![f64::NAN; n];
    let mut mom = vec![f64::NAN; n];
    let mut vol = vec![f64::NAN; n];
    let mut mcap = vec![f64::NAN; n];
    // close-to-close return realized on row i
    let mut daily = vec![f64::NAN; n];

    for (s, e) in panel.firm_runs() {
        for i in s..e {
            // (close - open) / open, written as a ratio to share the guard
            oc[i] = ratio_minus_one(close[i], open[i]);
            if i > s {
                co[i] = ratio_minus_one(open[i], close[i - 1]);
                daily[i] = ratio_minus_one(close[i], close[i - 1]);
                lag_oc[i] = oc[i - 1];
                if let Some(sh) = &shares {
                    let cap = sh[i - 1] * close[i - 1];
                    if cap.is_finite() && cap >= 0.0 {
                        mcap[i] = cap.ln_1p();
                    }
                }
            }
        }
        for i in s..e {
            let k = cfg.momentum_days;
            if k > 0 && i > s + k {
                mom[i] = daily[i - k..i].iter().fold(1.0, |acc, r| acc * (1.0 + r)) - 1.0;
            }
            let window: Vec<f64> = match cfg.volatility {
                VolWindow::TradingDays(m) => {
                    let m = m as usize;
                    if i < s + m + 1 {
                        continue;
                    }
                    daily[i - m..i].to_vec()
                }
                VolWindow::CalendarDays(days) => {
                    let from = dates[i] - chrono::Days::new(u64::from(days));
                    if dates[s] > from {
                        // history does not reach back far enough
                        continue;
                    }
                    (s..i).filter(|&j| dates[j] >= from).map(|j| daily[j]).collect()
                }
            };
            if window.iter().all(|r| r.is_finite()) {
                vol[i] = sample_sd(&window);
            }
        }
    }

    panel.set_column(OPEN_CLOSE, oc)?;
    panel.set_column(CLOSE_OPEN, co)?;
    panel.set_column(LAG_OPEN_CLOSE, lag_oc)?;
    panel.set_column(RET_M20_M1, mom)?;
    panel.set_column(VOLATILITY, vol)?;
    if shares.is_some() {
        panel.set_column(LOG_MCAP, mcap)?;
    }
    Ok(())
}
