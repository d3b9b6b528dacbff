use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;

use super::model::RegressionResult;
use super::panel::fmt_value;
use super::stats::{CorrelationMatrix, SummaryRow};

/// Stars for regression coefficients: 10%, 5% and 1%.
pub fn regression_stars(p: f64) -> &'static str {
    match p {
        p if p < 0.01 => "***",
        p if p < 0.05 => "**",
        p if p < 0.10 => "*",
        _ => "",
    }
}

/// Stars for correlations: 5%, 1% and 0.1%.
pub fn correlation_stars(p: f64) -> &'static str {
    match p {
        p if p < 0.001 => "***",
        p if p < 0.01 => "**",
        p if p < 0.05 => "*",
        _ => "",
    }
}

type FooterRow = (&'static str, fn(&RegressionResult) -> String);

fn render(rows: &[Vec<String>]) -> String {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..ncols)
        .map(|j| {
            rows.iter()
                .filter_map(|r| r.get(j))
                .map(|c| c.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (j, cell) in row.iter().enumerate() {
            let pad = widths[j] - cell.chars().count();
            if j == 0 {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            } else {
                line.push_str("  ");
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn terms(results: &[RegressionResult]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in results {
        for c in &r.coefficients {
            if !names.contains(&c.name) {
                names.push(c.name.clone());
            }
        }
    }
    names
}

/// Side-by-side regression table: coefficient with stars, SE in parentheses below.
pub fn regression_table(results: &[RegressionResult]) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut head = vec![String::new()];
    head.extend((1..=results.len()).map(|i| format!("({i})")));
    rows.push(head);
    let mut label = vec!["".to_string()];
    label.extend(results.iter().map(|r| r.name.clone()));
    rows.push(label);
    let mut dep = vec!["Dependent".to_string()];
    dep.extend(results.iter().map(|r| r.dependent.clone()));
    rows.push(dep);
    for term in terms(results) {
        let mut est = vec![term.clone()];
        let mut se = vec![String::new()];
        for r in results {
            match r.coefficient(&term) {
                Some(c) => {
                    est.push(format!("{:.4}{}", c.estimate, regression_stars(c.p)));
                    se.push(format!("({:.4})", c.se));
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        rows.push(est);
        rows.push(se);
    }
    let footer: [FooterRow; 6] = [
        ("sigma_y within", |r| format!("{:.4}", r.sigma_within)),
        ("Observations", |r| r.n.to_string()),
        ("R2 within", |r| format!("{:.4}", r.r2_within)),
        ("R2", |r| format!("{:.4}", r.r2)),
        ("Fixed effects", |r| {
            if r.fe.is_empty() {
                "none".into()
            } else {
                r.fe.join(", ")
            }
        }),
        ("Clusters", |r| {
            if r.cluster.is_empty() {
                "robust".into()
            } else {
                r.cluster
                    .iter()
                    .map(|(d, g)| format!("{d} ({g})"))
                    .collect::<Vec<_>>()
                    .join(", ")
            }
        }),
    ];
    for (name, f) in footer {
        let mut row = vec![name.to_string()];
        row.extend(results.iter().map(f));
        rows.push(row);
    }
    let mut out = render(&rows);
    out.push_str("* p<0.10, ** p<0.05, *** p<0.01\n");
    out
}

/// Long-format CSV, one row per (model, term).
pub fn write_regression_csv<W: Write>(writer: W, results: &[RegressionResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "model",
        "dependent",
        "term",
        "estimate",
        "se",
        "t",
        "p",
        "stars",
        "n",
        "r2_within",
        "r2",
        "sigma_within",
    ])?;
    for r in results {
        for c in &r.coefficients {
            w.write_record([
                r.name.clone(),
                r.dependent.clone(),
                c.name.clone(),
                fmt_value(c.estimate),
                fmt_value(c.se),
                fmt_value(c.t),
                fmt_value(c.p),
                regression_stars(c.p).to_string(),
                r.n.to_string(),
                fmt_value(r.r2_within),
                fmt_value(r.r2),
                fmt_value(r.sigma_within),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = vec![vec![
        "".to_string(),
        "N".into(),
        "Mean".into(),
        "SD".into(),
        "Within SD".into(),
    ]];
    for r in rows {
        out.push(vec![
            r.name.clone(),
            r.n.to_string(),
            format!("{:.3}", r.mean),
            format!("{:.3}", r.sd),
            format!("{:.3}", r.within_sd),
        ]);
    }
    render(&out)
}

pub fn write_summary_csv<W: Write>(writer: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["variable", "n", "mean", "sd", "within_sd"])?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.n.to_string(),
            fmt_value(r.mean),
            fmt_value(r.sd),
            fmt_value(r.within_sd),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Lower-triangular correlation table with Bonferroni-adjusted stars.
pub fn correlation_table(m: &CorrelationMatrix) -> String {
    let k = m.names.len();
    let mut rows = vec![{
        let mut h = vec![String::new()];
        h.extend((1..=k).map(|i| format!("({i})")));
        h
    }];
    for i in 0..k {
        let mut row = vec![format!("({}) {}", i + 1, m.names[i])];
        for j in 0..=i {
            let mut cell = String::new();
            match m.r[i][j] {
                Some(r) => {
                    let _ = write!(cell, "{r:.2}");
                    if let Some(p) = m.p_adjusted[i][j] {
                        cell.push_str(correlation_stars(p));
                    }
                }
                None => cell.push('.'),
            }
            row.push(cell);
        }
        rows.push(row);
    }
    let mut out = render(&rows);
    out.push_str("Bonferroni-adjusted: * p<0.05, ** p<0.01, *** p<0.001\n");
    out
}

pub fn write_correlation_csv<W: Write>(writer: W, m: &CorrelationMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row", "column", "r", "p_adjusted", "stars", "n"])?;
    let opt = |v: Option<f64>| v.map(fmt_value).unwrap_or_default();
    for (i, a) in m.names.iter().enumerate() {
        for (j, b) in m.names.iter().enumerate() {
            w.write_record([
                a.clone(),
                b.clone(),
                opt(m.r[i][j]),
                opt(m.p_adjusted[i][j]),
                m.p_adjusted[i][j]
                    .map(correlation_stars)
                    .unwrap_or_default()
                    .to_string(),
                m.n[i][j].to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
