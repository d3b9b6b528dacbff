use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Firm-date panel with numeric columns; missing values are NaN.
/// Rows are kept sorted by (firm, date) and unique on that pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    firm: Vec<String>,
    date: Vec<NaiveDate>,
    industry: Vec<String>,
    columns: BTreeMap<String, Vec<f64>>,
}

pub const ID_COLUMNS: [&str; 3] = ["firm_id", "date", "industry"];

impl Panel {
    /// Builds a panel from id vectors, sorting rows by (firm, date).
    pub fn new(firm: Vec<String>, date: Vec<NaiveDate>, industry: Vec<String>) -> Result<Self> {
        if firm.len() != date.len() || firm.len() != industry.len() {
            return Err(Error::LengthMismatch {
                left: firm.len(),
                right: date.len().min(industry.len()),
            });
        }
        let mut order: Vec<usize> = (0..firm.len()).collect();
        order.sort_by(|&a, &b| firm[a].cmp(&firm[b]).then(date[a].cmp(&date[b])));
        for w in order.windows(2) {
            if firm[w[0]] == firm[w[1]] && date[w[0]] == date[w[1]] {
                return Err(Error::Invalid(format!(
                    "duplicate panel row ({}, {})",
                    firm[w[0]], date[w[0]]
                )));
            }
        }
        Ok(Panel {
            firm: order.iter().map(|&i| firm[i].clone()).collect(),
            date: order.iter().map(|&i| date[i]).collect(),
            industry: order.iter().map(|&i| industry[i].clone()).collect(),
            columns: BTreeMap::new(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.firm.len()
    }

    pub fn firms(&self) -> &[String] {
        &self.firm
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.date
    }

    pub fn industries(&self) -> &[String] {
        &self.industry
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.contains_key(name) || ID_COLUMNS.contains(&name) || name == "firm"
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Adds or replaces a column. Rows follow the panel's (firm, date) order.
    pub fn set_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.n_rows() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: self.n_rows(),
            });
        }
        self.columns.insert(name.to_string(), values);
        Ok(())
    }

    /// Dense group ids for a grouping dimension: `firm`/`firm_id`, `date`,
    /// `industry`, or any numeric column (grouped by exact value).
    pub fn group_ids(&self, dim: &str) -> Result<Vec<usize>> {
        fn dense<T: Ord + Clone>(keys: &[T]) -> Vec<usize> {
            let mut uniq: Vec<T> = keys.to_vec();
            uniq.sort();
            uniq.dedup();
            keys.iter().map(|k| uniq.binary_search(k).expect("present")).collect()
        }
        Ok(match dim {
            "firm" | "firm_id" => dense(&self.firm),
            "date" => dense(&self.date),
            "industry" => dense(&self.industry),
            other => {
                let col = self.column(other)?;
                let keys: Vec<i64> = col.iter().map(|v| v.to_bits() as i64).collect();
                dense(&keys)
            }
        })
    }

    /// Row ranges `[start, end)` of each firm, in row order.
    pub fn firm_runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=self.n_rows() {
            if i == self.n_rows() || self.firm[i] != self.firm[start] {
                runs.push((start, i));
                start = i;
            }
        }
        runs
    }

    /// Value of `name` shifted `h` rows forward within each firm (NaN past the end).
    pub fn lead(&self, name: &str, h: usize) -> Result<Vec<f64>> {
        let col = self.column(name)?;
        let mut out = vec![f64::NAN; self.n_rows()];
        for (s, e) in self.firm_runs() {
            for i in s..e {
                if i + h < e {
                    out[i] = col[i + h];
                }
            }
        }
        Ok(out)
    }

    /// Value of `name` shifted `h` rows back within each firm.
    pub fn lag(&self, name: &str, h: usize) -> Result<Vec<f64>> {
        let col = self.column(name)?;
        let mut out = vec![f64::NAN; self.n_rows()];
        for (s, e) in self.firm_runs() {
            if h < e - s {
                out[s + h..e].copy_from_slice(&col[s..e - h]);
            }
        }
        Ok(out)
    }

    /// Keeps the rows where `keep` is true.
    pub fn filter_rows(&self, keep: &[bool]) -> Panel {
        let pick = |v: &[String]| {
            v.iter()
                .zip(keep)
                .filter(|(_, k)| **k)
                .map(|(s, _)| s.clone())
                .collect()
        };
        Panel {
            firm: pick(&self.firm),
            date: self
                .date
                .iter()
                .zip(keep)
                .filter(|(_, k)| **k)
                .map(|(d, _)| *d)
                .collect(),
            industry: pick(&self.industry),
            columns: self
                .columns
                .iter()
                .map(|(n, c)| {
                    (
                        n.clone(),
                        c.iter().zip(keep).filter(|(_, k)| **k).map(|(v, _)| *v).collect(),
                    )
                })
                .collect(),
        }
    }

    /// Left-joins `values` keyed by (firm, date); unmatched rows get NaN.
    pub fn join_column(&mut self, name: &str, values: &HashMap<(String, NaiveDate), f64>) -> Result<usize> {
        let mut matched = 0;
        let col: Vec<f64> = self
            .firm
            .iter()
            .zip(&self.date)
            .map(|(f, d)| match values.get(&(f.clone(), *d)) {
                Some(v) => {
                    matched += 1;
                    *v
                }
                None => f64::NAN,
            })
            .collect();
        self.set_column(name, col)?;
        Ok(matched)
    }

    pub fn read_csv(path: &Path) -> Result<Panel> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv_from(file, path)
    }

    /// `firm_id,date,industry` followed by numeric columns; empty cells and
    /// `NA`/`NaN` are missing. An absent `industry` column defaults to `""`.
    pub fn read_csv_from<R: Read>(reader: R, origin: &Path) -> Result<Panel> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let pos = |n: &str| headers.iter().position(|h| h == n);
        let fi = pos("firm_id").ok_or_else(|| Error::UnknownColumn("firm_id".into()))?;
        let di = pos("date").ok_or_else(|| Error::UnknownColumn("date".into()))?;
        let ii = pos("industry");
        let numeric: Vec<(usize, String)> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fi && *i != di && Some(*i) != ii)
            .map(|(i, h)| (i, h.to_string()))
            .collect();
        let (mut firm, mut date, mut industry) = (Vec::new(), Vec::new(), Vec::new());
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); numeric.len()];
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            firm.push(row[fi].to_string());
            date.push(
                row[di]
                    .trim()
                    .parse::<NaiveDate>()
                    .map_err(|e| Error::parse(origin, line, format!("bad date {:?}: {e}", &row[di])))?,
            );
            industry.push(ii.map_or_else(String::new, |i| row[i].to_string()));
            for (c, (i, name)) in cols.iter_mut().zip(&numeric) {
                let cell = row.get(*i).unwrap_or("").trim();
                let v = if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
                    f64::NAN
                } else {
                    cell.parse::<f64>()
                        .map_err(|e| Error::parse(origin, line, format!("column {name}: bad number {cell:?}: {e}")))?
                };
                c.push(v);
            }
        }
        // sort once through `new`, carrying the numeric columns along
        let n = firm.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| firm[a].cmp(&firm[b]).then(date[a].cmp(&date[b])));
        let mut panel = Panel::new(firm, date, industry)?;
        for (c, (_, name)) in cols.into_iter().zip(numeric) {
            panel.set_column(&name, order.iter().map(|&i| c[i]).collect())?;
        }
        Ok(panel)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = ID_COLUMNS.to_vec();
        header.extend(self.columns.keys().map(String::as_str));
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut row = vec![self.firm[i].clone(), self.date[i].to_string(), self.industry[i].clone()];
            row.extend(self.columns.values().map(|c| fmt_value(c[i])));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<panel>", e))?;
        Ok(())
    }
}

pub(crate) fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}
