use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use nalgebra::{DMatrix, DVector};
use regex::Regex;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

use super::cluster::{cluster_covariance, EigenFloor};
use super::demean::{demean, DEFAULT_MAX_ITER, DEFAULT_TOL};
use super::ols::ols;
use super::panel::Panel;
use super::winsor::winsorize_in_place;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    /// Comparisons involving NaN are false, so rows with missing values fail every filter.
    pub fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => !a.is_nan() && a != b,
        }
    }
}

/// Row filter of the form `column op value`, e.g. `n >= 10`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Filter {
    pub column: String,
    pub op: CmpOp,
    pub value: f64,
}

static FILTER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*([A-Za-z_][A-Za-z0-9_.]*)\s*(<=|>=|==|!=|<|>)\s*(\S+)\s*$").expect("valid filter regex")
});

impl FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let caps = FILTER
            .captures(s)
            .ok_or_else(|| Error::Invalid(format!("filter `{s}` is not of the form `column op value`")))?;
        let op = match &caps[2] {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "==" => CmpOp::Eq,
            _ => CmpOp::Ne,
        };
        let value: f64 = caps[3]
            .parse()
            .map_err(|_| Error::Invalid(format!("filter `{s}`: `{}` is not a number", &caps[3])))?;
        Ok(Filter {
            column: caps[1].to_string(),
            op,
            value,
        })
    }
}

impl TryFrom<String> for Filter {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Filter> for String {
    fn from(f: Filter) -> String {
        f.to_string()
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.column, self.op.symbol(), self.value)
    }
}

fn default_fe() -> Vec<String> {
    vec!["firm".into(), "date".into()]
}

fn default_cluster() -> Vec<String> {
    vec!["industry".into(), "date".into()]
}

fn default_winsor() -> Option<[f64; 2]> {
    Some([0.001, 0.999])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    pub name: String,
    pub dependent: String,
    pub regressors: Vec<String>,
    #[serde(default = "default_fe")]
    pub fe: Vec<String>,
    #[serde(default = "default_cluster")]
    pub cluster: Vec<String>,
    /// Lower and upper quantiles; `None` disables winsorization.
    #[serde(default = "default_winsor")]
    pub winsor: Option<[f64; 2]>,
    /// Columns to winsorize; defaults to the dependent and the regressors.
    #[serde(default)]
    pub winsorize: Option<Vec<String>>,
    #[serde(default)]
    pub filters: Vec<Filter>,
}

impl RegressionSpec {
    pub fn new(name: &str, dependent: &str, regressors: &[&str]) -> Self {
        RegressionSpec {
            name: name.into(),
            dependent: dependent.into(),
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            fe: default_fe(),
            cluster: default_cluster(),
            winsor: default_winsor(),
            winsorize: None,
            filters: Vec::new(),
        }
    }

    fn winsorized_columns(&self) -> Vec<String> {
        self.winsorize.clone().unwrap_or_else(|| {
            let mut cols = vec![self.dependent.clone()];
            cols.extend(self.regressors.iter().cloned());
            cols
        })
    }

    /// Checks that every referenced column and dimension exists in `panel`.
    pub fn validate(&self, panel: &Panel) -> Result<()> {
        if self.regressors.is_empty() && !self.fe.is_empty() {
            return Err(Error::Invalid(format!("spec `{}` has no regressors", self.name)));
        }
        let mut seen = std::collections::HashSet::new();
        for r in &self.regressors {
            if !seen.insert(r) {
                return Err(Error::Invalid(format!("spec `{}` lists `{r}` twice", self.name)));
            }
        }
        if self.cluster.len() > 2 {
            return Err(Error::Invalid("at most two clustering dimensions are supported".into()));
        }
        if let Some([lo, hi]) = self.winsor {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Error::OutOfRange(format!("winsor limits ({lo}, {hi})")));
            }
        }
        let numeric = std::iter::once(&self.dependent)
            .chain(&self.regressors)
            .chain(self.filters.iter().map(|f| &f.column))
            .chain(self.winsorize.iter().flatten());
        for c in numeric {
            panel.column(c)?;
        }
        for d in self.fe.iter().chain(&self.cluster) {
            if !panel.has_column(d) {
                return Err(Error::UnknownColumn(d.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub demean_iterations: usize,
    pub demean_max_change: f64,
    pub eigen_floor: EigenFloor,
    /// Winsorization bounds applied per column.
    pub winsor_bounds: BTreeMap<String, [f64; 2]>,
    pub moderator_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub name: String,
    pub dependent: String,
    pub coefficients: Vec<Coefficient>,
    pub covariance: Vec<Vec<f64>>,
    pub n: usize,
    /// R² of the demeaned regression.
    pub r2_within: f64,
    /// R² including the absorbed fixed effects.
    pub r2: f64,
    /// Sample SD of the dependent after removing the fixed effects.
    pub sigma_within: f64,
    pub fe: Vec<String>,
    pub cluster: Vec<(String, usize)>,
    /// Degrees of freedom for the reported p-values.
    pub df: usize,
    pub diagnostics: Diagnostics,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// Applies the spec's filters, drops rows missing any used column, and
/// winsorizes on what remains.
fn estimation_sample(panel: &Panel, spec: &RegressionSpec, extra: &[&str]) -> Result<(Panel, Diagnostics)> {
    spec.validate(panel)?;
    let n = panel.n_rows();
    let mut keep = vec![true; n];
    for f in &spec.filters {
        let col = panel.column(&f.column)?;
        for (k, v) in keep.iter_mut().zip(col) {
            *k &= f.op.apply(*v, f.value);
        }
    }
    let required = std::iter::once(spec.dependent.as_str())
        .chain(spec.regressors.iter().map(String::as_str))
        .chain(extra.iter().copied());
    for c in required {
        let col = panel.column(c)?;
        for (k, v) in keep.iter_mut().zip(col) {
            *k &= v.is_finite();
        }
    }
    let mut sample = panel.filter_rows(&keep);
    if sample.n_rows() == 0 {
        return Err(Error::Invalid(format!("spec `{}` leaves no observations", spec.name)));
    }
    let mut diag = Diagnostics::default();
    if let Some([lo, hi]) = spec.winsor {
        for c in spec.winsorized_columns() {
            let mut col = sample.column(&c)?.to_vec();
            let (a, b) = winsorize_in_place(&mut col, lo, hi)?;
            sample.set_column(&c, col)?;
            diag.winsor_bounds.insert(c, [a, b]);
        }
    }
    Ok((sample, diag))
}

fn estimate(
    sample: &Panel,
    spec: &RegressionSpec,
    regressors: &[String],
    mut diag: Diagnostics,
) -> Result<RegressionResult> {
    let n = sample.n_rows();
    let raw_y = sample.column(&spec.dependent)?.to_vec();
    let mut names: Vec<String> = regressors.to_vec();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(names.len() + 1);
    cols.push(raw_y.clone());
    for r in regressors {
        cols.push(sample.column(r)?.to_vec());
    }
    let raw_norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let fe_ids: Vec<Vec<usize>> = spec.fe.iter().map(|d| sample.group_ids(d)).collect::<Result<_>>()?;
    let fe_refs: Vec<&[usize]> = fe_ids.iter().map(Vec::as_slice).collect();
    let report = demean(&mut cols, &fe_refs, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    diag.demean_iterations = report.iterations;
    diag.demean_max_change = report.max_change;
    if spec.fe.is_empty() {
        names.insert(0, "const".into());
        cols.insert(1, vec![1.0; n]);
    }

    let y = cols[0].clone();
    let scale = raw_norms[0].max(f64::MIN_POSITIVE);
    if y.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-12 * scale {
        return Err(Error::Invalid(format!(
            "`{}` has no variation left after removing fixed effects",
            spec.dependent
        )));
    }
    if !spec.fe.is_empty() {
        let absorbed: Vec<String> = regressors
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                let norm = cols[j + 1].iter().map(|v| v * v).sum::<f64>().sqrt();
                norm <= 1e-10 * raw_norms[j + 1].max(f64::MIN_POSITIVE)
            })
            .map(|(_, r)| r.clone())
            .collect();
        if !absorbed.is_empty() {
            return Err(Error::RankDeficient(absorbed));
        }
    }

    let k = names.len();
    let x = DMatrix::from_fn(n, k, |i, j| cols[j + 1][i]);
    let yv = DVector::from_vec(y.clone());
    let fit = ols(&x, &yv, &names)?;

    let cl_ids: Vec<Vec<usize>> = spec
        .cluster
        .iter()
        .map(|d| sample.group_ids(d))
        .collect::<Result<_>>()?;
    let cl_refs: Vec<&[usize]> = cl_ids.iter().map(Vec::as_slice).collect();
    let cov = cluster_covariance(&x, &fit.residuals, &fit.xtx_inv, &cl_refs)?;
    diag.eigen_floor = cov.eigen_floor;

    let df = if spec.cluster.is_empty() {
        n.saturating_sub(k)
    } else {
        cov.n_clusters.iter().min().copied().unwrap_or(2) - 1
    };
    let tdist = StudentsT::new(0.0, 1.0, df.max(1) as f64).map_err(|e| Error::Invalid(e.to_string()))?;
    let coefficients = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let estimate = fit.beta[j];
            let se = cov.covariance[(j, j)].max(0.0).sqrt();
            let t = estimate / se;
            let p = if t.is_finite() {
                2.0 * tdist.sf(t.abs())
            } else {
                f64::NAN
            };
            Coefficient {
                name: name.clone(),
                estimate,
                se,
                t,
                p,
            }
        })
        .collect();

    let tss_within: f64 = y.iter().map(|v| v * v).sum();
    let mean = raw_y.iter().sum::<f64>() / n as f64;
    let tss_raw: f64 = raw_y.iter().map(|v| (v - mean).powi(2)).sum();
    let sigma_within = if n > 1 {
        (tss_within / (n - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(RegressionResult {
        name: spec.name.clone(),
        dependent: spec.dependent.clone(),
        coefficients,
        covariance: (0..k)
            .map(|i| (0..k).map(|j| cov.covariance[(i, j)]).collect())
            .collect(),
        n,
        r2_within: if spec.fe.is_empty() {
            fit.r_squared(&y)
        } else {
            1.0 - fit.ssr / tss_within
        },
        r2: 1.0 - fit.ssr / tss_raw,
        sigma_within,
        fe: spec.fe.clone(),
        cluster: spec.cluster.iter().cloned().zip(cov.n_clusters).collect(),
        df,
        diagnostics: diag,
    })
}

/// Winsorizes, absorbs the fixed effects, runs OLS and attaches clustered standard errors.
pub fn fit_fe_model(panel: &Panel, spec: &RegressionSpec) -> Result<RegressionResult> {
    let (sample, diag) = estimation_sample(panel, spec, &[])?;
    estimate(&sample, spec, &spec.regressors, diag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MedianSide {
    #[default]
    Above,
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    pub moderator: String,
    /// Regressor interacted with the dummy.
    pub target: String,
    #[serde(default)]
    pub side: MedianSide,
}

impl InteractionSpec {
    pub fn dummy_name(&self) -> String {
        let side = match self.side {
            MedianSide::Above => "above",
            MedianSide::Below => "below",
        };
        format!("{}_{side}_median", self.moderator)
    }

    pub fn product_name(&self) -> String {
        format!("{}_x_{}", self.target, self.dummy_name())
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fits target, target × dummy and dummy plus the spec's other regressors, where
/// the dummy marks observations strictly above (or below) the moderator's median
/// on the estimation sample.
pub fn fit_interaction_model(
    panel: &Panel,
    spec: &RegressionSpec,
    inter: &InteractionSpec,
) -> Result<RegressionResult> {
    panel.column(&inter.moderator)?;
    let (mut sample, mut diag) = estimation_sample(panel, spec, &[&inter.moderator, &inter.target])?;
    let moderator = sample.column(&inter.moderator)?.to_vec();
    let med = median(&moderator);
    let dummy: Vec<f64> = moderator
        .iter()
        .map(|&m| {
            let on = match inter.side {
                MedianSide::Above => m > med,
                MedianSide::Below => m < med,
            };
            if on {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let ones = dummy.iter().filter(|d| **d == 1.0).count();
    if ones == 0 || ones == dummy.len() {
        return Err(Error::Invalid(format!(
            "median dummy for `{}` is constant",
            inter.moderator
        )));
    }
    let target = sample.column(&inter.target)?.to_vec();
    let product: Vec<f64> = target.iter().zip(&dummy).map(|(t, d)| t * d).collect();
    let (dname, pname) = (inter.dummy_name(), inter.product_name());
    sample.set_column(&dname, dummy)?;
    sample.set_column(&pname, product)?;
    diag.moderator_median = Some(med);

    let mut regressors = vec![inter.target.clone(), pname, dname];
    regressors.extend(spec.regressors.iter().filter(|r| **r != inter.target).cloned());
    estimate(&sample, spec, &regressors, diag)
}

pub fn lead_name(dependent: &str, h: usize) -> String {
    format!("lead{h}_{dependent}")
}

/// One fit per horizon with the dependent replaced by its value `h` trading rows ahead.
pub fn fit_leads(panel: &Panel, spec: &RegressionSpec, horizons: &[usize]) -> Result<Vec<RegressionResult>> {
    let mut work = panel.clone();
    horizons
        .iter()
        .map(|&h| {
            if h == 0 {
                return fit_fe_model(&work, spec);
            }
            let name = lead_name(&spec.dependent, h);
            if !work.has_column(&name) {
                let lead = work.lead(&spec.dependent, h)?;
                work.set_column(&name, lead)?;
            }
            let mut s = spec.clone();
            s.name = format!("{}_lead{h}", spec.name);
            if let Some(cols) = &mut s.winsorize {
                for c in cols.iter_mut().filter(|c| **c == spec.dependent) {
                    *c = name.clone();
                }
            }
            s.dependent = name;
            fit_fe_model(&work, &s)
        })
        .collect()
}
