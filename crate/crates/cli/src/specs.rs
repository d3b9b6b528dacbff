use std::path::{Path, PathBuf};

use emopipe::econo::{Filter, InteractionSpec, Panel, RegressionSpec};
use serde::Deserialize;
use toml::Spanned;

use crate::config::{invalid, line_of, ValidationError};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Winsor {
    Switch(bool),
    Limits([f64; 2]),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    dependent: String,
    #[serde(default)]
    regressors: Vec<String>,
    fe: Option<Vec<String>>,
    cluster: Option<Vec<String>>,
    winsor: Option<Winsor>,
    winsorize: Option<Vec<String>>,
    #[serde(default)]
    filters: Vec<Filter>,
    interaction: Option<InteractionSpec>,
    /// Horizons in trading rows; 0 is the contemporaneous fit.
    leads: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Summary {
    columns: Vec<String>,
    fe: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Correlation {
    columns: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    #[serde(default)]
    regression: Vec<Spanned<Entry>>,
    summary: Option<Spanned<Summary>>,
    correlation: Option<Spanned<Correlation>>,
}

#[derive(Debug, Clone)]
pub enum Fit {
    Plain,
    Interaction(InteractionSpec),
    Leads(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub spec: RegressionSpec,
    pub fit: Fit,
    /// First line of the entry in the spec file.
    pub line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SpecSet {
    pub path: PathBuf,
    pub models: Vec<ModelSpec>,
    pub summary: Option<(Vec<String>, Vec<String>)>,
    pub correlation: Option<Vec<String>>,
    text: String,
    summary_span: (usize, usize),
    correlation_span: (usize, usize),
    model_spans: Vec<(usize, usize)>,
}

impl SpecSet {
    pub fn load(path: &Path) -> anyhow::Result<SpecSet> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> anyhow::Result<SpecSet> {
        let file: SpecFile = toml::from_str(text).map_err(|e| match e.span() {
            Some(s) => invalid(format!(
                "{}:{}: {}",
                path.display(),
                line_of(text, s.start),
                e.message()
            )),
            None => invalid(format!("{}: {}", path.display(), e.message())),
        })?;
        let mut set = SpecSet {
            path: path.to_path_buf(),
            text: text.to_string(),
            ..SpecSet::default()
        };
        for entry in file.regression {
            let span = entry.span();
            let e = entry.into_inner();
            let mut spec = RegressionSpec::new(&e.name, &e.dependent, &[]);
            spec.regressors = e.regressors;
            if let Some(fe) = e.fe {
                spec.fe = fe;
            }
            if let Some(c) = e.cluster {
                spec.cluster = c;
            }
            match e.winsor {
                Some(Winsor::Switch(false)) => spec.winsor = None,
                Some(Winsor::Switch(true)) | None => {}
                Some(Winsor::Limits(l)) => spec.winsor = Some(l),
            }
            spec.winsorize = e.winsorize;
            spec.filters = e.filters;
            let fit = match (e.interaction, e.leads) {
                (Some(_), Some(_)) => {
                    return Err(invalid(format!(
                        "{}:{}: spec `{}` sets both interaction and leads",
                        path.display(),
                        line_of(text, span.start),
                        spec.name
                    )))
                }
                (Some(i), None) => Fit::Interaction(i),
                (None, Some(h)) => Fit::Leads(h),
                (None, None) => Fit::Plain,
            };
            set.models.push(ModelSpec {
                spec,
                fit,
                line: line_of(text, span.start),
            });
            set.model_spans.push((span.start, span.end));
        }
        if let Some(s) = file.summary {
            set.summary_span = (s.span().start, s.span().end);
            let s = s.into_inner();
            let fe = s.fe.unwrap_or_else(|| vec!["firm".into(), "date".into()]);
            set.summary = Some((s.columns, fe));
        }
        if let Some(c) = file.correlation {
            set.correlation_span = (c.span().start, c.span().end);
            set.correlation = Some(c.into_inner().columns);
        }
        Ok(set)
    }

    /// Line of the first quoted occurrence of `name` inside `span`.
    fn line_for(&self, span: (usize, usize), name: &str) -> usize {
        let region = &self.text[span.0..span.1.min(self.text.len())];
        let quoted = format!("\"{name}\"");
        let offset = region
            .find(&quoted)
            .or_else(|| region.find(&format!("{name} ")))
            .map_or(span.0, |o| span.0 + o);
        line_of(&self.text, offset)
    }

    /// Checks every referenced column against `panel`; all problems are reported together.
    pub fn validate(&self, panel: &Panel) -> anyhow::Result<()> {
        let mut problems = Vec::new();
        let file = self.path.display();
        for (m, span) in self.models.iter().zip(&self.model_spans) {
            let s = &m.spec;
            let mut numeric: Vec<&String> = vec![&s.dependent];
            numeric.extend(&s.regressors);
            numeric.extend(s.filters.iter().map(|f| &f.column));
            numeric.extend(s.winsorize.iter().flatten());
            if let Fit::Interaction(i) = &m.fit {
                numeric.push(&i.moderator);
                numeric.push(&i.target);
            }
            let mut missing = false;
            for c in numeric {
                if panel.column(c).is_err() {
                    missing = true;
                    problems.push(format!(
                        "{file}:{}: spec `{}`: unknown column `{c}`",
                        self.line_for(*span, c),
                        s.name
                    ));
                }
            }
            for d in s.fe.iter().chain(&s.cluster) {
                if !panel.has_column(d) {
                    missing = true;
                    problems.push(format!(
                        "{file}:{}: spec `{}`: unknown dimension `{d}`",
                        self.line_for(*span, d),
                        s.name
                    ));
                }
            }
            if !missing {
                if let Err(e) = s.validate(panel) {
                    problems.push(format!("{file}:{}: spec `{}`: {e}", m.line, s.name));
                }
            }
        }
        let tables = [
            (self.summary.as_ref().map(|s| &s.0), self.summary_span, "summary"),
            (self.correlation.as_ref(), self.correlation_span, "correlation"),
        ];
        for (cols, span, what) in tables {
            for c in cols.into_iter().flatten() {
                if panel.column(c).is_err() {
                    problems.push(format!(
                        "{file}:{}: {what}: unknown column `{c}`",
                        self.line_for(span, c)
                    ));
                }
            }
        }
        if let Some((_, fe)) = &self.summary {
            for d in fe {
                if !panel.has_column(d) {
                    problems.push(format!(
                        "{file}:{}: summary: unknown dimension `{d}`",
                        self.line_for(self.summary_span, d)
                    ));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ValidationError(problems).into())
        }
    }
}
