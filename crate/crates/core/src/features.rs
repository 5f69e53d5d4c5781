//! Per-paper design matrices: control covariates plus aggregated
//! centrality columns, named the way regression tables print them.
//!
//! Column names accepted by [`FeaturePlan::parse`]:
//!
//! * controls: `YearToNow`, `N.Author`, `Len.Abs`, `Len.Title`, `Model`, and
//!   one dummy per non-reference venue (e.g. `ICLR`, `ICML`);
//! * centralities: `<Metric>[-<window>].<Agg>[.d]`, for example
//!   `Closeness.1st`, `HCTCD.W.Sum`, `HCTCD-16.Ave`, `Degree.Sum.d`;
//! * high-centrality co-author terms: `<Metric>.MaxInd`, `<Metric>.MaxInd.1st`,
//!   `<Metric>.MaxInd.Max` (also spelled `.max.ind`, `.1st.int`, `.max.int`).
//!
//! The intercept `Const` is always the first column.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::aggregation::{
    aggregate, high_centrality_indicator, temporal_difference, AggregationKind, AggregationSpec,
    MissingAuthorPolicy,
};
use crate::centrality::{CentralityTable, HctcdParams, Metric, MetricKind, PageRankParams};
use crate::data_model::{Corpus, PaperRecord, PercentileTable, Year};
use crate::error::{Error, Result};
use crate::graph::build_graph;

pub const INTERCEPT: &str = "Const";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Control {
    Intercept,
    YearToNow,
    Venue(String),
    NAuthor,
    LenAbs,
    LenTitle,
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentralityFeature {
    Aggregate(AggregationKind),
    /// Short-window minus long-window aggregate.
    Difference(AggregationKind),
    Indicator,
    IndicatorTimesFirst,
    IndicatorTimesMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CentralityTerm {
    pub metric: MetricKind,
    /// Window length; `None` uses the settings default.
    pub window: Option<i32>,
    pub feature: CentralityFeature,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureTerm {
    Control(Control),
    Centrality(CentralityTerm),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureColumn {
    pub name: String,
    pub term: FeatureTerm,
}

/// Which percentile column becomes the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResponseKind {
    Raw,
    /// `(y(n-1) + 0.5)/n` per year group, strictly inside (0, 1).
    #[default]
    Squeezed,
}

impl ResponseKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Ok(ResponseKind::Raw),
            "squeezed" => Ok(ResponseKind::Squeezed),
            other => Err(Error::InvalidParameter(format!("unknown response kind {other:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ResponseKind::Raw => "raw",
            ResponseKind::Squeezed => "squeezed",
        }
    }
}

/// Everything needed to turn feature names into numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSettings {
    /// Venue labels; the first is the reference level (no dummy).
    pub venues: Vec<String>,
    /// "Now" for `YearToNow`.
    pub now_year: Year,
    pub default_window: i32,
    /// (short, long) windows for `.d` features.
    pub diff_windows: (i32, i32),
    pub pagerank: PageRankParams,
    pub hctcd: HctcdParams,
    pub tau: f64,
    pub missing: MissingAuthorPolicy,
    pub indicator_threshold: f64,
    pub response: ResponseKind,
}

impl FeatureSettings {
    pub fn metric(&self, kind: MetricKind) -> Metric {
        match kind {
            MetricKind::Degree => Metric::Degree,
            MetricKind::Closeness => Metric::Closeness,
            MetricKind::Harmonic => Metric::Harmonic,
            MetricKind::Betweenness => Metric::Betweenness,
            MetricKind::PageRank => Metric::PageRank(self.pagerank),
            MetricKind::Hctcd => Metric::Hctcd(self.hctcd),
        }
    }

    fn aggregation(&self, kind: AggregationKind) -> AggregationSpec {
        AggregationSpec {
            kind,
            tau: self.tau,
            missing: self.missing,
        }
    }
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings {
            venues: vec!["NeurIPS".into(), "ICLR".into(), "ICML".into()],
            now_year: 2024,
            default_window: 8,
            diff_windows: (2, 8),
            pagerank: PageRankParams::default(),
            hctcd: HctcdParams::default(),
            tau: 0.3,
            missing: MissingAuthorPolicy::Zero,
            indicator_threshold: 0.5,
            response: ResponseKind::Squeezed,
        }
    }
}

fn normalise(name: &str) -> String {
    name.trim().trim_end_matches('.').to_ascii_lowercase()
}

fn parse_control(name: &str, venues: &[String]) -> Option<Control> {
    let key = normalise(name);
    let control = match key.as_str() {
        "const" | "intercept" => Control::Intercept,
        "yeartonow" => Control::YearToNow,
        "n.author" | "nauthor" => Control::NAuthor,
        "len.abs" | "lenabs" => Control::LenAbs,
        "len.title" | "lentitle" => Control::LenTitle,
        "model" | "content_score" => Control::Model,
        _ => {
            let venue = venues.iter().skip(1).find(|v| v.to_ascii_lowercase() == key)?;
            Control::Venue(venue.clone())
        }
    };
    Some(control)
}

fn parse_centrality(name: &str) -> Result<CentralityTerm> {
    let key = normalise(name);
    let unknown = || Error::UnknownFeature(name.to_string());
    let (head, rest) = key.split_once('.').ok_or_else(|| {
        Error::UnknownFeature(format!(
            "{name} (centrality columns need an explicit aggregation, e.g. {name}.1st)"
        ))
    })?;
    let (metric_name, window) = match head.split_once('-') {
        Some((m, w)) => {
            let w: i32 = w.parse().map_err(|_| unknown())?;
            if w < 1 {
                return Err(unknown());
            }
            (m, Some(w))
        }
        None => (head, None),
    };
    let metric = MetricKind::parse(metric_name).map_err(|_| unknown())?;
    let feature = match rest {
        "maxind" | "max.ind" => CentralityFeature::Indicator,
        "maxind.1st" | "1st.int" => CentralityFeature::IndicatorTimesFirst,
        "maxind.max" | "max.int" => CentralityFeature::IndicatorTimesMax,
        _ => match rest.strip_suffix(".d") {
            Some(agg) => CentralityFeature::Difference(AggregationKind::parse(agg).map_err(|_| unknown())?),
            None => CentralityFeature::Aggregate(AggregationKind::parse(rest).map_err(|_| unknown())?),
        },
    };
    Ok(CentralityTerm {
        metric,
        window,
        feature,
    })
}

/// Ordered list of named design-matrix columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePlan {
    columns: Vec<FeatureColumn>,
}

impl FeaturePlan {
    /// Parses column names; `Const` is prepended when absent.
    pub fn parse<S: AsRef<str>>(names: &[S], venues: &[String]) -> Result<Self> {
        let mut columns = vec![FeatureColumn {
            name: INTERCEPT.to_string(),
            term: FeatureTerm::Control(Control::Intercept),
        }];
        let mut seen: BTreeSet<String> = BTreeSet::from([normalise(INTERCEPT)]);
        for raw in names {
            let raw = raw.as_ref().trim();
            if raw.is_empty() {
                continue;
            }
            let term = match parse_control(raw, venues) {
                Some(Control::Intercept) => continue,
                Some(c) => FeatureTerm::Control(c),
                None => FeatureTerm::Centrality(parse_centrality(raw)?),
            };
            if !seen.insert(normalise(raw)) {
                return Err(Error::InvalidParameter(format!("feature {raw} listed twice")));
            }
            columns.push(FeatureColumn {
                name: raw.trim_end_matches('.').to_string(),
                term,
            });
        }
        Ok(FeaturePlan { columns })
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// `(metric, window)` pairs whose tables the plan reads.
    pub fn requirements(&self, settings: &FeatureSettings) -> BTreeSet<(MetricKind, i32)> {
        let mut out = BTreeSet::new();
        for col in &self.columns {
            if let FeatureTerm::Centrality(t) = &col.term {
                match t.feature {
                    CentralityFeature::Difference(_) => {
                        out.insert((t.metric, settings.diff_windows.0));
                        out.insert((t.metric, settings.diff_windows.1));
                    }
                    _ => {
                        out.insert((t.metric, t.window.unwrap_or(settings.default_window)));
                    }
                }
            }
        }
        out
    }

    pub fn needs_content_score(&self) -> bool {
        self.columns
            .iter()
            .any(|c| c.term == FeatureTerm::Control(Control::Model))
    }
}

/// Centrality tables keyed by `(metric, window, reference year)`.
#[derive(Debug, Clone, Default)]
pub struct CentralityStore {
    tables: HashMap<(MetricKind, i32, Year), CentralityTable>,
}

impl CentralityStore {
    pub fn insert(&mut self, table: CentralityTable) {
        self.tables
            .insert((table.metric.kind(), table.window_len, table.reference_year), table);
    }

    pub fn get(&self, metric: MetricKind, window: i32, year: Year) -> Option<&CentralityTable> {
        self.tables.get(&(metric, window, year))
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Tables sorted by (metric, window, year).
    pub fn sorted(&self) -> Vec<&CentralityTable> {
        let mut keys: Vec<_> = self.tables.keys().copied().collect();
        keys.sort();
        keys.iter().map(|k| &self.tables[k]).collect()
    }

    /// Builds one graph per `(window, year)` and evaluates every requested
    /// metric on it.
    pub fn compute(
        corpus: &Corpus,
        requests: &BTreeSet<(MetricKind, i32)>,
        years: &BTreeSet<Year>,
        settings: &FeatureSettings,
    ) -> Result<Self> {
        let mut store = CentralityStore::default();
        store.extend(corpus, requests, years, settings)?;
        Ok(store)
    }

    /// Adds the requested tables that are not stored yet.
    pub fn extend(
        &mut self,
        corpus: &Corpus,
        requests: &BTreeSet<(MetricKind, i32)>,
        years: &BTreeSet<Year>,
        settings: &FeatureSettings,
    ) -> Result<()> {
        let mut by_window: BTreeMap<i32, Vec<MetricKind>> = BTreeMap::new();
        for &(metric, window) in requests {
            by_window.entry(window).or_default().push(metric);
        }
        for (&window, metrics) in &by_window {
            for &year in years {
                let missing: Vec<MetricKind> = metrics
                    .iter()
                    .copied()
                    .filter(|&m| self.get(m, window, year).is_none())
                    .collect();
                if missing.is_empty() {
                    continue;
                }
                let graph = build_graph(corpus, year, window)?;
                for metric in missing {
                    self.insert(settings.metric(metric).compute(&graph)?);
                }
            }
        }
        Ok(())
    }
}

/// Which papers become rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowFilter {
    /// Inclusive year range.
    pub years: Option<(Year, Year)>,
    pub venues: Option<Vec<String>>,
}

impl RowFilter {
    pub fn accepts(&self, paper: &PaperRecord) -> bool {
        let year_ok = self
            .years
            .is_none_or(|(lo, hi)| (lo..=hi).contains(&paper.year));
        let venue_ok = self
            .venues
            .as_ref()
            .is_none_or(|vs| vs.iter().any(|v| v == &paper.venue));
        year_ok && venue_ok
    }

    pub fn select<'c>(&self, corpus: &'c Corpus) -> Vec<&'c PaperRecord> {
        corpus.records().filter(|p| self.accepts(p)).collect()
    }
}

/// Design matrix with named columns, one row per paper, plus the response.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub paper_ids: Vec<String>,
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub response_name: String,
    pub y: DVector<f64>,
}

impl FeatureMatrix {
    pub fn new(
        paper_ids: Vec<String>,
        names: Vec<String>,
        x: DMatrix<f64>,
        response_name: impl Into<String>,
        y: DVector<f64>,
    ) -> Result<Self> {
        if x.nrows() != paper_ids.len() || y.len() != paper_ids.len() || x.ncols() != names.len() {
            return Err(Error::Mismatch(format!(
                "design is {}x{} with {} ids, {} names, {} responses",
                x.nrows(),
                x.ncols(),
                paper_ids.len(),
                names.len(),
                y.len()
            )));
        }
        if let Some(pos) = x.iter().chain(y.iter()).position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at flat position {pos} of the design"
            )));
        }
        Ok(FeatureMatrix {
            paper_ids,
            names,
            x,
            response_name: response_name.into(),
            y,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name)
            .map(|j| self.x.column(j).iter().copied().collect())
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            paper_ids: rows.iter().map(|&r| self.paper_ids[r].clone()).collect(),
            names: self.names.clone(),
            x: self.x.select_rows(rows),
            response_name: self.response_name.clone(),
            y: self.y.select_rows(rows),
        }
    }

    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_index(n.as_ref())
                    .ok_or_else(|| Error::UnknownFeature(n.as_ref().to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureMatrix {
            paper_ids: self.paper_ids.clone(),
            names: names.iter().map(|n| n.as_ref().to_string()).collect(),
            x: self.x.select_columns(&idx),
            response_name: self.response_name.clone(),
            y: self.y.clone(),
        })
    }

    /// CSV: `paper_id`, the feature columns, then the response.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<features>", e);
        write!(out, "paper_id").map_err(io)?;
        for n in &self.names {
            write!(out, ",{n}").map_err(io)?;
        }
        writeln!(out, ",{}", self.response_name).map_err(io)?;
        for (r, id) in self.paper_ids.iter().enumerate() {
            write!(out, "{id}").map_err(io)?;
            for v in self.x.row(r).iter() {
                write!(out, ",{v}").map_err(io)?;
            }
            writeln!(out, ",{}", self.y[r]).map_err(io)?;
        }
        Ok(())
    }
}

fn centrality_value(
    term: &CentralityTerm,
    paper: &PaperRecord,
    store: &CentralityStore,
    settings: &FeatureSettings,
) -> Result<f64> {
    let table = |window: i32| {
        store.get(term.metric, window, paper.year).ok_or_else(|| {
            Error::Missing(format!(
                "no {} table for window {window} before {}",
                term.metric, paper.year
            ))
        })
    };
    let window = term.window.unwrap_or(settings.default_window);
    match term.feature {
        CentralityFeature::Aggregate(kind) => {
            aggregate(table(window)?, paper, &settings.aggregation(kind))
        }
        CentralityFeature::Difference(kind) => temporal_difference(
            table(settings.diff_windows.0)?,
            table(settings.diff_windows.1)?,
            paper,
            &settings.aggregation(kind),
        ),
        CentralityFeature::Indicator
        | CentralityFeature::IndicatorTimesFirst
        | CentralityFeature::IndicatorTimesMax => {
            let terms = high_centrality_indicator(
                table(window)?,
                paper,
                settings.indicator_threshold,
                settings.missing,
            )?;
            Ok(match term.feature {
                CentralityFeature::Indicator => terms.indicator,
                CentralityFeature::IndicatorTimesFirst => terms.indicator_x_first,
                _ => terms.indicator_x_max,
            })
        }
    }
}

fn control_value(control: &Control, paper: &PaperRecord, settings: &FeatureSettings) -> Result<f64> {
    Ok(match control {
        Control::Intercept => 1.0,
        Control::YearToNow => f64::from(settings.now_year - paper.year),
        Control::Venue(v) => f64::from(u8::from(&paper.venue == v)),
        Control::NAuthor => paper.n_authors() as f64,
        Control::LenAbs => paper.abs_len as f64,
        Control::LenTitle => paper.title_len as f64,
        Control::Model => paper.content_score.ok_or_else(|| {
            Error::Missing(format!("paper {} has no content_score", paper.paper_id))
        })?,
    })
}

/// Assembles the design matrix for the papers accepted by `filter`.
pub fn build_feature_matrix(
    corpus: &Corpus,
    percentiles: &PercentileTable,
    store: &CentralityStore,
    plan: &FeaturePlan,
    settings: &FeatureSettings,
    filter: &RowFilter,
) -> Result<FeatureMatrix> {
    let response_table = match settings.response {
        ResponseKind::Raw => percentiles.clone(),
        ResponseKind::Squeezed => percentiles.squeezed()?,
    };
    let rows = filter.select(corpus);
    if rows.is_empty() {
        return Err(Error::Empty("row filter selected no papers".into()));
    }
    let p = plan.columns().len();
    let mut x = DMatrix::zeros(rows.len(), p);
    let mut y = DVector::zeros(rows.len());
    let mut ids = Vec::with_capacity(rows.len());
    for (r, paper) in rows.iter().enumerate() {
        if !settings.venues.iter().any(|v| v == &paper.venue) {
            return Err(Error::InvalidRecord {
                paper_id: paper.paper_id.clone(),
                rule: format!(
                    "venue {} not in configured set [{}]",
                    paper.venue,
                    settings.venues.join(", ")
                ),
            });
        }
        for (c, col) in plan.columns().iter().enumerate() {
            x[(r, c)] = match &col.term {
                FeatureTerm::Control(control) => control_value(control, paper, settings)?,
                FeatureTerm::Centrality(term) => centrality_value(term, paper, store, settings)?,
            };
        }
        y[r] = response_table
            .get(&paper.paper_id)
            .ok_or_else(|| Error::Missing(format!("no percentile for {}", paper.paper_id)))?;
        ids.push(paper.paper_id.clone());
    }
    FeatureMatrix::new(ids, plan.names(), x, "pcite", y)
}
