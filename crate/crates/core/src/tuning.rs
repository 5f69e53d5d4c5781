//! Grid search over metric and aggregation parameters, scored by the
//! Pearson correlation between a paper-level centrality feature and pcite.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;

use crate::aggregation::{aggregate, AggregationKind, AggregationSpec};
use crate::centrality::{pagerank, CentralityTable, HctcdBasis, HctcdParams, Metric, MetricKind, PageRankParams};
use crate::data_model::{Corpus, PaperRecord, PercentileTable, Year};
use crate::error::{Error, Result};
use crate::features::RowFilter;
use crate::graph::{build_graph, CollabGraph};
use crate::stats::pearson;

/// Grids above this many points are rejected unless the cap is raised.
pub const DEFAULT_MAX_POINTS: usize = 100_000;

/// Tunable parameter names.
pub const PARAM_DAMPING: &str = "d";
pub const PARAM_ALPHA: &str = "alpha";
pub const PARAM_BETA: &str = "beta";
pub const PARAM_TAU: &str = "tau";

#[derive(Debug, Clone, PartialEq)]
pub struct ParamRange {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl ParamRange {
    pub fn new(name: &str, lo: f64, hi: f64, step: f64) -> Self {
        ParamRange {
            name: name.to_string(),
            lo,
            hi,
            step,
        }
    }

    /// A one-point range.
    pub fn fixed(name: &str, value: f64) -> Self {
        ParamRange::new(name, value, value, 1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) || !(self.step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid for {} needs finite lo <= hi and step > 0 (got {}..{} step {})",
                self.name, self.lo, self.hi, self.step
            )));
        }
        Ok(())
    }

    /// `lo, lo + step, ...` up to `hi`; values are computed from the index
    /// (not accumulated) and rounded to 12 decimals so 0.05-style grids
    /// print cleanly.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| {
                let v = self.lo + k as f64 * self.step;
                (v * 1e12).round() / 1e12
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub params: Vec<ParamRange>,
    pub subset: RowFilter,
    pub max_points: usize,
}

impl GridSpec {
    pub fn new(params: Vec<ParamRange>, subset: RowFilter) -> Self {
        GridSpec {
            params,
            subset,
            max_points: DEFAULT_MAX_POINTS,
        }
    }

    /// α ∈ [-1, 1], β ∈ [0, 1], step 0.05.
    pub fn default_hctcd(subset: RowFilter) -> Self {
        GridSpec::new(
            vec![
                ParamRange::new(PARAM_ALPHA, -1.0, 1.0, 0.05),
                ParamRange::new(PARAM_BETA, 0.0, 1.0, 0.05),
            ],
            subset,
        )
    }

    /// d ∈ [0.025, 0.975], step 0.025.
    pub fn default_damping(subset: RowFilter) -> Self {
        GridSpec::new(vec![ParamRange::new(PARAM_DAMPING, 0.025, 0.975, 0.025)], subset)
    }

    /// τ ∈ [0, 2], step 0.05.
    pub fn default_tau(subset: RowFilter) -> Self {
        GridSpec::new(vec![ParamRange::new(PARAM_TAU, 0.0, 2.0, 0.05)], subset)
    }

    /// Cartesian product, first parameter varying slowest.
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        if self.params.is_empty() {
            return Err(Error::InvalidParameter("grid has no parameters".into()));
        }
        let mut seen = Vec::new();
        for p in &self.params {
            p.validate()?;
            if seen.contains(&p.name.as_str()) {
                return Err(Error::InvalidParameter(format!("parameter {} listed twice", p.name)));
            }
            seen.push(&p.name);
        }
        let axes: Vec<Vec<f64>> = self.params.iter().map(ParamRange::values).collect();
        let total = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len()));
        match total {
            Some(t) if t <= self.max_points => {}
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "grid exceeds the cap of {} points",
                    self.max_points
                )))
            }
        }
        let mut points = vec![Vec::new()];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        Ok(points)
    }
}

/// The feature being tuned: metric, window and aggregation, with the
/// metric parameters that stay fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct TunePipeline {
    pub metric: MetricKind,
    pub window: i32,
    pub aggregation: AggregationSpec,
    pub pagerank: PageRankParams,
    pub hctcd: HctcdParams,
}

impl TunePipeline {
    pub fn new(metric: MetricKind, window: i32, aggregation: AggregationSpec) -> Self {
        TunePipeline {
            metric,
            window,
            aggregation,
            pagerank: PageRankParams::default(),
            hctcd: HctcdParams::default(),
        }
    }

    fn check_params(&self, grid: &GridSpec) -> Result<()> {
        for p in &grid.params {
            let ok = match p.name.as_str() {
                PARAM_DAMPING => self.metric == MetricKind::PageRank,
                PARAM_ALPHA | PARAM_BETA => self.metric == MetricKind::Hctcd,
                PARAM_TAU => self.aggregation.kind.uses_tau(),
                _ => false,
            };
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "parameter {} does not apply to {} with {} aggregation",
                    p.name, self.metric, self.aggregation.kind
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub values: Vec<f64>,
    /// `None` where the feature was constant over the subset.
    pub correlation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub param_names: Vec<String>,
    pub surface: Vec<SurfacePoint>,
    pub best_values: Vec<f64>,
    pub best_correlation: f64,
    pub n_papers: usize,
}

impl TuneResult {
    /// CSV `param1,...,paramK,correlation`; undefined correlations print `NA`.
    pub fn write_surface_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<surface>", e);
        writeln!(out, "{},correlation", self.param_names.join(",")).map_err(io)?;
        for p in &self.surface {
            let vals: Vec<String> = p.values.iter().map(|v| v.to_string()).collect();
            match p.correlation {
                Some(c) => writeln!(out, "{},{c}", vals.join(",")),
                None => writeln!(out, "{},NA", vals.join(",")),
            }
            .map_err(io)?;
        }
        Ok(())
    }
}

/// Highest correlation; exact ties go to the lexicographically smallest
/// parameter tuple.
pub fn argmax(surface: &[SurfacePoint]) -> Option<(&[f64], f64)> {
    let mut best: Option<(&[f64], f64)> = None;
    for p in surface {
        let Some(c) = p.correlation else { continue };
        let better = match best {
            None => true,
            Some((vals, bc)) => {
                c > bc
                    || (c == bc
                        && p.values
                            .iter()
                            .zip(vals)
                            .find(|(a, b)| a != b)
                            .is_some_and(|(a, b)| a < b))
            }
        };
        if better {
            best = Some((&p.values, c));
        }
    }
    best
}

/// Per-year graph state reused across grid points.
enum Source<'g> {
    Fixed(BTreeMap<Year, CentralityTable>),
    Hctcd(BTreeMap<Year, HctcdBasis<'g>>),
    PageRank(&'g BTreeMap<Year, CollabGraph>),
}

fn value_of(names: &[String], point: &[f64], name: &str) -> Option<f64> {
    names.iter().position(|n| n == name).map(|i| point[i])
}

/// Paper-level feature for every subset paper, in subset order.
pub fn feature_column(
    papers: &[&PaperRecord],
    tables: &BTreeMap<Year, CentralityTable>,
    spec: &AggregationSpec,
) -> Result<Vec<f64>> {
    papers
        .iter()
        .map(|p| {
            let table = tables
                .get(&p.year)
                .ok_or_else(|| Error::Missing(format!("no centrality table for {}", p.year)))?;
            aggregate(table, p, spec)
        })
        .collect()
}

fn scan<F>(
    points: Vec<Vec<f64>>,
    response: &[f64],
    eval: F,
) -> Result<Vec<SurfacePoint>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    points
        .into_par_iter()
        .map(|values| {
            let feature = eval(&values)?;
            Ok(SurfacePoint {
                correlation: pearson(&feature, response),
                values,
            })
        })
        .collect()
}

/// Evaluates every grid point on the subset and returns the full surface
/// with its argmax.
pub fn tune(
    corpus: &Corpus,
    percentiles: &PercentileTable,
    grid: &GridSpec,
    pipeline: &TunePipeline,
) -> Result<TuneResult> {
    pipeline.check_params(grid)?;
    let points = grid.points()?;
    let papers = grid.subset.select(corpus);
    if papers.is_empty() {
        return Err(Error::Empty("tuning subset selected no papers".into()));
    }
    let response: Vec<f64> = papers
        .iter()
        .map(|p| {
            percentiles
                .get(&p.paper_id)
                .ok_or_else(|| Error::Missing(format!("no percentile for {}", p.paper_id)))
        })
        .collect::<Result<_>>()?;
    let years: BTreeSet<Year> = papers.iter().map(|p| p.year).collect();
    let graphs: BTreeMap<Year, CollabGraph> = years
        .iter()
        .map(|&y| Ok((y, build_graph(corpus, y, pipeline.window)?)))
        .collect::<Result<_>>()?;

    let names: Vec<String> = grid.params.iter().map(|p| p.name.clone()).collect();
    let source = match pipeline.metric {
        MetricKind::Hctcd => Source::Hctcd(graphs.iter().map(|(&y, g)| (y, HctcdBasis::new(g))).collect()),
        MetricKind::PageRank if names.iter().any(|n| n == PARAM_DAMPING) => Source::PageRank(&graphs),
        kind => {
            let metric = match kind {
                MetricKind::PageRank => Metric::PageRank(pipeline.pagerank),
                MetricKind::Degree => Metric::Degree,
                MetricKind::Closeness => Metric::Closeness,
                MetricKind::Harmonic => Metric::Harmonic,
                MetricKind::Betweenness => Metric::Betweenness,
                MetricKind::Hctcd => unreachable!("handled above"),
            };
            Source::Fixed(
                graphs
                    .iter()
                    .map(|(&y, g)| Ok((y, metric.compute(g)?)))
                    .collect::<Result<_>>()?,
            )
        }
    };

    let eval = |point: &[f64]| -> Result<Vec<f64>> {
        let mut spec = pipeline.aggregation;
        if let Some(tau) = value_of(&names, point, PARAM_TAU) {
            spec.tau = tau;
        }
        match &source {
            Source::Fixed(tables) => feature_column(&papers, tables, &spec),
            Source::Hctcd(bases) => {
                let params = HctcdParams {
                    alpha: value_of(&names, point, PARAM_ALPHA).unwrap_or(pipeline.hctcd.alpha),
                    beta: value_of(&names, point, PARAM_BETA).unwrap_or(pipeline.hctcd.beta),
                    pair_scope: pipeline.hctcd.pair_scope,
                };
                let tables = bases
                    .iter()
                    .map(|(&y, b)| Ok((y, b.evaluate(params)?)))
                    .collect::<Result<_>>()?;
                feature_column(&papers, &tables, &spec)
            }
            Source::PageRank(graphs) => {
                let d = value_of(&names, point, PARAM_DAMPING).expect("PageRank source implies d");
                let p = pipeline.pagerank;
                let tables = graphs
                    .iter()
                    .map(|(&y, g)| Ok((y, pagerank(g, d, p.tol, p.max_iter)?)))
                    .collect::<Result<_>>()?;
                feature_column(&papers, &tables, &spec)
            }
        }
    };
    let surface = scan(points, &response, eval)?;
    let (best_values, best_correlation) = argmax(&surface)
        .map(|(v, c)| (v.to_vec(), c))
        .ok_or_else(|| {
            Error::InvalidParameter("feature is constant at every grid point; correlation undefined".into())
        })?;
    Ok(TuneResult {
        param_names: names,
        surface,
        best_values,
        best_correlation,
        n_papers: papers.len(),
    })
}

/// Convenience: HCTCD with a weighted-sum aggregation, the usual α/β scan.
pub fn hctcd_pipeline(window: i32, kind: AggregationKind) -> TunePipeline {
    TunePipeline::new(MetricKind::Hctcd, window, AggregationSpec::new(kind))
}
