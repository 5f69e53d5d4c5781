//! Run configuration, stored as TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregation::{AggregationKind, AggregationSpec, MissingAuthorPolicy};
use crate::centrality::{HctcdParams, MetricKind, PageRankParams, PairScope};
use crate::data_model::Year;
use crate::error::{Error, Result};
use crate::features::{FeaturePlan, FeatureSettings, ResponseKind, RowFilter};
use crate::predictive::SplitSpec;
use crate::regression::BetaOptions;
use crate::tuning::ParamRange;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub input: InputSection,
    pub data: DataSection,
    pub graph: GraphSection,
    pub centrality: CentralitySection,
    pub aggregation: AggregationSection,
    pub regression: RegressionSection,
    pub tuning: TuningSection,
    pub predict: PredictSection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    /// JSON-lines corpus; relative paths resolve against the config file.
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Venues kept at ingest; the first is the regression reference level.
    pub venues: Vec<String>,
    /// Year used by `YearToNow`; defaults to the latest corpus year.
    pub now_year: Option<Year>,
    /// Inclusive `[first, last]` publication years used as analysis rows.
    pub years: Option<[Year; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub windows: Vec<i32>,
    pub default_window: i32,
    /// `[short, long]` windows for `.d` features.
    pub diff_windows: [i32; 2],
    /// Also write one edge-list snapshot per (window, year).
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CentralitySection {
    pub metrics: Vec<String>,
    pub damping: f64,
    pub pagerank_tol: f64,
    pub pagerank_max_iter: usize,
    pub alpha: f64,
    pub beta: f64,
    pub pair_scope: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregationSection {
    /// Aggregations exported by the `aggregate` stage.
    pub kinds: Vec<String>,
    pub tau: f64,
    pub missing: String,
    pub indicator_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    /// `beta` or `ols`.
    pub kind: String,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrtSpec {
    pub reduced: String,
    pub full: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionSection {
    /// `squeezed` or `raw` pcite.
    pub response: String,
    pub tol: f64,
    pub max_iter: usize,
    pub models: Vec<ModelSpec>,
    pub lrt: Vec<LrtSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningSection {
    pub years: Option<[Year; 2]>,
    pub venues: Option<Vec<String>>,
    pub window: i32,
    pub max_points: usize,
    pub hctcd_aggregation: String,
    /// `[lo, hi, step]`
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
    pub pagerank_aggregation: String,
    pub damping: [f64; 3],
    pub tau_metric: String,
    pub tau_aggregation: String,
    pub tau: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSection {
    pub test_fraction: f64,
    pub k_folds: usize,
    pub with: Vec<String>,
    pub without: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSet {
    pub name: String,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub name: String,
    pub models: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Features correlated with pcite once per window (`<Metric>.<Agg>`).
    pub window_features: Vec<String>,
    pub correlation_sets: Vec<CorrelationSet>,
    pub tables: Vec<TableSpec>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

const CONTROLS: [&str; 6] = ["YearToNow", "ICLR", "ICML", "Len.Abs", "Len.Title", "N.Author"];

fn with_controls(extra: &[&str]) -> Vec<String> {
    CONTROLS.iter().chain(extra).map(|s| s.to_string()).collect()
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            venues: strings(&["NeurIPS", "ICLR", "ICML"]),
            now_year: None,
            years: None,
        }
    }
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            windows: vec![1, 2, 4, 8, 16],
            default_window: 8,
            diff_windows: [2, 8],
            snapshots: true,
        }
    }
}

impl Default for CentralitySection {
    fn default() -> Self {
        let pr = PageRankParams::default();
        let h = HctcdParams::default();
        CentralitySection {
            metrics: MetricKind::ALL.iter().map(|m| m.name().to_string()).collect(),
            damping: pr.damping,
            pagerank_tol: pr.tol,
            pagerank_max_iter: pr.max_iter,
            alpha: h.alpha,
            beta: h.beta,
            pair_scope: h.pair_scope.as_str().to_string(),
        }
    }
}

impl Default for AggregationSection {
    fn default() -> Self {
        AggregationSection {
            kinds: AggregationKind::ALL.iter().map(|k| k.label().to_string()).collect(),
            tau: 0.3,
            missing: MissingAuthorPolicy::Zero.as_str().to_string(),
            indicator_threshold: 0.5,
        }
    }
}

impl Default for RegressionSection {
    fn default() -> Self {
        let model = |name: &str, kind: &str, extra: &[&str]| ModelSpec {
            name: name.into(),
            kind: kind.into(),
            features: with_controls(extra),
        };
        RegressionSection {
            response: ResponseKind::Squeezed.as_str().to_string(),
            tol: BetaOptions::default().tol,
            max_iter: BetaOptions::default().max_iter,
            models: vec![
                model("Beta.1st", "beta", &["Closeness.1st"]),
                model("OLS.1st", "ols", &["Closeness.1st"]),
                model("Beta.Max", "beta", &["Closeness.Max"]),
                model("OLS.Max", "ols", &["Closeness.Max"]),
                model("Base", "beta", &["Model"]),
                model("HCTCD", "beta", &["Model", "HCTCD.W.Ave"]),
                model("HCTCD.d", "beta", &["Model", "HCTCD.W.Ave", "HCTCD.W.Ave.d"]),
                model(
                    "MaxInd",
                    "beta",
                    &["Model", "HCTCD.1st", "HCTCD.1st.d", "HCTCD.MaxInd", "HCTCD.MaxInd.1st", "HCTCD.MaxInd.Max"],
                ),
            ],
            lrt: vec![
                LrtSpec {
                    reduced: "HCTCD".into(),
                    full: "HCTCD.d".into(),
                },
                LrtSpec {
                    reduced: "Base".into(),
                    full: "HCTCD.d".into(),
                },
            ],
        }
    }
}

impl Default for TuningSection {
    fn default() -> Self {
        TuningSection {
            years: Some([2015, 2016]),
            venues: None,
            window: 8,
            max_points: crate::tuning::DEFAULT_MAX_POINTS,
            hctcd_aggregation: "W.Sum".into(),
            alpha: [-1.0, 1.0, 0.05],
            beta: [0.0, 1.0, 0.05],
            pagerank_aggregation: "W.Sum".into(),
            damping: [0.025, 0.975, 0.025],
            tau_metric: MetricKind::Hctcd.name().into(),
            tau_aggregation: "W.Sum".into(),
            tau: [0.0, 2.0, 0.05],
        }
    }
}

impl Default for PredictSection {
    fn default() -> Self {
        PredictSection {
            test_fraction: 0.1,
            k_folds: 5,
            with: with_controls(&["Model", "HCTCD.W.Sum", "Closeness.Ave", "Degree.Ave", "Betweenness.Ave", "Cpagerank.Ave"]),
            without: with_controls(&["Model"]),
        }
    }
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            window_features: strings(&[
                "Degree.Ave",
                "HCTCD.Ave",
                "Cpagerank.Ave",
                "Closeness.Ave",
                "Betweenness.Ave",
                "HCTCD.W.Sum",
                "HCTCD.W.Ave",
            ]),
            correlation_sets: vec![
                CorrelationSet {
                    name: "metrics".into(),
                    features: strings(&[
                        "HCTCD.Ave",
                        "Degree.Ave",
                        "Betweenness.Ave",
                        "Closeness.Ave",
                        "Cpagerank.Ave",
                        "N.Author",
                    ]),
                },
                CorrelationSet {
                    name: "aggregations".into(),
                    features: strings(&[
                        "HCTCD.Sum",
                        "HCTCD.Ave",
                        "HCTCD.1st",
                        "HCTCD.Last",
                        "HCTCD.Max",
                        "HCTCD.Min",
                        "HCTCD.Std",
                        "HCTCD.W.Sum",
                        "HCTCD.W.Ave",
                        "N.Author",
                    ]),
                },
            ],
            tables: vec![
                TableSpec {
                    name: "beta vs OLS".into(),
                    models: strings(&["Beta.1st", "OLS.1st", "Beta.Max", "OLS.Max"]),
                },
                TableSpec {
                    name: "centrality models".into(),
                    models: strings(&["Base", "HCTCD", "HCTCD.d", "MaxInd"]),
                },
            ],
        }
    }
}

fn range(name: &str, r: [f64; 3]) -> ParamRange {
    ParamRange::new(name, r[0], r[1], r[2])
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; a relative corpus path is made relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        if let Some(corpus) = &cfg.input.corpus {
            if corpus.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.input.corpus = Some(base.join(corpus));
            }
        }
        Ok(cfg)
    }

    /// First 12 hex digits of the SHA-256 of the serialized config.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(hex::encode(digest)[..12].to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.data.venues.is_empty() {
            return bad("data.venues must not be empty".into());
        }
        if self.graph.windows.is_empty() || self.graph.windows.iter().any(|&w| w < 1) {
            return bad("graph.windows must be a non-empty list of positive integers".into());
        }
        let [s, l] = self.graph.diff_windows;
        if self.graph.default_window < 1 || s < 1 || l < 1 || self.tuning.window < 1 {
            return bad("windows must be positive".into());
        }
        for m in &self.centrality.metrics {
            MetricKind::parse(m).map_err(|e| Error::Config(e.to_string()))?;
        }
        for k in &self.aggregation.kinds {
            AggregationKind::parse(k).map_err(|e| Error::Config(e.to_string()))?;
        }
        self.settings(2000)?;
        let mut names = Vec::new();
        for m in &self.regression.models {
            if names.contains(&m.name.as_str()) {
                return bad(format!("model {} defined twice", m.name));
            }
            names.push(&m.name);
            if !matches!(m.kind.as_str(), "beta" | "ols") {
                return bad(format!("model {}: kind must be beta or ols", m.name));
            }
            FeaturePlan::parse(&m.features, &self.data.venues).map_err(|e| Error::Config(format!("model {}: {e}", m.name)))?;
        }
        for t in &self.regression.lrt {
            for n in [&t.reduced, &t.full] {
                if !names.contains(&n.as_str()) {
                    return bad(format!("lrt refers to unknown model {n}"));
                }
            }
        }
        for t in &self.report.tables {
            if let Some(n) = t.models.iter().find(|n| !names.contains(&n.as_str())) {
                return bad(format!("report table {} refers to unknown model {n}", t.name));
            }
        }
        for f in [&self.predict.with, &self.predict.without] {
            FeaturePlan::parse(f, &self.data.venues).map_err(|e| Error::Config(format!("predict: {e}")))?;
        }
        for set in &self.report.correlation_sets {
            FeaturePlan::parse(&set.features, &self.data.venues)
                .map_err(|e| Error::Config(format!("correlation set {}: {e}", set.name)))?;
        }
        FeaturePlan::parse(&self.report.window_features, &self.data.venues)
            .map_err(|e| Error::Config(format!("report.window_features: {e}")))?;
        self.split_spec().validate().map_err(|e| Error::Config(e.to_string()))?;
        AggregationKind::parse(&self.tuning.hctcd_aggregation).map_err(|e| Error::Config(e.to_string()))?;
        AggregationKind::parse(&self.tuning.pagerank_aggregation).map_err(|e| Error::Config(e.to_string()))?;
        AggregationKind::parse(&self.tuning.tau_aggregation).map_err(|e| Error::Config(e.to_string()))?;
        MetricKind::parse(&self.tuning.tau_metric).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn metrics(&self) -> Result<Vec<MetricKind>> {
        self.centrality.metrics.iter().map(|m| MetricKind::parse(m)).collect()
    }

    pub fn aggregation_kinds(&self) -> Result<Vec<AggregationKind>> {
        self.aggregation.kinds.iter().map(|k| AggregationKind::parse(k)).collect()
    }

    /// Feature settings with `YearToNow` anchored at `latest_year` unless
    /// the config pins it.
    pub fn settings(&self, latest_year: Year) -> Result<FeatureSettings> {
        let hctcd = HctcdParams {
            alpha: self.centrality.alpha,
            beta: self.centrality.beta,
            pair_scope: PairScope::parse(&self.centrality.pair_scope)?,
        };
        hctcd.validate()?;
        let pagerank = PageRankParams {
            damping: self.centrality.damping,
            tol: self.centrality.pagerank_tol,
            max_iter: self.centrality.pagerank_max_iter,
        };
        if !(pagerank.damping > 0.0 && pagerank.damping < 1.0) || !(pagerank.tol > 0.0) {
            return Err(Error::Config("centrality.damping must lie in (0,1) and pagerank_tol > 0".into()));
        }
        let settings = FeatureSettings {
            venues: self.data.venues.clone(),
            now_year: self.data.now_year.unwrap_or(latest_year),
            default_window: self.graph.default_window,
            diff_windows: (self.graph.diff_windows[0], self.graph.diff_windows[1]),
            pagerank,
            hctcd,
            tau: self.aggregation.tau,
            missing: MissingAuthorPolicy::parse(&self.aggregation.missing)?,
            indicator_threshold: self.aggregation.indicator_threshold,
            response: ResponseKind::parse(&self.regression.response)?,
        };
        AggregationSpec {
            kind: AggregationKind::WeightedSum,
            tau: settings.tau,
            missing: settings.missing,
        }
        .validate()?;
        Ok(settings)
    }

    pub fn row_filter(&self) -> RowFilter {
        RowFilter {
            years: self.data.years.map(|[a, b]| (a, b)),
            venues: None,
        }
    }

    pub fn tuning_filter(&self) -> RowFilter {
        RowFilter {
            years: self.tuning.years.map(|[a, b]| (a, b)),
            venues: self.tuning.venues.clone(),
        }
    }

    pub fn beta_options(&self) -> BetaOptions {
        BetaOptions {
            tol: self.regression.tol,
            max_iter: self.regression.max_iter,
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.predict.test_fraction,
            seed: self.seed,
            k_folds: self.predict.k_folds,
        }
    }

    pub fn alpha_range(&self) -> ParamRange {
        range(crate::tuning::PARAM_ALPHA, self.tuning.alpha)
    }

    pub fn beta_range(&self) -> ParamRange {
        range(crate::tuning::PARAM_BETA, self.tuning.beta)
    }

    pub fn damping_range(&self) -> ParamRange {
        range(crate::tuning::PARAM_DAMPING, self.tuning.damping)
    }

    pub fn tau_range(&self) -> ParamRange {
        range(crate::tuning::PARAM_TAU, self.tuning.tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn edited_config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.seed = 17;
        cfg.input.corpus = Some("data/corpus.jsonl".into());
        cfg.data.years = Some([2012, 2020]);
        cfg.data.now_year = Some(2025);
        cfg.graph.windows = vec![3, 16];
        cfg.tuning.venues = Some(vec!["ICLR".into()]);
        cfg.centrality.alpha = 0.1 + 0.2;
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
        assert_ne!(cfg.hash().unwrap(), RunConfig::default().hash().unwrap());
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = RunConfig::from_toml("seed = 3\n[graph]\nwindows = [8]\n").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.graph.windows, vec![8]);
        assert_eq!(cfg.graph.default_window, 8);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml("[graph]\nwindows = [0]\n").is_err());
        assert!(RunConfig::from_toml("[graph]\nwindow = [8]\n").is_err());
        assert!(RunConfig::from_toml("[centrality]\nmetrics = [\"Katz\"]\n").is_err());
        let bad_model = "[regression]\nmodels = [{ name = \"m\", kind = \"beta\", features = [\"Bogus.1st\"] }]\nlrt = []\n";
        let err = RunConfig::from_toml(bad_model).unwrap_err().to_string();
        assert!(err.contains("Bogus"), "{err}");
        let bad_lrt = "[regression]\nmodels = []\nlrt = [{ reduced = \"a\", full = \"b\" }]\n";
        let err = RunConfig::from_toml(bad_lrt).unwrap_err().to_string();
        assert!(err.contains("unknown model a"), "{err}");
    }
}
