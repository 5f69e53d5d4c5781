//! Pipeline stages. Each stage recomputes what it needs from the corpus
//! (reusing anything already computed in this process) and writes its
//! artifacts through an [`ArtifactWriter`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufReader;
use std::path::Path;

use super::artifacts::{sha256_hex, ArtifactWriter};
use super::config::RunConfig;
use super::report::{correlation_matrix, window_table};
use crate::aggregation::AggregationSpec;
use crate::centrality::MetricKind;
use crate::data_model::{compute_percentiles, load_corpus, Corpus, PercentileTable, Year};
use crate::error::{Error, Result};
use crate::features::{
    build_feature_matrix, CentralityStore, FeatureMatrix, FeaturePlan, FeatureSettings, ResponseKind,
    RowFilter,
};
use crate::graph::{build_graph, log_log_degree_slope};
use crate::predictive::compare_feature_sets;
use crate::regression::{
    fit_beta, fit_ols, likelihood_ratio_test, render_regression_table, write_fit_key_values, LrtResult,
    RegressionFit, TableModel,
};
use crate::stats::pearson;
use crate::tuning::{tune, GridSpec, TunePipeline, TuneResult};

pub struct Pipeline {
    cfg: RunConfig,
    writer: ArtifactWriter,
    corpus: Corpus,
    settings: FeatureSettings,
    percentiles: PercentileTable,
    store: CentralityStore,
    fits: BTreeMap<String, RegressionFit>,
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// `HCTCD.W.Sum` at window 4 becomes `HCTCD-4.W.Sum`.
fn at_window(feature: &str, window: i32) -> Result<String> {
    match feature.split_once('.') {
        Some((head, rest)) if !head.contains('-') => Ok(format!("{head}-{window}.{rest}")),
        _ => Err(Error::UnknownFeature(format!(
            "{feature} (window features are written <Metric>.<Agg>)"
        ))),
    }
}

impl Pipeline {
    /// Loads and validates the corpus, keeping only configured venues.
    pub fn open(cfg: RunConfig, out_dir: &Path) -> Result<Self> {
        cfg.validate()?;
        let path = cfg
            .input
            .corpus
            .clone()
            .ok_or_else(|| Error::Config("no input corpus (set input.corpus or pass --input)".into()))?;
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let full = load_corpus(BufReader::new(bytes.as_slice()))?;
        let corpus = full.filter_venues(&cfg.data.venues);
        if corpus.is_empty() {
            return Err(Error::Empty(format!(
                "no papers from venues [{}]",
                cfg.data.venues.join(", ")
            )));
        }
        if corpus.len() < full.len() {
            log::info!("dropped {} papers outside the configured venues", full.len() - corpus.len());
        }
        let latest = corpus.year_span().map(|(_, hi)| hi).expect("non-empty corpus");
        let settings = cfg.settings(latest)?;
        let percentiles = compute_percentiles(&corpus)?;
        let writer = ArtifactWriter::new(out_dir, &cfg.hash()?, &sha256_hex(&bytes))?;
        Ok(Pipeline {
            cfg,
            writer,
            corpus,
            settings,
            percentiles,
            store: CentralityStore::default(),
            fits: BTreeMap::new(),
        })
    }

    pub fn config_hash(&self) -> &str {
        self.writer.config_hash()
    }

    fn analysis_years(&self) -> Result<BTreeSet<Year>> {
        let years: BTreeSet<Year> = self
            .cfg
            .row_filter()
            .select(&self.corpus)
            .iter()
            .map(|p| p.year)
            .collect();
        if years.is_empty() {
            return Err(Error::Empty("data.years selects no papers".into()));
        }
        Ok(years)
    }

    fn matrix<S: AsRef<str>>(&mut self, names: &[S], filter: &RowFilter, response: ResponseKind) -> Result<FeatureMatrix> {
        let plan = FeaturePlan::parse(names, &self.settings.venues)?;
        let years: BTreeSet<Year> = filter.select(&self.corpus).iter().map(|p| p.year).collect();
        self.store
            .extend(&self.corpus, &plan.requirements(&self.settings), &years, &self.settings)?;
        let settings = FeatureSettings {
            response,
            ..self.settings.clone()
        };
        build_feature_matrix(&self.corpus, &self.percentiles, &self.store, &plan, &settings, filter)
    }

    pub fn ingest(&mut self) -> Result<()> {
        let bytes = csv_bytes(|b| self.corpus.write_jsonl(b))?;
        let params = format!("papers={};venues={}", self.corpus.len(), self.cfg.data.venues.join(","));
        self.writer.write("ingest", "corpus", "jsonl", &params, &bytes)?;
        Ok(())
    }

    pub fn percentiles(&mut self) -> Result<()> {
        let bytes = csv_bytes(|b| self.percentiles.write_csv(b))?;
        self.writer
            .write("percentiles", "percentiles", "csv", &format!("papers={}", self.percentiles.len()), &bytes)?;
        Ok(())
    }

    pub fn graphs(&mut self) -> Result<()> {
        let years = self.analysis_years()?;
        let mut summary = String::from("window,reference_year,nodes,edges,log_log_degree_slope\n");
        for &w in &self.cfg.graph.windows.clone() {
            for &y in &years {
                let g = build_graph(&self.corpus, y, w)?;
                let slope = log_log_degree_slope(&g.degree_histogram())
                    .map_or_else(|| "NA".to_string(), |s| s.to_string());
                writeln!(summary, "{w},{y},{},{},{slope}", g.node_count(), g.edge_count()).unwrap();
                if self.cfg.graph.snapshots {
                    let bytes = csv_bytes(|b| g.write_snapshot(b))?;
                    self.writer.write(
                        "graph",
                        &format!("graph-w{w}-{y}"),
                        "edges",
                        &format!("window={w};reference_year={y}"),
                        &bytes,
                    )?;
                }
            }
        }
        let params = format!("windows={:?}", self.cfg.graph.windows);
        self.writer.write("graph", "graphs", "csv", &params, summary.as_bytes())?;
        Ok(())
    }

    pub fn centrality(&mut self) -> Result<()> {
        let years = self.analysis_years()?;
        let requests: BTreeSet<(MetricKind, i32)> = self
            .cfg
            .metrics()?
            .into_iter()
            .flat_map(|m| self.cfg.graph.windows.iter().map(move |&w| (m, w)))
            .collect();
        self.store.extend(&self.corpus, &requests, &years, &self.settings)?;
        let mut out = String::from("metric,window,reference_year,author_id,score\n");
        let mut labels = BTreeSet::new();
        for t in self.store.sorted() {
            if !requests.contains(&(t.metric.kind(), t.window_len)) || !years.contains(&t.reference_year) {
                continue;
            }
            labels.insert(format!("{}[{}]", t.metric.kind(), t.metric.params_label()));
            for (author, score) in t.iter() {
                writeln!(out, "{},{},{},{author},{score}", t.metric.kind(), t.window_len, t.reference_year).unwrap();
            }
        }
        let params = format!(
            "metrics={};windows={:?}",
            labels.into_iter().collect::<Vec<_>>().join(","),
            self.cfg.graph.windows
        );
        self.writer.write("centrality", "centrality", "csv", &params, out.as_bytes())?;
        Ok(())
    }

    pub fn aggregate(&mut self) -> Result<()> {
        let kinds = self.cfg.aggregation_kinds()?;
        let mut names = Vec::new();
        for m in self.cfg.metrics()? {
            for &w in &self.cfg.graph.windows {
                for k in &kinds {
                    names.push(format!("{}-{w}.{}", m.name(), k.label()));
                }
            }
        }
        let m = self.matrix(&names, &self.cfg.row_filter(), ResponseKind::Raw)?;
        let m = m.select_columns(&names)?;
        let bytes = csv_bytes(|b| m.write_csv(b))?;
        let params = format!(
            "tau={};missing={};columns={}",
            self.settings.tau,
            self.settings.missing.as_str(),
            names.len()
        );
        self.writer.write("aggregate", "aggregates", "csv", &params, &bytes)?;
        Ok(())
    }

    pub fn features(&mut self) -> Result<()> {
        let filter = self.cfg.row_filter();
        for spec in self.cfg.regression.models.clone() {
            let m = self.matrix(&spec.features, &filter, self.settings.response)?;
            let bytes = csv_bytes(|b| m.write_csv(b))?;
            let params = format!("model={};response={}", spec.name, self.settings.response.as_str());
            self.writer.write("features", &format!("features-{}", spec.name), "csv", &params, &bytes)?;
        }
        Ok(())
    }

    fn ensure_fits(&mut self) -> Result<()> {
        let filter = self.cfg.row_filter();
        for spec in self.cfg.regression.models.clone() {
            if self.fits.contains_key(&spec.name) {
                continue;
            }
            let m = self.matrix(&spec.features, &filter, self.settings.response)?;
            let fit = match spec.kind.as_str() {
                "beta" => fit_beta(&m, &self.cfg.beta_options()),
                _ => fit_ols(&m),
            }
            .inspect_err(|_| log::error!("fitting model {} failed", spec.name))?;
            self.fits.insert(spec.name.clone(), fit);
        }
        Ok(())
    }

    pub fn fit(&mut self) -> Result<()> {
        self.ensure_fits()?;
        for spec in &self.cfg.regression.models {
            let fit = &self.fits[&spec.name];
            let bytes = csv_bytes(|b| write_fit_key_values(fit, b))?;
            let params = format!("model={};kind={}", spec.name, spec.kind);
            self.writer.write("fit", &format!("fit-{}", spec.name), "kv", &params, &bytes)?;
        }
        let models: Vec<TableModel> = self
            .cfg
            .regression
            .models
            .iter()
            .map(|s| TableModel {
                title: s.name.clone(),
                fit: &self.fits[&s.name],
            })
            .collect();
        let table = render_regression_table(&models);
        self.writer
            .write("fit", "fits", "txt", &format!("models={}", models.len()), table.as_bytes())?;
        Ok(())
    }

    fn lrt_results(&mut self) -> Result<Vec<(String, String, LrtResult)>> {
        self.ensure_fits()?;
        self.cfg
            .regression
            .lrt
            .iter()
            .map(|t| {
                let r = likelihood_ratio_test(&self.fits[&t.reduced], &self.fits[&t.full])?;
                Ok((t.reduced.clone(), t.full.clone(), r))
            })
            .collect()
    }

    pub fn lrt(&mut self) -> Result<()> {
        let mut out = String::from("reduced,full,ll_reduced,ll_full,statistic,df,p_value\n");
        for (reduced, full, r) in self.lrt_results()? {
            writeln!(
                out,
                "{reduced},{full},{},{},{},{},{}",
                r.ll_reduced, r.ll_full, r.statistic, r.df, r.p_value
            )
            .unwrap();
        }
        let params = format!("tests={}", self.cfg.regression.lrt.len());
        self.writer.write("lrt", "lrt", "csv", &params, out.as_bytes())?;
        Ok(())
    }

    fn scans(&self) -> Result<Vec<(&'static str, GridSpec, TunePipeline)>> {
        let t = &self.cfg.tuning;
        let filter = self.cfg.tuning_filter();
        let with_limit = |mut g: GridSpec| {
            g.max_points = t.max_points;
            g
        };
        let agg = |label: &str| -> Result<AggregationSpec> {
            Ok(AggregationSpec {
                kind: crate::aggregation::AggregationKind::parse(label)?,
                tau: self.settings.tau,
                missing: self.settings.missing,
            })
        };
        let pipe = |metric: MetricKind, label: &str| -> Result<TunePipeline> {
            Ok(TunePipeline {
                metric,
                window: t.window,
                aggregation: agg(label)?,
                pagerank: self.settings.pagerank,
                hctcd: self.settings.hctcd,
            })
        };
        let mut scans = vec![
            (
                "hctcd",
                with_limit(GridSpec::new(vec![self.cfg.alpha_range(), self.cfg.beta_range()], filter.clone())),
                pipe(MetricKind::Hctcd, &t.hctcd_aggregation)?,
            ),
            (
                "damping",
                with_limit(GridSpec::new(vec![self.cfg.damping_range()], filter.clone())),
                pipe(MetricKind::PageRank, &t.pagerank_aggregation)?,
            ),
        ];
        let tau_pipe = pipe(MetricKind::parse(&t.tau_metric)?, &t.tau_aggregation)?;
        if tau_pipe.aggregation.kind.uses_tau() {
            scans.push((
                "tau",
                with_limit(GridSpec::new(vec![self.cfg.tau_range()], filter)),
                tau_pipe,
            ));
        } else {
            log::warn!("tau scan skipped: {} aggregation has no tau", tau_pipe.aggregation.kind);
        }
        Ok(scans)
    }

    pub fn tune(&mut self) -> Result<Vec<(&'static str, TuneResult)>> {
        let mut best = String::from("scan,metric,aggregation,params,best,correlation,papers\n");
        let mut results = Vec::new();
        for (name, grid, pipe) in self.scans()? {
            let r = tune(&self.corpus, &self.percentiles, &grid, &pipe)?;
            let bytes = csv_bytes(|b| r.write_surface_csv(b))?;
            let params = format!("metric={};window={};aggregation={}", pipe.metric, pipe.window, pipe.aggregation.kind);
            self.writer.write("tune", &format!("tune-{name}"), "csv", &params, &bytes)?;
            let values: Vec<String> = r.best_values.iter().map(|v| v.to_string()).collect();
            writeln!(
                best,
                "{name},{},{},{},{},{},{}",
                pipe.metric,
                pipe.aggregation.kind,
                r.param_names.join(";"),
                values.join(";"),
                r.best_correlation,
                r.n_papers
            )
            .unwrap();
            results.push((name, r));
        }
        self.writer.write("tune", "tune-best", "csv", "", best.as_bytes())?;
        Ok(results)
    }

    pub fn predict(&mut self) -> Result<()> {
        let filter = self.cfg.row_filter();
        let with = self.matrix(&self.cfg.predict.with.clone(), &filter, self.settings.response)?;
        let without = self.matrix(&self.cfg.predict.without.clone(), &filter, self.settings.response)?;
        let cmp = compare_feature_sets(&with, &without, &self.cfg.split_spec())?;
        let bytes = csv_bytes(|b| cmp.write_csv(b))?;
        let params = format!(
            "seed={};test_fraction={};k_folds={}",
            self.cfg.seed, self.cfg.predict.test_fraction, self.cfg.predict.k_folds
        );
        self.writer.write("predict", "predict", "csv", &params, &bytes)?;
        Ok(())
    }

    fn correlation_section(&mut self, out: &mut String) -> Result<()> {
        let filter = self.cfg.row_filter();
        let windows = self.cfg.graph.windows.clone();
        let features = self.cfg.report.window_features.clone();
        if !features.is_empty() {
            let mut names = Vec::new();
            for f in &features {
                for &w in &windows {
                    names.push(at_window(f, w)?);
                }
            }
            let m = self.matrix(&names, &filter, ResponseKind::Raw)?;
            let y: Vec<f64> = m.y.iter().copied().collect();
            let cells: Vec<Vec<Option<f64>>> = features
                .iter()
                .map(|f| {
                    windows
                        .iter()
                        .map(|&w| {
                            let col = m.column(&at_window(f, w).expect("checked above")).expect("built above");
                            pearson(&col, &y)
                        })
                        .collect()
                })
                .collect();
            writeln!(out, "Correlation with pcite by window length\n").unwrap();
            out.push_str(&window_table(&features, &windows, &cells));
            out.push('\n');
        }
        for set in self.cfg.report.correlation_sets.clone() {
            let m = self.matrix(&set.features, &filter, ResponseKind::Raw)?;
            let mut labels = vec!["Pcite".to_string()];
            let mut columns = vec![m.y.iter().copied().collect::<Vec<f64>>()];
            for f in &set.features {
                let name = f.trim().trim_end_matches('.');
                labels.push(name.to_string());
                columns.push(m.column(name).ok_or_else(|| Error::UnknownFeature(name.to_string()))?);
            }
            writeln!(out, "Correlation matrix: {}\n", set.name).unwrap();
            out.push_str(&correlation_matrix(&labels, &columns));
            out.push('\n');
        }
        Ok(())
    }

    pub fn report(&mut self) -> Result<()> {
        let mut out = String::new();
        writeln!(
            out,
            "papers={} config={} seed={}\n",
            self.corpus.len(),
            self.config_hash(),
            self.cfg.seed
        )
        .unwrap();
        self.correlation_section(&mut out)?;
        self.ensure_fits()?;
        for table in &self.cfg.report.tables {
            let models: Vec<TableModel> = table
                .models
                .iter()
                .map(|n| TableModel {
                    title: n.clone(),
                    fit: &self.fits[n],
                })
                .collect();
            writeln!(out, "Regression table: {}\n", table.name).unwrap();
            out.push_str(&render_regression_table(&models));
            out.push('\n');
        }
        let lrts = self.lrt_results()?;
        if !lrts.is_empty() {
            writeln!(out, "Likelihood ratio tests\n").unwrap();
            let mut rows = vec![vec![
                "Comparison".to_string(),
                "LL_reduced".into(),
                "LL_full".into(),
                "LRT_stat".into(),
                "df".into(),
                "p-value".into(),
            ]];
            for (reduced, full, r) in &lrts {
                rows.push(vec![
                    format!("{reduced} vs {full}"),
                    format!("{:.3}", r.ll_reduced),
                    format!("{:.3}", r.ll_full),
                    format!("{:.3}", r.statistic),
                    r.df.to_string(),
                    format!("{:.3}", r.p_value),
                ]);
            }
            for row in rows {
                writeln!(out, "{:<28}{:>12}{:>12}{:>12}{:>5}{:>10}", row[0], row[1], row[2], row[3], row[4], row[5])
                    .unwrap();
            }
        }
        self.writer.write("report", "report", "txt", "", out.as_bytes())?;
        Ok(())
    }

    /// Every stage in order.
    pub fn run_all(&mut self) -> Result<()> {
        self.ingest()?;
        self.percentiles()?;
        self.graphs()?;
        self.centrality()?;
        self.aggregate()?;
        self.features()?;
        self.fit()?;
        self.lrt()?;
        self.tune()?;
        self.predict()?;
        self.report()
    }
}
