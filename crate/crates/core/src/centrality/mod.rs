//! Per-author centrality scores on a [`CollabGraph`].
//!
//! Every metric returns a [`CentralityTable`] covering all graph nodes.
//! Per-source work runs on the rayon pool; results are gathered in node
//! order (and, for betweenness, reduced in a fixed block order), so output
//! does not depend on the number of worker threads.

mod betweenness;
mod closeness;
mod pagerank;

use std::fmt;
use std::io::{BufRead, Write};

pub use betweenness::betweenness_centrality;
pub use closeness::{
    closeness_centrality, degree_centrality, harmonic_closeness, hctcd, HctcdBasis,
};
pub use pagerank::pagerank;

use crate::data_model::Year;
use crate::error::{Error, Result};
use crate::graph::CollabGraph;

/// Which node pairs receive the temporal/collaboration-count factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairScope {
    /// Direct co-authors get `exp(-alpha*age + beta*count)`, all other
    /// reachable pairs weight 1.
    #[default]
    NeighborsOnly,
    /// Non-adjacent pairs are assigned count 0 and age 0. Since both
    /// exponents then vanish this yields the same scores as
    /// `NeighborsOnly`; kept as an explicit option for sensitivity runs.
    AllPairs,
}

impl PairScope {
    pub fn as_str(self) -> &'static str {
        match self {
            PairScope::NeighborsOnly => "neighbors",
            PairScope::AllPairs => "all-pairs",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neighbors" | "neighbors-only" | "neighbours" => Ok(PairScope::NeighborsOnly),
            "all-pairs" | "all" | "allpairs" => Ok(PairScope::AllPairs),
            other => Err(Error::InvalidParameter(format!("unknown pair scope {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HctcdParams {
    /// Temporal decay exponent applied to `reference_year - last_year`.
    pub alpha: f64,
    /// Collaboration-count exponent.
    pub beta: f64,
    pub pair_scope: PairScope,
}

impl HctcdParams {
    pub fn new(alpha: f64, beta: f64) -> Self {
        HctcdParams {
            alpha,
            beta,
            pair_scope: PairScope::NeighborsOnly,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "HCTCD parameters must be finite (alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// `exp(-alpha * (reference - last_year) + beta * count)`.
    #[inline]
    pub fn edge_weight(&self, reference_year: Year, last_year: Year, count: u32) -> f64 {
        let age = f64::from(reference_year - last_year);
        (-self.alpha * age + self.beta * f64::from(count)).exp()
    }
}

impl Default for HctcdParams {
    fn default() -> Self {
        HctcdParams::new(-0.2, 0.45)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl PageRankParams {
    pub fn with_damping(damping: f64) -> Self {
        PageRankParams {
            damping,
            ..Default::default()
        }
    }
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.975,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// A centrality metric together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Degree,
    Closeness,
    Harmonic,
    Betweenness,
    PageRank(PageRankParams),
    Hctcd(HctcdParams),
}

/// Parameter-free metric identity, used for feature names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricKind {
    Degree,
    Closeness,
    Harmonic,
    Betweenness,
    PageRank,
    Hctcd,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Degree,
        MetricKind::Closeness,
        MetricKind::Harmonic,
        MetricKind::Betweenness,
        MetricKind::PageRank,
        MetricKind::Hctcd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Degree => "Degree",
            MetricKind::Closeness => "Closeness",
            MetricKind::Harmonic => "Harmonic",
            MetricKind::Betweenness => "Betweenness",
            MetricKind::PageRank => "Cpagerank",
            MetricKind::Hctcd => "HCTCD",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "degree" => Ok(MetricKind::Degree),
            "closeness" => Ok(MetricKind::Closeness),
            "harmonic" => Ok(MetricKind::Harmonic),
            "betweenness" => Ok(MetricKind::Betweenness),
            "cpagerank" | "pagerank" => Ok(MetricKind::PageRank),
            "hctcd" => Ok(MetricKind::Hctcd),
            other => Err(Error::UnknownFeature(format!("unknown metric {other:?}"))),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Metric {
    pub fn kind(&self) -> MetricKind {
        match self {
            Metric::Degree => MetricKind::Degree,
            Metric::Closeness => MetricKind::Closeness,
            Metric::Harmonic => MetricKind::Harmonic,
            Metric::Betweenness => MetricKind::Betweenness,
            Metric::PageRank(_) => MetricKind::PageRank,
            Metric::Hctcd(_) => MetricKind::Hctcd,
        }
    }

    /// Space-separated `key=value` parameter list (empty for
    /// parameter-free metrics).
    pub fn params_label(&self) -> String {
        match self {
            Metric::PageRank(p) => format!("d={} tol={} max_iter={}", p.damping, p.tol, p.max_iter),
            Metric::Hctcd(p) => format!(
                "alpha={} beta={} scope={}",
                p.alpha,
                p.beta,
                p.pair_scope.as_str()
            ),
            _ => String::new(),
        }
    }

    pub fn compute(&self, graph: &CollabGraph) -> Result<CentralityTable> {
        match self {
            Metric::Degree => Ok(degree_centrality(graph)),
            Metric::Closeness => Ok(closeness_centrality(graph)),
            Metric::Harmonic => Ok(harmonic_closeness(graph)),
            Metric::Betweenness => Ok(betweenness_centrality(graph)),
            Metric::PageRank(p) => pagerank(graph, p.damping, p.tol, p.max_iter),
            Metric::Hctcd(p) => hctcd(graph, *p),
        }
    }
}

/// Scores for one metric on one window/reference-year graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityTable {
    pub metric: Metric,
    pub window_len: i32,
    pub reference_year: Year,
    authors: Vec<String>,
    scores: Vec<f64>,
}

impl CentralityTable {
    /// `authors` must be sorted and aligned with `scores`.
    pub(crate) fn from_graph(graph: &CollabGraph, metric: Metric, scores: Vec<f64>) -> Self {
        debug_assert_eq!(graph.node_count(), scores.len());
        CentralityTable {
            metric,
            window_len: graph.window().len(),
            reference_year: graph.reference_year(),
            authors: graph.authors().to_vec(),
            scores,
        }
    }

    /// Builds a table from arbitrary `(author, score)` pairs.
    pub fn from_scores(
        metric: Metric,
        window_len: i32,
        reference_year: Year,
        scores: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<Self> {
        let mut pairs: Vec<(String, f64)> = scores.into_iter().collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParameter(format!("duplicate author {}", w[0].0)));
            }
        }
        if let Some((a, s)) = pairs.iter().find(|(_, s)| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidParameter(format!("invalid score {s} for {a}")));
        }
        let (authors, scores) = pairs.into_iter().unzip();
        Ok(CentralityTable {
            metric,
            window_len,
            reference_year,
            authors,
            scores,
        })
    }

    pub fn get(&self, author: &str) -> Option<f64> {
        self.authors
            .binary_search_by(|a| a.as_str().cmp(author))
            .ok()
            .map(|i| self.scores[i])
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.authors.iter().map(String::as_str).zip(self.scores.iter().copied())
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Multiplies every score by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scores.iter_mut().for_each(|s| *s *= factor);
        out
    }

    /// Writes `#metric <name> [params] window=<n> reference=<year>`, then
    /// `author_id,score` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<centrality>", e);
        let params = self.metric.params_label();
        let sep = if params.is_empty() { "" } else { " " };
        writeln!(
            out,
            "#metric {}{sep}{params} window={} reference={}",
            self.metric.kind().name(),
            self.window_len,
            self.reference_year
        )
        .map_err(io)?;
        writeln!(out, "author_id,score").map_err(io)?;
        for (a, s) in self.iter() {
            writeln!(out, "{a},{s}").map_err(io)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let bad = |line: usize, message: String| Error::Parse { line, message };
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty table".into()))?;
        let header = header.map_err(|e| Error::io("<centrality>", e))?;
        let rest = header
            .strip_prefix("#metric ")
            .ok_or_else(|| bad(1, "missing #metric header".into()))?;
        let mut tokens = rest.split_whitespace();
        let kind = MetricKind::parse(tokens.next().unwrap_or_default())?;
        let mut kv = std::collections::HashMap::new();
        for t in tokens {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| bad(1, format!("bad header token {t:?}")))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let num = |k: &str| -> Result<f64> {
            kv.get(k)
                .ok_or_else(|| bad(1, format!("header lacks {k}")))?
                .parse::<f64>()
                .map_err(|e| bad(1, format!("{k}: {e}")))
        };
        let metric = match kind {
            MetricKind::Degree => Metric::Degree,
            MetricKind::Closeness => Metric::Closeness,
            MetricKind::Harmonic => Metric::Harmonic,
            MetricKind::Betweenness => Metric::Betweenness,
            MetricKind::PageRank => Metric::PageRank(PageRankParams {
                damping: num("d")?,
                tol: num("tol")?,
                max_iter: num("max_iter")? as usize,
            }),
            MetricKind::Hctcd => Metric::Hctcd(HctcdParams {
                alpha: num("alpha")?,
                beta: num("beta")?,
                pair_scope: PairScope::parse(kv.get("scope").map(String::as_str).unwrap_or("neighbors"))?,
            }),
        };
        let window_len = num("window")? as i32;
        let reference_year = num("reference")? as Year;
        let mut scores = Vec::new();
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::io("<centrality>", e))?;
            if idx == 1 && line == "author_id,score" || line.is_empty() {
                continue;
            }
            let (a, s) = line
                .rsplit_once(',')
                .ok_or_else(|| bad(idx + 1, "expected author_id,score".into()))?;
            let s: f64 = s.parse().map_err(|e| bad(idx + 1, format!("score: {e}")))?;
            scores.push((a.to_string(), s));
        }
        CentralityTable::from_scores(metric, window_len, reference_year, scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeAttr, Window};

    #[test]
    fn table_csv_round_trip() {
        let g = CollabGraph::from_parts(
            Window { start: 2010, end: 2015 },
            2016,
            ["z".to_string()],
            [("a".into(), "b".into(), EdgeAttr { count: 2, last_year: 2014 })],
        )
        .unwrap();
        for metric in [
            Metric::Degree,
            Metric::PageRank(PageRankParams::default()),
            Metric::Hctcd(HctcdParams::default()),
        ] {
            let t = metric.compute(&g).unwrap();
            let mut buf = Vec::new();
            t.write_csv(&mut buf).unwrap();
            let back = CentralityTable::read_csv(buf.as_slice()).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn metric_names_parse() {
        for k in MetricKind::ALL {
            assert_eq!(MetricKind::parse(k.name()).unwrap(), k);
        }
        assert_eq!(MetricKind::parse("PageRank").unwrap(), MetricKind::PageRank);
        assert!(MetricKind::parse("katz").is_err());
    }

    #[test]
    fn rejects_bad_scores() {
        assert!(CentralityTable::from_scores(Metric::Degree, 1, 2000, [("a".into(), -1.0)]).is_err());
        assert!(CentralityTable::from_scores(Metric::Degree, 1, 2000, [("a".into(), f64::NAN)]).is_err());
    }
}
