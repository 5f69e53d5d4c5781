//! Reductions of per-author centralities over a paper's ordered author list.

use std::fmt;

use crate::centrality::CentralityTable;
use crate::data_model::PaperRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggregationKind {
    First,
    Last,
    Ave,
    Sum,
    Max,
    Min,
    Std,
    WeightedAve,
    WeightedSum,
}

impl AggregationKind {
    pub const ALL: [AggregationKind; 9] = [
        AggregationKind::First,
        AggregationKind::Last,
        AggregationKind::Ave,
        AggregationKind::Sum,
        AggregationKind::Max,
        AggregationKind::Min,
        AggregationKind::Std,
        AggregationKind::WeightedAve,
        AggregationKind::WeightedSum,
    ];

    /// Suffix used in feature names, e.g. `HCTCD.W.Sum`.
    pub fn label(self) -> &'static str {
        match self {
            AggregationKind::First => "1st",
            AggregationKind::Last => "Last",
            AggregationKind::Ave => "Ave",
            AggregationKind::Sum => "Sum",
            AggregationKind::Max => "Max",
            AggregationKind::Min => "Min",
            AggregationKind::Std => "Std",
            AggregationKind::WeightedAve => "W.Ave",
            AggregationKind::WeightedSum => "W.Sum",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .trim_end_matches('.')
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '.' | '_'))
            .collect();
        Ok(match key.as_str() {
            "1st" | "first" => AggregationKind::First,
            "last" => AggregationKind::Last,
            "ave" | "avg" | "mean" => AggregationKind::Ave,
            "sum" => AggregationKind::Sum,
            "max" => AggregationKind::Max,
            "min" => AggregationKind::Min,
            "std" => AggregationKind::Std,
            "wave" => AggregationKind::WeightedAve,
            "wsum" => AggregationKind::WeightedSum,
            _ => return Err(Error::UnknownFeature(format!("unknown aggregation {s:?}"))),
        })
    }

    pub fn uses_tau(self) -> bool {
        matches!(self, AggregationKind::WeightedAve | AggregationKind::WeightedSum)
    }
}

impl fmt::Display for AggregationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How to treat authors that have no score in the centrality table
/// (no papers inside the window).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingAuthorPolicy {
    /// Count them with centrality 0.
    #[default]
    Zero,
    /// Drop them; positional weights keep the original author index.
    Skip,
}

impl MissingAuthorPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zero" => Ok(MissingAuthorPolicy::Zero),
            "skip" => Ok(MissingAuthorPolicy::Skip),
            other => Err(Error::InvalidParameter(format!("unknown missing-author policy {other:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MissingAuthorPolicy::Zero => "zero",
            MissingAuthorPolicy::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregationSpec {
    pub kind: AggregationKind,
    /// Decay rate of the positional weights `exp(-tau * i)`.
    pub tau: f64,
    pub missing: MissingAuthorPolicy,
}

impl AggregationSpec {
    pub fn new(kind: AggregationKind) -> Self {
        AggregationSpec {
            kind,
            tau: 0.3,
            missing: MissingAuthorPolicy::Zero,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() || self.tau < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tau must be finite and >= 0, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Normalised positional weights `exp(-tau * i) / sum_k exp(-tau * k)` for
/// author indices `i = 0..n`.
pub fn positional_weights(n: usize, tau: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|i| (-tau * i as f64).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// `(author index, score)` for the authors that take part under `policy`.
fn author_scores(
    table: &CentralityTable,
    paper: &PaperRecord,
    policy: MissingAuthorPolicy,
) -> Result<Vec<(usize, f64)>> {
    if paper.authors.is_empty() {
        return Err(Error::InvalidRecord {
            paper_id: paper.paper_id.clone(),
            rule: "authors must be non-empty".into(),
        });
    }
    let scores: Vec<(usize, f64)> = paper
        .authors
        .iter()
        .enumerate()
        .filter_map(|(i, a)| match (table.get(a), policy) {
            (Some(s), _) => Some((i, s)),
            (None, MissingAuthorPolicy::Zero) => Some((i, 0.0)),
            (None, MissingAuthorPolicy::Skip) => None,
        })
        .collect();
    if scores.is_empty() {
        return Err(Error::Missing(format!(
            "no author of paper {} has a {} score in window {} before {}",
            paper.paper_id,
            table.metric.kind(),
            table.window_len,
            table.reference_year
        )));
    }
    Ok(scores)
}

fn reduce(values: &[(usize, f64)], kind: AggregationKind, tau: f64) -> f64 {
    let n = values.len() as f64;
    let plain = || values.iter().map(|&(_, s)| s);
    match kind {
        AggregationKind::First => values[0].1,
        AggregationKind::Last => values[values.len() - 1].1,
        AggregationKind::Sum => plain().sum(),
        AggregationKind::Ave => plain().sum::<f64>() / n,
        AggregationKind::Max => plain().fold(f64::NEG_INFINITY, f64::max),
        AggregationKind::Min => plain().fold(f64::INFINITY, f64::min),
        AggregationKind::Std => {
            let mean = plain().sum::<f64>() / n;
            (plain().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt()
        }
        AggregationKind::WeightedSum => values
            .iter()
            .map(|&(i, s)| (-tau * i as f64).exp() * s)
            .sum(),
        AggregationKind::WeightedAve => {
            let (mut num, mut den) = (0.0, 0.0);
            for &(i, s) in values {
                let w = (-tau * i as f64).exp();
                num += w * s;
                den += w;
            }
            num / den
        }
    }
}

/// Collapses the authors' scores into one paper-level value. `Std` is the
/// population standard deviation (0 for a single author).
pub fn aggregate(table: &CentralityTable, paper: &PaperRecord, spec: &AggregationSpec) -> Result<f64> {
    spec.validate()?;
    let values = author_scores(table, paper, spec.missing)?;
    Ok(reduce(&values, spec.kind, spec.tau))
}

/// `aggregate(short) - aggregate(long)`, the recent-trend feature (`X.d`).
/// Both tables must come from the same metric and reference year.
pub fn temporal_difference(
    short: &CentralityTable,
    long: &CentralityTable,
    paper: &PaperRecord,
    spec: &AggregationSpec,
) -> Result<f64> {
    if short.metric != long.metric {
        return Err(Error::Mismatch(format!(
            "temporal difference of {} ({}) against {} ({})",
            short.metric.kind(),
            short.metric.params_label(),
            long.metric.kind(),
            long.metric.params_label()
        )));
    }
    if short.reference_year != long.reference_year {
        return Err(Error::Mismatch(format!(
            "reference years differ: {} vs {}",
            short.reference_year, long.reference_year
        )));
    }
    Ok(aggregate(short, paper, spec)? - aggregate(long, paper, spec)?)
}

/// High-centrality co-author indicator with its interaction terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorTerms {
    /// 1 when `max > (1 + threshold) * first`, else 0.
    pub indicator: f64,
    pub first: f64,
    pub max: f64,
    pub indicator_x_first: f64,
    pub indicator_x_max: f64,
}

pub fn high_centrality_indicator(
    table: &CentralityTable,
    paper: &PaperRecord,
    threshold: f64,
    missing: MissingAuthorPolicy,
) -> Result<IndicatorTerms> {
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "indicator threshold must be >= 0, got {threshold}"
        )));
    }
    let values = author_scores(table, paper, missing)?;
    let first = reduce(&values, AggregationKind::First, 0.0);
    let max = reduce(&values, AggregationKind::Max, 0.0);
    let indicator = if max > (1.0 + threshold) * first { 1.0 } else { 0.0 };
    Ok(IndicatorTerms {
        indicator,
        first,
        max,
        indicator_x_first: indicator * first,
        indicator_x_max: indicator * max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::{HctcdParams, Metric};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table(scores: &[(&str, f64)]) -> CentralityTable {
        CentralityTable::from_scores(
            Metric::Degree,
            8,
            2016,
            scores.iter().map(|(a, s)| (a.to_string(), *s)),
        )
        .unwrap()
    }

    fn paper(authors: &[&str]) -> PaperRecord {
        PaperRecord {
            paper_id: "p".into(),
            year: 2016,
            venue: "ICML".into(),
            authors: authors.iter().map(|s| s.to_string()).collect(),
            citations: 0,
            title_len: 0,
            abs_len: 0,
            content_score: None,
        }
    }

    fn agg(t: &CentralityTable, p: &PaperRecord, kind: AggregationKind, tau: f64) -> f64 {
        aggregate(t, p, &AggregationSpec::new(kind).with_tau(tau)).unwrap()
    }

    #[test]
    fn weighted_sum_by_hand() {
        let t = table(&[("a", 0.4), ("b", 0.2)]);
        let v = agg(&t, &paper(&["a", "b"]), AggregationKind::WeightedSum, 0.3);
        assert_abs_diff_eq!(v, 0.4 + (-0.3f64).exp() * 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.548_163_6, epsilon = 1e-7);
    }

    #[test]
    fn single_author_degenerates() {
        let t = table(&[("a", 0.37)]);
        let p = paper(&["a"]);
        for kind in AggregationKind::ALL {
            let expected = if kind == AggregationKind::Std { 0.0 } else { 0.37 };
            assert_abs_diff_eq!(agg(&t, &p, kind, 0.3), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_tau_weighted_average_is_mean() {
        let t = table(&[("a", 0.1), ("b", 0.5), ("c", 0.9)]);
        let p = paper(&["c", "a", "b"]);
        assert_abs_diff_eq!(agg(&t, &p, AggregationKind::WeightedAve, 0.0), 0.5, epsilon = 1e-15);
        assert_eq!(agg(&t, &p, AggregationKind::First, 0.0), 0.9);
        assert_eq!(agg(&t, &p, AggregationKind::Last, 0.0), 0.5);
        assert_abs_diff_eq!(agg(&t, &p, AggregationKind::Std, 0.0), (0.32f64 / 3.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn missing_authors() {
        let t = table(&[("a", 0.6)]);
        let p = paper(&["new", "a"]);
        assert_eq!(agg(&t, &p, AggregationKind::Ave, 0.0), 0.3);
        let skip = AggregationSpec {
            kind: AggregationKind::WeightedSum,
            tau: 1.0,
            missing: MissingAuthorPolicy::Skip,
        };
        // "a" keeps its second-position weight
        assert_abs_diff_eq!(aggregate(&t, &p, &skip).unwrap(), 0.6 * (-1.0f64).exp());
        let nobody = paper(&["x", "y"]);
        assert!(matches!(aggregate(&t, &nobody, &skip), Err(Error::Missing(_))));
        assert_eq!(agg(&t, &nobody, AggregationKind::Max, 0.0), 0.0);
    }

    #[test]
    fn temporal_difference_cases() {
        let p = paper(&["a", "b"]);
        let spec = AggregationSpec::new(AggregationKind::First);
        let t2 = table(&[("a", 0.5), ("b", 0.1)]);
        let t8 = table(&[("a", 0.3), ("b", 0.4)]);
        assert_abs_diff_eq!(temporal_difference(&t2, &t8, &p, &spec).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(temporal_difference(&t2, &t2, &p, &spec).unwrap(), 0.0);

        let other = CentralityTable::from_scores(Metric::Hctcd(HctcdParams::default()), 8, 2016, [("a".into(), 1.0)]).unwrap();
        assert!(matches!(temporal_difference(&t2, &other, &p, &spec), Err(Error::Mismatch(_))));
        let other_year = CentralityTable::from_scores(Metric::Degree, 8, 2015, [("a".into(), 1.0)]).unwrap();
        assert!(matches!(temporal_difference(&t2, &other_year, &p, &spec), Err(Error::Mismatch(_))));
    }

    #[test]
    fn indicator_cases() {
        let p = paper(&["a", "b"]);
        let on = high_centrality_indicator(&table(&[("a", 0.2), ("b", 0.35)]), &p, 0.5, MissingAuthorPolicy::Zero).unwrap();
        assert_eq!(on.indicator, 1.0);
        assert_eq!(on.indicator_x_first, 0.2);
        assert_eq!(on.indicator_x_max, 0.35);

        let solo = high_centrality_indicator(&table(&[("a", 0.2)]), &paper(&["a"]), 0.5, MissingAuthorPolicy::Zero).unwrap();
        assert_eq!(solo.indicator, 0.0);

        let zeros = high_centrality_indicator(&table(&[("a", 0.0), ("b", 0.0)]), &p, 0.5, MissingAuthorPolicy::Zero).unwrap();
        assert_eq!(zeros.indicator, 0.0);
        assert_eq!(zeros.indicator_x_max, 0.0);
    }

    #[test]
    fn aggregation_labels_parse() {
        for kind in AggregationKind::ALL {
            assert_eq!(AggregationKind::parse(kind.label()).unwrap(), kind);
        }
        assert_eq!(AggregationKind::parse("wsum").unwrap(), AggregationKind::WeightedSum);
        assert_eq!(AggregationKind::parse("Ave.").unwrap(), AggregationKind::Ave);
        assert!(AggregationKind::parse("median").is_err());
    }

    fn scores_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..10.0f64, 1..10)
    }

    proptest! {
        #[test]
        fn weights_sum_to_one(n in 1usize..30, tau in 0.0..5.0f64) {
            let w = positional_weights(n, tau);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn weighted_reductions_bounds(scores in scores_strategy(), tau in 0.0..3.0f64) {
            let names: Vec<String> = (0..scores.len()).map(|i| format!("a{i}")).collect();
            let t = CentralityTable::from_scores(Metric::Degree, 8, 2016,
                names.iter().cloned().zip(scores.iter().copied())).unwrap();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let p = paper(&refs);
            let wave = agg(&t, &p, AggregationKind::WeightedAve, tau);
            let (lo, hi) = (agg(&t, &p, AggregationKind::Min, 0.0), agg(&t, &p, AggregationKind::Max, 0.0));
            prop_assert!(lo - 1e-12 <= wave && wave <= hi + 1e-12);
            let sum = agg(&t, &p, AggregationKind::Sum, 0.0);
            prop_assert!((agg(&t, &p, AggregationKind::WeightedSum, 0.0) - sum).abs() < 1e-12);
            if scores.len() <= 10 {
                let first = agg(&t, &p, AggregationKind::First, 0.0);
                prop_assert!((agg(&t, &p, AggregationKind::WeightedAve, 50.0) - first).abs() < 1e-9);
            }
        }

        #[test]
        fn sum_difference_is_linear(short in scores_strategy(), long_shift in prop::collection::vec(0.0..1.0f64, 10)) {
            let names: Vec<String> = (0..short.len()).map(|i| format!("a{i}")).collect();
            let long: Vec<f64> = short.iter().zip(&long_shift).map(|(s, d)| s + d).collect();
            let mk = |vals: &[f64]| CentralityTable::from_scores(Metric::Degree, 2, 2016,
                names.iter().cloned().zip(vals.iter().copied())).unwrap();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let p = paper(&refs);
            let diff = temporal_difference(&mk(&short), &mk(&long), &p, &AggregationSpec::new(AggregationKind::Sum)).unwrap();
            let oracle: f64 = short.iter().zip(&long).map(|(s, l)| s - l).sum();
            prop_assert!((diff - oracle).abs() < 1e-12);
        }

        #[test]
        fn indicator_is_scale_invariant(scores in scores_strategy(), lambda in 0.01..100.0f64) {
            let names: Vec<String> = (0..scores.len()).map(|i| format!("a{i}")).collect();
            let t = CentralityTable::from_scores(Metric::Degree, 8, 2016,
                names.iter().cloned().zip(scores.iter().copied())).unwrap();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let p = paper(&refs);
            let base = high_centrality_indicator(&t, &p, 0.5, MissingAuthorPolicy::Zero).unwrap();
            let scaled = high_centrality_indicator(&t.scaled(lambda), &p, 0.5, MissingAuthorPolicy::Zero).unwrap();
            // exact ties can flip under rounding; skip those
            let margin = (base.max - 1.5 * base.first).abs();
            if margin > 1e-9 * base.max.max(1.0) {
                prop_assert_eq!(base.indicator, scaled.indicator);
            }
        }
    }
}
