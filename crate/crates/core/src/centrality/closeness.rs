use std::collections::VecDeque;

use log::warn;
use rayon::prelude::*;

use super::{CentralityTable, HctcdParams, Metric};
use crate::data_model::Year;
use crate::error::Result;
use crate::graph::{CollabGraph, UNREACHABLE};

/// Runs `f(source, distances)` for every node in parallel and returns the
/// results in node order.
pub(crate) fn per_source<T, F>(graph: &CollabGraph, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &[u32]) -> T + Sync,
{
    (0..graph.node_count())
        .into_par_iter()
        .map_init(
            || (Vec::new(), VecDeque::new()),
            |(dist, queue), s| {
                graph.bfs_into(s, dist, queue);
                f(s, dist)
            },
        )
        .collect()
}

/// Distinct co-authors divided by N - 1.
pub fn degree_centrality(graph: &CollabGraph) -> CentralityTable {
    let n = graph.node_count();
    let scores = if n < 2 {
        warn!("degree centrality undefined for {n} node(s); reporting zeros");
        vec![0.0; n]
    } else {
        let denom = (n - 1) as f64;
        (0..n).map(|i| graph.degree(i) as f64 / denom).collect()
    };
    CentralityTable::from_graph(graph, Metric::Degree, scores)
}

/// Closeness with Wasserman-Faust scaling for disconnected graphs:
/// `((r - 1) / sum d) * ((r - 1) / (N - 1))`, where `r` counts the nodes
/// reachable from `i` (including `i`). Isolated nodes score 0.
pub fn closeness_centrality(graph: &CollabGraph) -> CentralityTable {
    let n = graph.node_count();
    let scores = if n < 2 {
        vec![0.0; n]
    } else {
        let denom = (n - 1) as f64;
        per_source(graph, |_, dist| {
            let (mut reach, mut total) = (0u64, 0u64);
            for &d in dist {
                if d != UNREACHABLE && d > 0 {
                    reach += 1;
                    total += u64::from(d);
                }
            }
            if total == 0 {
                0.0
            } else {
                let reach = reach as f64;
                (reach / total as f64) * (reach / denom)
            }
        })
    };
    CentralityTable::from_graph(graph, Metric::Closeness, scores)
}

/// `sum_{j != i} 1/d(i, j) / (N - 1)` with unreachable pairs contributing 0.
///
/// Summed as (pairs at distance >= 2) + degree, the same association HCTCD
/// uses, so HCTCD with unit weights matches it bit for bit.
pub fn harmonic_closeness(graph: &CollabGraph) -> CentralityTable {
    let n = graph.node_count();
    let scores = if n < 2 {
        vec![0.0; n]
    } else {
        let denom = (n - 1) as f64;
        per_source(graph, |s, dist| (inverse_distance_sum(dist, 2) + graph.degree(s) as f64) / denom)
    };
    CentralityTable::from_graph(graph, Metric::Harmonic, scores)
}

fn inverse_distance_sum(dist: &[u32], min_hops: u32) -> f64 {
    dist.iter()
        .filter(|&&d| d != UNREACHABLE && d >= min_hops)
        .map(|&d| 1.0 / f64::from(d))
        .sum()
}

/// Parameter-independent pieces of HCTCD for one graph.
///
/// Splits each node's harmonic sum into the part over non-adjacent
/// reachable nodes (unaffected by the decay factor) and its direct
/// co-authors (distance 1, scaled by the edge weight). Evaluating a new
/// `(alpha, beta)` then costs O(E) instead of a BFS per node.
#[derive(Debug, Clone)]
pub struct HctcdBasis<'g> {
    graph: &'g CollabGraph,
    far_sums: Vec<f64>,
}

impl<'g> HctcdBasis<'g> {
    pub fn new(graph: &'g CollabGraph) -> Self {
        let far_sums = per_source(graph, |_, dist| inverse_distance_sum(dist, 2));
        HctcdBasis { graph, far_sums }
    }

    pub fn evaluate(&self, params: HctcdParams) -> Result<CentralityTable> {
        params.validate()?;
        let graph = self.graph;
        let n = graph.node_count();
        let reference: Year = graph.reference_year();
        let scores = if n < 2 {
            vec![0.0; n]
        } else {
            let denom = (n - 1) as f64;
            (0..n)
                .map(|i| {
                    let near: f64 = graph
                        .neighbors(i)
                        .iter()
                        .map(|nb| params.edge_weight(reference, nb.attr.last_year, nb.attr.count))
                        .sum();
                    (self.far_sums[i] + near) / denom
                })
                .collect()
        };
        Ok(CentralityTable::from_graph(graph, Metric::Hctcd(params), scores))
    }
}

/// Harmonic closeness where each direct co-author term is scaled by
/// `exp(-alpha * (t_ref - t_last) + beta * count)`; see [`super::PairScope`]
/// for non-adjacent pairs.
pub fn hctcd(graph: &CollabGraph, params: HctcdParams) -> Result<CentralityTable> {
    params.validate()?;
    HctcdBasis::new(graph).evaluate(params)
}
