use rayon::prelude::*;

use super::{CentralityTable, Metric, PageRankParams};
use crate::error::{Error, Result};
use crate::graph::CollabGraph;

/// Node count above which each sweep is split across the rayon pool.
const PARALLEL_SWEEP: usize = 4096;

/// Power iteration of
/// `x_i = (1 - d)/N + d * (sum_{j ~ i} x_j / deg_j + dangling / N)`,
/// where each undirected edge is a pair of directed links and isolated
/// nodes spread their mass uniformly. Stops once the largest absolute
/// change drops below `tol`.
pub fn pagerank(
    graph: &CollabGraph,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CentralityTable> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "damping must lie in (0, 1), got {damping}"
        )));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidParameter("tol must be > 0 and max_iter >= 1".into()));
    }
    let metric = Metric::PageRank(PageRankParams {
        damping,
        tol,
        max_iter,
    });
    let n = graph.node_count();
    if n == 0 {
        return Ok(CentralityTable::from_graph(graph, metric, Vec::new()));
    }

    let nf = n as f64;
    let inv_degree: Vec<f64> = (0..n)
        .map(|i| match graph.degree(i) {
            0 => 0.0,
            d => 1.0 / d as f64,
        })
        .collect();
    let dangling: Vec<usize> = (0..n).filter(|&i| graph.degree(i) == 0).collect();

    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;

    for _ in 0..max_iter {
        let dangling_mass: f64 = dangling.iter().map(|&i| rank[i]).sum();
        let base = (1.0 - damping) / nf + damping * dangling_mass / nf;
        let pull = |i: usize| -> f64 {
            let inflow: f64 = graph
                .neighbors(i)
                .iter()
                .map(|nb| rank[nb.node] * inv_degree[nb.node])
                .sum();
            base + damping * inflow
        };
        if n >= PARALLEL_SWEEP {
            next.par_iter_mut().enumerate().for_each(|(i, x)| *x = pull(i));
        } else {
            next.iter_mut().enumerate().for_each(|(i, x)| *x = pull(i));
        }
        residual = rank
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut rank, &mut next);
        if residual < tol {
            return Ok(CentralityTable::from_graph(graph, metric, rank));
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeAttr, Window};
    use approx::assert_abs_diff_eq;

    fn graph(nodes: &[&str], edges: &[(&str, &str)]) -> CollabGraph {
        CollabGraph::from_parts(
            Window { start: 2000, end: 2000 },
            2001,
            nodes.iter().map(|s| s.to_string()),
            edges.iter().map(|(a, b)| {
                (a.to_string(), b.to_string(), EdgeAttr { count: 1, last_year: 2000 })
            }),
        )
        .unwrap()
    }

    #[test]
    fn triangle_is_uniform() {
        let g = graph(&[], &[("a", "b"), ("b", "c"), ("a", "c")]);
        for d in [0.1, 0.5, 0.85, 0.975] {
            let t = pagerank(&g, d, 1e-12, 10_000).unwrap();
            for &s in t.scores() {
                assert_abs_diff_eq!(s, 1.0 / 3.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn single_node_gets_everything() {
        let g = graph(&["solo"], &[]);
        assert_eq!(pagerank(&g, 0.85, 1e-10, 100).unwrap().scores(), &[1.0]);
    }

    #[test]
    fn path_matches_closed_form() {
        // symmetric stationary equations for a-b-c:
        // x_a = (1-d)/3 + d x_b / 2, x_b = (1-d)/3 + 2 d x_a
        let d: f64 = 0.85;
        let xa = ((1.0 - d) / 3.0) * (1.0 + d / 2.0) / (1.0 - d * d);
        let xb = (1.0 - d) / 3.0 + 2.0 * d * xa;
        let t = pagerank(&graph(&[], &[("a", "b"), ("b", "c")]), d, 1e-14, 10_000).unwrap();
        assert_abs_diff_eq!(t.get("a").unwrap(), xa, epsilon = 1e-12);
        assert_abs_diff_eq!(t.get("b").unwrap(), xb, epsilon = 1e-12);
    }

    #[test]
    fn isolated_nodes_keep_mass_conserved() {
        let g = graph(&["x", "y"], &[("a", "b"), ("b", "c")]);
        let t = pagerank(&g, 0.975, 1e-12, 10_000).unwrap();
        assert_abs_diff_eq!(t.scores().iter().sum::<f64>(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let g = graph(&[], &[("a", "b"), ("b", "c")]);
        match pagerank(&g, 0.85, 1e-15, 2) {
            Err(Error::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(pagerank(&g, 1.0, 1e-10, 10).is_err());
    }
}
