//! Brandes accumulation for unweighted undirected graphs.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::{CentralityTable, Metric};
use crate::graph::{CollabGraph, UNREACHABLE};

/// Sources handled sequentially by one task. Partial sums are combined in
/// block order, which keeps the floating-point result independent of the
/// thread count.
const SOURCE_BLOCK: usize = 64;

struct Scratch {
    dist: Vec<u32>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            dist: vec![UNREACHABLE; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            order: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
        }
    }
}

fn accumulate_from(graph: &CollabGraph, s: usize, sc: &mut Scratch, out: &mut [f64]) {
    sc.dist.fill(UNREACHABLE);
    sc.sigma.fill(0.0);
    sc.delta.fill(0.0);
    sc.order.clear();
    sc.queue.clear();

    sc.dist[s] = 0;
    sc.sigma[s] = 1.0;
    sc.queue.push_back(s);
    while let Some(v) = sc.queue.pop_front() {
        sc.order.push(v);
        let next = sc.dist[v] + 1;
        for nb in graph.neighbors(v) {
            let w = nb.node;
            if sc.dist[w] == UNREACHABLE {
                sc.dist[w] = next;
                sc.queue.push_back(w);
            }
            if sc.dist[w] == next {
                sc.sigma[w] += sc.sigma[v];
            }
        }
    }

    for &w in sc.order.iter().rev() {
        let dw = sc.dist[w];
        let coeff = (1.0 + sc.delta[w]) / sc.sigma[w];
        for nb in graph.neighbors(w) {
            let v = nb.node;
            if dw > 0 && sc.dist[v] == dw - 1 {
                sc.delta[v] += sc.sigma[v] * coeff;
            }
        }
        if w != s {
            out[w] += sc.delta[w];
        }
    }
}

/// Unnormalised betweenness: each unordered pair `{s, t}` with `s != i != t`
/// contributes the share of its shortest paths that pass through `i`.
pub fn betweenness_centrality(graph: &CollabGraph) -> CentralityTable {
    let n = graph.node_count();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_BLOCK)
        .map(|block| {
            let mut sc = Scratch::new(n);
            let mut acc = vec![0.0; n];
            for &s in block {
                accumulate_from(graph, s, &mut sc, &mut acc);
            }
            acc
        })
        .collect();

    let mut scores = vec![0.0; n];
    for partial in &partials {
        for (total, p) in scores.iter_mut().zip(partial) {
            *total += p;
        }
    }
    // every unordered pair was visited from both endpoints
    scores.iter_mut().for_each(|s| *s /= 2.0);
    CentralityTable::from_graph(graph, Metric::Betweenness, scores)
}
