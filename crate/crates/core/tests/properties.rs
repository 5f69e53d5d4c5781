use citecentral::centrality::{
    betweenness_centrality, closeness_centrality, degree_centrality, harmonic_closeness, hctcd, pagerank,
    CentralityTable, HctcdParams,
};
use citecentral::graph::{CollabGraph, EdgeAttr, Window};
use citecentral::predictive::{kfold, split, SplitSpec};
use citecentral::tuning::{argmax, SurfacePoint};
use proptest::prelude::*;

type EdgeSpec = (usize, usize, u32, i32);

fn build(n: usize, edges: &[EdgeSpec], label: impl Fn(usize) -> String) -> CollabGraph {
    let mut seen = std::collections::BTreeSet::new();
    let edges: Vec<(String, String, EdgeAttr)> = edges
        .iter()
        .filter(|&&(a, b, _, _)| a % n != b % n && seen.insert(((a % n).min(b % n), (a % n).max(b % n))))
        .map(|&(a, b, count, last_year)| (label(a % n), label(b % n), EdgeAttr { count, last_year }))
        .collect();
    CollabGraph::from_parts(Window { start: 2012, end: 2019 }, 2020, (0..n).map(&label), edges).unwrap()
}

fn graph_parts() -> impl Strategy<Value = (usize, Vec<EdgeSpec>)> {
    (1usize..12).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n, 1u32..5, 2012i32..2020), 0..30)))
}

fn all_metrics(g: &CollabGraph) -> Vec<CentralityTable> {
    vec![
        degree_centrality(g),
        closeness_centrality(g),
        harmonic_closeness(g),
        betweenness_centrality(g),
        pagerank(g, 0.85, 1e-13, 100_000).unwrap(),
        hctcd(g, HctcdParams::default()).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_are_permutation_equivariant((n, edges) in graph_parts(), shift in 1usize..11) {
        let g = build(n, &edges, |i| format!("a{i:02}"));
        // relabelling reorders the sorted node list, exercising a different
        // internal ordering
        let relabel = |i: usize| format!("b{:02}", (i + shift) % n);
        let h = build(n, &edges, relabel);
        for (tg, th) in all_metrics(&g).iter().zip(all_metrics(&h)) {
            for i in 0..n {
                let a = tg.get(&format!("a{i:02}")).unwrap();
                let b = th.get(&relabel(i)).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{:?}: {a} vs {b}", tg.metric);
            }
        }
    }

    #[test]
    fn scores_are_bounded_and_pagerank_sums_to_one((n, edges) in graph_parts()) {
        let g = build(n, &edges, |i| format!("a{i:02}"));
        let tables = all_metrics(&g);
        for t in &tables {
            prop_assert!(t.scores().iter().all(|s| s.is_finite() && *s >= 0.0));
        }
        for t in &tables[..3] {
            prop_assert!(t.scores().iter().all(|s| *s <= 1.0 + 1e-12));
        }
        let total: f64 = tables[4].scores().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn hctcd_single_edge_monotonicity(count in 1u32..8, age in 1i32..8, alpha in 0.01f64..1.0, beta in 0.01f64..1.0) {
        let score = |count: u32, last_year: i32| {
            let g = build(2, &[(0, 1, count, last_year)], |i| format!("a{i}"));
            hctcd(&g, HctcdParams::new(alpha, beta)).unwrap().get("a0").unwrap()
        };
        let last = 2020 - age;
        prop_assert!(score(count + 1, last) >= score(count, last));
        if last > 2012 {
            // an older collaboration never scores higher when alpha > 0
            prop_assert!(score(count, last - 1) <= score(count, last));
        }
    }

    #[test]
    fn split_is_a_disjoint_exhaustive_partition(n in 10usize..400, frac in 0.01f64..0.9, seed in any::<u64>()) {
        let spec = SplitSpec { test_fraction: frac, seed, k_folds: 5 };
        let (train, test) = split(n, &spec).unwrap();
        prop_assert_eq!(test.len(), spec.test_size(n));
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(split(n, &spec).unwrap(), (train.clone(), test));
        if train.len() >= 5 {
            let folds = kfold(&train, 5, seed).unwrap();
            let mut covered: Vec<usize> = folds.concat();
            covered.sort_unstable();
            prop_assert_eq!(covered, train);
        } else {
            prop_assert!(kfold(&train, 5, seed).is_err());
        }
    }

    #[test]
    fn argmax_matches_exhaustive_rescan(corrs in prop::collection::vec(prop::option::of(-1.0f64..1.0), 1..60)) {
        let surface: Vec<SurfacePoint> = corrs
            .iter()
            .enumerate()
            .map(|(i, &c)| SurfacePoint { values: vec![(i / 7) as f64, (i % 7) as f64], correlation: c.map(|v| (v * 8.0).round() / 8.0) })
            .collect();
        let best = surface.iter().filter_map(|p| p.correlation).fold(f64::NEG_INFINITY, f64::max);
        match argmax(&surface) {
            None => prop_assert!(best == f64::NEG_INFINITY),
            Some((values, corr)) => {
                prop_assert_eq!(corr, best);
                // grid order is lexicographic, so the first maximum is the smallest tuple
                let first = surface.iter().find(|p| p.correlation == Some(best)).unwrap();
                prop_assert_eq!(values, first.values.as_slice());
            }
        }
    }
}
