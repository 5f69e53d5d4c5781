//! Time-windowed co-authorship graphs.
//!
//! A graph for reference year `t` and window length `w` holds every author of
//! a paper published in `[t - w, t - 1]`; each co-authoring pair gets one edge
//! carrying the number of joint papers and the most recent joint year.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::io::{BufRead, Write};

use crate::data_model::{Corpus, Year};
use crate::error::{Error, Result};

/// Sentinel hop distance for unreachable nodes.
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: Year,
    pub end: Year,
}

impl Window {
    pub fn contains(&self, year: Year) -> bool {
        (self.start..=self.end).contains(&year)
    }

    pub fn len(&self) -> i32 {
        self.end - self.start + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeAttr {
    /// Number of co-authored papers in the window.
    pub count: u32,
    /// Year of the most recent co-authored paper.
    pub last_year: Year,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub node: usize,
    pub attr: EdgeAttr,
}

/// Undirected simple graph over author ids. Node indices follow sorted
/// author id order; adjacency lists are sorted by neighbour index.
#[derive(Debug, Clone, PartialEq)]
pub struct CollabGraph {
    authors: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<Neighbor>>,
    window: Window,
    reference_year: Year,
}

impl CollabGraph {
    /// Assembles a graph from explicit parts, checking every invariant.
    /// Edge endpoints are added to the node set automatically.
    pub fn from_parts(
        window: Window,
        reference_year: Year,
        nodes: impl IntoIterator<Item = String>,
        edges: impl IntoIterator<Item = (String, String, EdgeAttr)>,
    ) -> Result<Self> {
        if window.start > window.end {
            return Err(Error::InvalidParameter(format!(
                "window start {} after end {}",
                window.start, window.end
            )));
        }
        let mut node_set: BTreeSet<String> = nodes.into_iter().collect();
        let mut edge_map: BTreeMap<(String, String), EdgeAttr> = BTreeMap::new();
        for (a, b, attr) in edges {
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop on {a}")));
            }
            if attr.count == 0 {
                return Err(Error::InvalidParameter(format!(
                    "edge {a}-{b} has collaboration count 0"
                )));
            }
            if !window.contains(attr.last_year) {
                return Err(Error::InvalidParameter(format!(
                    "edge {a}-{b} last collaboration {} outside window {}..={}",
                    attr.last_year, window.start, window.end
                )));
            }
            let key = if a < b { (a, b) } else { (b, a) };
            if edge_map.contains_key(&key) {
                return Err(Error::InvalidParameter(format!(
                    "parallel edge {}-{}",
                    key.0, key.1
                )));
            }
            node_set.insert(key.0.clone());
            node_set.insert(key.1.clone());
            edge_map.insert(key, attr);
        }
        Ok(Self::assemble(window, reference_year, node_set, edge_map))
    }

    fn assemble(
        window: Window,
        reference_year: Year,
        nodes: BTreeSet<String>,
        edges: BTreeMap<(String, String), EdgeAttr>,
    ) -> Self {
        let authors: Vec<String> = nodes.into_iter().collect();
        let index: HashMap<String, usize> = authors
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let mut adjacency = vec![Vec::new(); authors.len()];
        for ((a, b), attr) in edges {
            let (ia, ib) = (index[&a], index[&b]);
            adjacency[ia].push(Neighbor { node: ib, attr });
            adjacency[ib].push(Neighbor { node: ia, attr });
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|n| n.node);
        }
        CollabGraph {
            authors,
            index,
            adjacency,
            window,
            reference_year,
        }
    }

    pub fn node_count(&self) -> usize {
        self.authors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn reference_year(&self) -> Year {
        self.reference_year
    }

    pub fn authors(&self) -> &[String] {
        &self.authors
    }

    pub fn author(&self, node: usize) -> &str {
        &self.authors[node]
    }

    pub fn node_index(&self, author: &str) -> Option<usize> {
        self.index.get(author).copied()
    }

    pub fn neighbors(&self, node: usize) -> &[Neighbor] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn edge(&self, a: &str, b: &str) -> Option<EdgeAttr> {
        let (ia, ib) = (self.node_index(a)?, self.node_index(b)?);
        self.adjacency[ia]
            .binary_search_by_key(&ib, |n| n.node)
            .ok()
            .map(|pos| self.adjacency[ia][pos].attr)
    }

    /// Edges as `(a, b, attr)` with `a < b`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, EdgeAttr)> + '_ {
        self.adjacency.iter().enumerate().flat_map(move |(i, list)| {
            list.iter()
                .filter(move |n| n.node > i)
                .map(move |n| (self.authors[i].as_str(), self.authors[n.node].as_str(), n.attr))
        })
    }

    /// Unweighted BFS hop counts from `source` into `dist` (resized to N);
    /// unreachable nodes get [`UNREACHABLE`]. `queue` is scratch space.
    pub fn bfs_into(&self, source: usize, dist: &mut Vec<u32>, queue: &mut VecDeque<usize>) {
        dist.clear();
        dist.resize(self.node_count(), UNREACHABLE);
        queue.clear();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for nb in &self.adjacency[u] {
                if dist[nb.node] == UNREACHABLE {
                    dist[nb.node] = next;
                    queue.push_back(nb.node);
                }
            }
        }
    }

    /// Hop distances from `source`; unreachable authors are absent.
    pub fn shortest_paths_from(&self, source: &str) -> Result<BTreeMap<&str, u32>> {
        let src = self
            .node_index(source)
            .ok_or_else(|| Error::UnknownAuthor(source.to_string()))?;
        let mut dist = Vec::new();
        self.bfs_into(src, &mut dist, &mut VecDeque::new());
        Ok(dist
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != UNREACHABLE)
            .map(|(i, &d)| (self.authors[i].as_str(), d))
            .collect())
    }

    /// Number of nodes with each degree.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for list in &self.adjacency {
            *hist.entry(list.len()).or_insert(0) += 1;
        }
        hist
    }

    /// Writes the edge-list snapshot format:
    ///
    /// ```text
    /// #window <start> <end> <reference>
    /// <author_i>,<author_j>,<count>,<last_year>
    /// #node,<isolated author>
    /// ```
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        for a in &self.authors {
            if a.contains([',', '\n', '\r']) || a.starts_with('#') {
                return Err(Error::InvalidParameter(format!(
                    "author id {a:?} cannot be written to an edge list"
                )));
            }
        }
        let io = |e| Error::io("<snapshot>", e);
        writeln!(
            out,
            "#window {} {} {}",
            self.window.start, self.window.end, self.reference_year
        )
        .map_err(io)?;
        for (a, b, attr) in self.edges() {
            writeln!(out, "{a},{b},{},{}", attr.count, attr.last_year).map_err(io)?;
        }
        for (i, a) in self.authors.iter().enumerate() {
            if self.adjacency[i].is_empty() {
                writeln!(out, "#node,{a}").map_err(io)?;
            }
        }
        Ok(())
    }

    pub fn read_snapshot<R: BufRead>(input: R) -> Result<Self> {
        let mut header: Option<(Window, Year)> = None;
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::io("<snapshot>", e))?;
            let bad = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#window") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let nums: Vec<Year> = parts
                    .iter()
                    .map(|p| p.parse::<Year>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| bad(format!("bad window header: {e}")))?;
                if nums.len() != 3 {
                    return Err(bad("window header needs start, end and reference".into()));
                }
                if header.is_some() {
                    return Err(bad("repeated window header".into()));
                }
                header = Some((
                    Window {
                        start: nums[0],
                        end: nums[1],
                    },
                    nums[2],
                ));
            } else if let Some(author) = line.strip_prefix("#node,") {
                nodes.push(author.to_string());
            } else if line.starts_with('#') {
                return Err(bad(format!("unknown directive {line:?}")));
            } else {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != 4 {
                    return Err(bad(format!("expected 4 fields, found {}", fields.len())));
                }
                let count: u32 = fields[2]
                    .parse()
                    .map_err(|e| bad(format!("collaboration count: {e}")))?;
                let last_year: Year = fields[3]
                    .parse()
                    .map_err(|e| bad(format!("last collaboration year: {e}")))?;
                edges.push((
                    fields[0].to_string(),
                    fields[1].to_string(),
                    EdgeAttr { count, last_year },
                    line_no,
                ));
            }
        }
        let (window, reference) = header.ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing #window header".into(),
        })?;
        // Re-validate edge by edge so errors carry a line number.
        for (a, b, attr, line_no) in &edges {
            if attr.count == 0 || !window.contains(attr.last_year) || a == b {
                let err = CollabGraph::from_parts(
                    window,
                    reference,
                    [],
                    [(a.clone(), b.clone(), *attr)],
                )
                .unwrap_err();
                return Err(Error::Parse {
                    line: *line_no,
                    message: err.to_string(),
                });
            }
        }
        CollabGraph::from_parts(
            window,
            reference,
            nodes,
            edges.into_iter().map(|(a, b, attr, _)| (a, b, attr)),
        )
    }
}

/// Builds the co-authorship graph from papers published in
/// `[reference_year - window_len, reference_year - 1]`.
pub fn build_graph(corpus: &Corpus, reference_year: Year, window_len: i32) -> Result<CollabGraph> {
    if window_len < 1 {
        return Err(Error::InvalidParameter(format!(
            "window length must be >= 1, got {window_len}"
        )));
    }
    let window = Window {
        start: reference_year - window_len,
        end: reference_year - 1,
    };
    let mut nodes = BTreeSet::new();
    let mut edges: BTreeMap<(String, String), EdgeAttr> = BTreeMap::new();
    for year in window.start..=window.end {
        for paper in corpus.papers_in_year(year) {
            nodes.extend(paper.authors.iter().cloned());
            for (i, a) in paper.authors.iter().enumerate() {
                for b in &paper.authors[i + 1..] {
                    let key = if a < b {
                        (a.clone(), b.clone())
                    } else {
                        (b.clone(), a.clone())
                    };
                    let attr = edges.entry(key).or_insert(EdgeAttr {
                        count: 0,
                        last_year: year,
                    });
                    attr.count += 1;
                    attr.last_year = attr.last_year.max(year);
                }
            }
        }
    }
    Ok(CollabGraph::assemble(window, reference_year, nodes, edges))
}

/// Least-squares slope of ln(count) against ln(degree) over degrees >= 1.
/// Heavy-tailed degree distributions give a clearly negative slope.
pub fn log_log_degree_slope(hist: &BTreeMap<usize, usize>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = hist
        .iter()
        .filter(|(&d, &c)| d >= 1 && c > 0)
        .map(|(&d, &c)| ((d as f64).ln(), (c as f64).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::PaperRecord;
    use proptest::prelude::*;

    fn paper(id: &str, year: Year, authors: &[&str]) -> PaperRecord {
        PaperRecord {
            paper_id: id.into(),
            year,
            venue: "ICML".into(),
            authors: authors.iter().map(|s| s.to_string()).collect(),
            citations: 0,
            title_len: 1,
            abs_len: 1,
            content_score: None,
        }
    }

    fn graph_of(edges: &[(&str, &str)]) -> CollabGraph {
        CollabGraph::from_parts(
            Window { start: 2000, end: 2000 },
            2001,
            [],
            edges.iter().map(|(a, b)| {
                (a.to_string(), b.to_string(), EdgeAttr { count: 1, last_year: 2000 })
            }),
        )
        .unwrap()
    }

    #[test]
    fn repeat_collaborations_accumulate() {
        let corpus =
            Corpus::from_records([paper("p1", 2014, &["a", "b"]), paper("p2", 2015, &["a", "b"])])
                .unwrap();
        let g = build_graph(&corpus, 2016, 4).unwrap();
        assert_eq!(g.edge("a", "b"), Some(EdgeAttr { count: 2, last_year: 2015 }));
        assert_eq!(g.window(), Window { start: 2012, end: 2015 });
    }

    #[test]
    fn reference_year_papers_excluded() {
        let corpus =
            Corpus::from_records([paper("p1", 2016, &["a", "b"]), paper("p2", 2015, &["c"])])
                .unwrap();
        let g = build_graph(&corpus, 2016, 4).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.authors(), &["c".to_string()]);
    }

    #[test]
    fn clique_expansion() {
        let corpus = Corpus::from_records([paper("p1", 2015, &["a", "b", "c"])]).unwrap();
        let g = build_graph(&corpus, 2016, 1).unwrap();
        assert_eq!(g.edge_count(), 3);
        for (_, _, attr) in g.edges() {
            assert_eq!(attr.count, 1);
        }
        assert!(build_graph(&corpus, 2016, 0).is_err());
    }

    #[test]
    fn same_year_papers_count_separately() {
        let corpus =
            Corpus::from_records([paper("p1", 2015, &["a", "b"]), paper("p2", 2015, &["b", "a"])])
                .unwrap();
        let g = build_graph(&corpus, 2016, 1).unwrap();
        assert_eq!(g.edge("b", "a").unwrap().count, 2);
    }

    #[test]
    fn bfs_examples() {
        let path = graph_of(&[("a", "b"), ("b", "c")]);
        let d = path.shortest_paths_from("a").unwrap();
        assert_eq!(d.into_iter().collect::<Vec<_>>(), vec![("a", 0), ("b", 1), ("c", 2)]);

        let split = graph_of(&[("a", "b"), ("c", "d")]);
        let d = split.shortest_paths_from("a").unwrap();
        assert_eq!(d.len(), 2);
        assert!(!d.contains_key("c"));

        let k4 = graph_of(&[("a", "b"), ("a", "c"), ("a", "d"), ("b", "c"), ("b", "d"), ("c", "d")]);
        let d = k4.shortest_paths_from("c").unwrap();
        assert!(d.iter().all(|(k, &v)| (*k == "c") == (v == 0) && v <= 1));

        assert!(matches!(path.shortest_paths_from("zz"), Err(Error::UnknownAuthor(_))));
    }

    #[test]
    fn snapshot_round_trip_with_isolated_node() {
        let corpus = Corpus::from_records([
            paper("p1", 2013, &["a", "b", "c"]),
            paper("p2", 2015, &["a", "b"]),
            paper("p3", 2014, &["solo"]),
        ])
        .unwrap();
        let g = build_graph(&corpus, 2016, 4).unwrap();
        let mut buf = Vec::new();
        g.write_snapshot(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#window 2012 2015 2016\n"));
        assert!(text.contains("a,b,2,2015\n"));
        assert!(text.contains("#node,solo\n"));
        assert_eq!(CollabGraph::read_snapshot(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn snapshot_rejects_bad_attributes() {
        let zero = "#window 2010 2015 2016\na,b,0,2012\n";
        let err = CollabGraph::read_snapshot(zero.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");

        let outside = "#window 2010 2015 2016\na,b,1,2009\n";
        assert!(CollabGraph::read_snapshot(outside.as_bytes()).is_err());

        let garbage = "#window 2010 2015 2016\na,b,1\n";
        assert!(CollabGraph::read_snapshot(garbage.as_bytes()).is_err());
        assert!(CollabGraph::read_snapshot("a,b,1,2010\n".as_bytes()).is_err());
    }

    #[test]
    fn log_log_slope_of_power_law() {
        let hist: BTreeMap<usize, usize> = (1..=20usize).map(|d| (d, 10_000 / (d * d))).collect();
        let slope = log_log_degree_slope(&hist).unwrap();
        assert!((slope + 2.0).abs() < 0.05, "{slope}");
    }

    fn arb_papers() -> impl Strategy<Value = Vec<(Year, Vec<usize>)>> {
        prop::collection::vec(
            (2000..2010i32, prop::collection::btree_set(0usize..12, 1..5)),
            1..30,
        )
        .prop_map(|v| v.into_iter().map(|(y, s)| (y, s.into_iter().collect())).collect())
    }

    fn corpus_of(rows: &[(Year, Vec<usize>)]) -> Corpus {
        Corpus::from_records(rows.iter().enumerate().map(|(i, (y, authors))| {
            let names: Vec<String> = authors.iter().map(|a| format!("u{a}")).collect();
            PaperRecord {
                paper_id: format!("p{i}"),
                year: *y,
                venue: "ICML".into(),
                authors: names,
                citations: 0,
                title_len: 0,
                abs_len: 0,
                content_score: None,
            }
        }))
        .unwrap()
    }

    proptest! {
        #[test]
        fn widening_window_is_monotone(rows in arb_papers(), w in 1i32..6) {
            let corpus = corpus_of(&rows);
            let narrow = build_graph(&corpus, 2010, w).unwrap();
            let wide = build_graph(&corpus, 2010, w + 1).unwrap();
            for a in narrow.authors() {
                prop_assert!(wide.node_index(a).is_some());
            }
            for (a, b, attr) in narrow.edges() {
                let wider = wide.edge(a, b).unwrap();
                prop_assert!(wider.count >= attr.count);
            }
        }

        #[test]
        fn bfs_triangle_inequality(rows in arb_papers()) {
            let corpus = corpus_of(&rows);
            let g = build_graph(&corpus, 2010, 10).unwrap();
            let n = g.node_count();
            let mut dist = vec![Vec::new(); n];
            let mut q = VecDeque::new();
            for (s, d) in dist.iter_mut().enumerate() {
                g.bfs_into(s, d, &mut q);
                prop_assert_eq!(d[s], 0);
            }
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(dist[i][j], dist[j][i]);
                    for k in 0..n {
                        if dist[i][k] != UNREACHABLE && dist[k][j] != UNREACHABLE {
                            prop_assert!(dist[i][j] <= dist[i][k] + dist[k][j]);
                        }
                    }
                }
            }
        }

        #[test]
        fn snapshot_round_trip(rows in arb_papers(), w in 1i32..10) {
            let g = build_graph(&corpus_of(&rows), 2010, w).unwrap();
            let mut buf = Vec::new();
            g.write_snapshot(&mut buf).unwrap();
            prop_assert_eq!(CollabGraph::read_snapshot(buf.as_slice()).unwrap(), g);
        }
    }
}
