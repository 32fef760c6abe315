//! Immutable undirected simple graph in CSR form, edge-list ingestion and
//! Jaccard distance initialization.

use std::collections::HashMap;
use std::io::BufRead;

use serde::Serialize;

use crate::error::GraphError;

/// Dense internal vertex id in `[0, n)`.
pub type VertexId = u32;

/// Canonical undirected edge `(u, v)` with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EdgeKey {
    pub u: VertexId,
    pub v: VertexId,
}

impl EdgeKey {
    /// Builds the canonical key for an unordered pair. Panics on a self-loop.
    pub fn new(a: VertexId, b: VertexId) -> Self {
        assert_ne!(a, b, "self-loop has no edge key");
        if a < b {
            EdgeKey { u: a, v: b }
        } else {
            EdgeKey { u: b, v: a }
        }
    }
}

/// A vertex together with its sorted `(neighbor, distance)` list.
#[derive(Debug, Clone, PartialEq)]
pub struct StarGraph {
    pub center: VertexId,
    pub neighbors: Vec<(VertexId, f64)>,
}

impl StarGraph {
    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }

    /// Distance of the edge to `x`, if `x` is a neighbor.
    pub fn distance_to(&self, x: VertexId) -> Option<f64> {
        self.neighbors
            .binary_search_by_key(&x, |&(n, _)| n)
            .ok()
            .map(|i| self.neighbors[i].1)
    }
}

/// Counts of what `load_edge_list` discarded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub lines: usize,
    pub self_loops: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
    // edge index for each adjacency slot, parallel to `targets`
    slot_edges: Vec<u32>,
    edges: Vec<EdgeKey>,
    external: Vec<u64>,
    internal: HashMap<u64, VertexId>,
}

impl Graph {
    /// Builds a graph from pairs of external ids. Self-loops and duplicate
    /// edges (either orientation) are dropped and counted in the report.
    /// External ids are remapped to dense ids in ascending external order.
    pub fn from_external_edges(pairs: &[(u64, u64)]) -> (Graph, LoadReport) {
        let mut report = LoadReport::default();
        let mut ids: Vec<u64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        ids.sort_unstable();
        ids.dedup();
        let internal: HashMap<u64, VertexId> = ids
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, i as VertexId))
            .collect();

        let mut keys = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a == b {
                report.self_loops += 1;
                continue;
            }
            keys.push(EdgeKey::new(internal[&a], internal[&b]));
        }
        keys.sort_unstable();
        let before = keys.len();
        keys.dedup();
        report.duplicates = before - keys.len();

        let graph = Self::assemble(ids, internal, keys);
        (graph, report)
    }

    /// Builds a graph on vertices `0..n` directly from internal ids, keeping
    /// isolated vertices. External ids equal internal ids.
    pub fn from_edges(n: usize, pairs: &[(VertexId, VertexId)]) -> Graph {
        let mut keys: Vec<EdgeKey> = pairs
            .iter()
            .filter(|(a, b)| a != b)
            .map(|&(a, b)| {
                assert!((a as usize) < n && (b as usize) < n, "vertex out of range");
                EdgeKey::new(a, b)
            })
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let ids: Vec<u64> = (0..n as u64).collect();
        let internal = ids.iter().map(|&x| (x, x as VertexId)).collect();
        Self::assemble(ids, internal, keys)
    }

    fn assemble(external: Vec<u64>, internal: HashMap<u64, VertexId>, edges: Vec<EdgeKey>) -> Graph {
        let n = external.len();
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.u as usize] += 1;
            degree[e.v as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0; 2 * edges.len()];
        let mut slot_edges = vec![0; 2 * edges.len()];
        let mut incident: Vec<Vec<(VertexId, u32)>> = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            incident[e.u as usize].push((e.v, idx as u32));
            incident[e.v as usize].push((e.u, idx as u32));
        }
        for (x, list) in incident.iter_mut().enumerate() {
            list.sort_unstable();
            for &(t, idx) in list.iter() {
                targets[cursor[x]] = t;
                slot_edges[cursor[x]] = idx;
                cursor[x] += 1;
            }
        }
        Graph {
            offsets,
            targets,
            slot_edges,
            edges,
            external,
            internal,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.external.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted neighbor list.
    pub fn neighbors(&self, u: VertexId) -> &[VertexId] {
        let u = u as usize;
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    /// Edge indices parallel to `neighbors(u)`.
    pub fn incident_edges(&self, u: VertexId) -> &[u32] {
        let u = u as usize;
        &self.slot_edges[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: VertexId) -> usize {
        let u = u as usize;
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Canonical edges, sorted by `(u, v)`. Edge index `i` refers to `edges()[i]`.
    pub fn edges(&self) -> &[EdgeKey] {
        &self.edges
    }

    /// Index of edge `(a, b)` if present.
    pub fn edge_index(&self, a: VertexId, b: VertexId) -> Option<usize> {
        if a == b {
            return None;
        }
        self.edges.binary_search(&EdgeKey::new(a, b)).ok()
    }

    pub fn external_id(&self, u: VertexId) -> u64 {
        self.external[u as usize]
    }

    pub fn internal_id(&self, external: u64) -> Option<VertexId> {
        self.internal.get(&external).copied()
    }

    pub fn average_degree(&self) -> f64 {
        if self.vertex_count() == 0 {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / self.vertex_count() as f64
    }

    /// Star graph of `u` under the given per-edge distances.
    pub fn star(&self, u: VertexId, distances: &[f64]) -> StarGraph {
        let neighbors = self
            .neighbors(u)
            .iter()
            .zip(self.incident_edges(u))
            .map(|(&x, &e)| (x, distances[e as usize]))
            .collect();
        StarGraph { center: u, neighbors }
    }
}

/// Parses a whitespace-separated edge list. Lines starting with `#` and blank
/// lines are skipped; tokens after the first two on a line are ignored.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<(Graph, LoadReport), GraphError> {
    let mut pairs = Vec::new();
    let mut lines = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines += 1;
        let mut tokens = trimmed.split_whitespace();
        let mut next = || -> Result<u64, GraphError> {
            let token = tokens.next().ok_or_else(|| GraphError::Parse {
                line: line_no,
                message: "expected two vertex ids".into(),
            })?;
            token.parse::<u64>().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("invalid vertex id {token:?}"),
            })
        };
        let a = next()?;
        let b = next()?;
        pairs.push((a, b));
    }
    if pairs.is_empty() {
        return Err(GraphError::Empty);
    }
    let (graph, mut report) = Graph::from_external_edges(&pairs);
    report.lines = lines;
    if graph.edge_count() == 0 {
        return Err(GraphError::Empty);
    }
    Ok((graph, report))
}

/// Jaccard distance over closed neighborhoods (each vertex with its neighbors), one value
/// per edge in `g.edges()` order.
pub fn jaccard_init(g: &Graph) -> Vec<f64> {
    g.edges()
        .iter()
        .map(|e| {
            let common = count_common(g.neighbors(e.u), g.neighbors(e.v));
            // u and v belong to both closed neighborhoods
            let inter = common + 2;
            let union = g.degree(e.u) + 1 + g.degree(e.v) + 1 - inter;
            1.0 - inter as f64 / union as f64
        })
        .collect()
}

fn count_common(a: &[VertexId], b: &[VertexId]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn load(text: &str) -> (Graph, LoadReport) {
        load_edge_list(text.as_bytes()).unwrap()
    }

    #[test]
    fn loads_simple_path() {
        let (g, _) = load("0 1\n1 2\n");
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn drops_duplicates_and_self_loops() {
        let (g, report) = load("0 1\n1 0\n0 0\n");
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(report.self_loops, 1);
        assert_eq!(report.duplicates, 1);
    }

    #[test]
    fn comments_tabs_and_remap() {
        let (g, _) = load("# header\n100\t7\n\n7   42 extra\n");
        assert_eq!(g.vertex_count(), 3);
        // ascending external order: 7 -> 0, 42 -> 1, 100 -> 2
        assert_eq!(g.internal_id(7), Some(0));
        assert_eq!(g.external_id(2), 100);
        assert_eq!(g.neighbors(0), &[1, 2]);
    }

    #[test]
    fn parse_error_reports_line() {
        let err = load_edge_list("0 1\n1 x\n".as_bytes()).unwrap_err();
        match err {
            GraphError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            load_edge_list("3\n".as_bytes()),
            Err(GraphError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(load_edge_list("".as_bytes()), Err(GraphError::Empty)));
        assert!(matches!(load_edge_list("# only\n5 5\n".as_bytes()), Err(GraphError::Empty)));
    }

    #[test]
    fn jaccard_small_cases() {
        let g = Graph::from_edges(2, &[(0, 1)]);
        assert_eq!(jaccard_init(&g), vec![0.0]);
        let k3 = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert!(jaccard_init(&k3).iter().all(|&d| d == 0.0));
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        let d = jaccard_init(&path);
        assert!((d[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn star_and_edge_lookup() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (2, 3)]);
        let dist = vec![0.1, 0.2, 0.3];
        let s = g.star(0, &dist);
        assert_eq!(s.neighbors, vec![(1, 0.1), (2, 0.2)]);
        assert_eq!(g.edge_index(3, 2), Some(2));
        assert_eq!(g.edge_index(1, 3), None);
        assert_eq!(s.distance_to(2), Some(0.2));
    }

    fn random_graph(seed: u64, n: usize, m: usize) -> Graph {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<_> = (0..m)
            .map(|_| (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32)))
            .collect();
        Graph::from_edges(n, &pairs)
    }

    proptest::proptest! {
        #[test]
        fn csr_invariants(seed in 0u64..500, n in 2usize..50, m in 1usize..200) {
            let g = random_graph(seed, n, m);
            let mut deg_sum = 0;
            for u in 0..g.vertex_count() as u32 {
                let nb = g.neighbors(u);
                proptest::prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
                proptest::prop_assert!(!nb.contains(&u));
                for &v in nb {
                    proptest::prop_assert!(g.neighbors(v).contains(&u));
                }
                for (&v, &e) in nb.iter().zip(g.incident_edges(u)) {
                    proptest::prop_assert_eq!(g.edges()[e as usize], EdgeKey::new(u, v));
                }
                deg_sum += g.degree(u);
            }
            proptest::prop_assert_eq!(deg_sum, 2 * g.edge_count());
        }

        #[test]
        fn jaccard_matches_set_oracle(seed in 0u64..500, n in 2usize..50, m in 1usize..200) {
            let g = random_graph(seed, n, m);
            let d = jaccard_init(&g);
            for (i, e) in g.edges().iter().enumerate() {
                let closed = |x: u32| -> BTreeSet<u32> {
                    let mut s: BTreeSet<u32> = g.neighbors(x).iter().copied().collect();
                    s.insert(x);
                    s
                };
                let (a, b) = (closed(e.u), closed(e.v));
                let inter = a.intersection(&b).count() as f64;
                let union = a.union(&b).count() as f64;
                let expected = 1.0 - inter / union;
                proptest::prop_assert!((d[i] - expected).abs() < 1e-15);
                proptest::prop_assert!((0.0..=1.0).contains(&d[i]));
                proptest::prop_assert_eq!(d[i] == 0.0, a == b);
            }
        }
    }
}
