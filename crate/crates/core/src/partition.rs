//! Hash partitioning into `p` vertex parts, with one overlapping subgraph per
//! triple of parts.
//!
//! An edge whose endpoint parts both belong to `{i, j, k}` is a *main* edge of
//! that subgraph; its interactions are computed there. Because an edge, triangle or
//! wedge lands in several subgraphs, every partial term is scaled by the
//! reciprocal of that multiplicity so the per-edge sums over all subgraphs
//! equal the exact interactions.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::dynamics::{
    ci_term, compute_di, compute_rho, compute_similarity, ei_term, for_each_common, for_each_exclusive,
    is_live, CohesionParams, Neighborhood,
};
use crate::error::{ConfigError, PipelineError};
use crate::graph::{EdgeKey, Graph, StarGraph, VertexId};

type HashFn = dyn Fn(VertexId) -> u32 + Send + Sync;

#[derive(Clone)]
pub struct PartitionScheme {
    p: u32,
    hash: Arc<HashFn>,
}

impl fmt::Debug for PartitionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartitionScheme").field("p", &self.p).finish()
    }
}

impl PartitionScheme {
    /// `P(u) = u mod p`.
    pub fn modulo(p: u32) -> Result<Self, ConfigError> {
        Self::with_hash(p, move |u| u % p)
    }

    /// Custom vertex hash. Values are reduced modulo `p`.
    pub fn with_hash(
        p: u32,
        hash: impl Fn(VertexId) -> u32 + Send + Sync + 'static,
    ) -> Result<Self, ConfigError> {
        if p < 3 {
            return Err(ConfigError::TooFewPartitions(p));
        }
        Ok(PartitionScheme {
            p,
            hash: Arc::new(move |u| hash(u) % p),
        })
    }

    pub fn parts(&self) -> u32 {
        self.p
    }

    pub fn part(&self, u: VertexId) -> u32 {
        (self.hash)(u)
    }

    /// Number of subgraphs an edge (or triangle/wedge) spanning `distinct`
    /// parts appears in.
    pub fn multiplicity(&self, distinct: usize) -> u64 {
        let p = self.p as u64;
        match distinct {
            1 => (p - 1) * (p - 2) / 2,
            2 => p - 2,
            3 => 1,
            _ => unreachable!("a subgraph spans at most three parts"),
        }
    }

    fn scale(&self, distinct: usize) -> f64 {
        let p = self.p as f64;
        match distinct {
            1 => 2.0 / ((p - 1.0) * (p - 2.0)),
            2 => 1.0 / (p - 2.0),
            _ => 1.0,
        }
    }

    pub fn edge_class(&self, u: VertexId, v: VertexId) -> EdgeClass {
        if self.part(u) == self.part(v) {
            EdgeClass::Inner
        } else {
            EdgeClass::Outer
        }
    }

    /// Every subgraph key containing edge `(u, v)`, ascending.
    pub fn find_subgraphs(&self, u: VertexId, v: VertexId) -> Vec<SubgraphKey> {
        subgraphs_for_parts(self.p, self.part(u), self.part(v))
    }

    pub fn scale_edge(&self, u: VertexId, v: VertexId) -> f64 {
        self.scale(distinct_parts(&[self.part(u), self.part(v)]))
    }

    pub fn scale_triangle(&self, u: VertexId, v: VertexId, c: VertexId) -> f64 {
        self.scale(distinct_parts(&[self.part(u), self.part(v), self.part(c)]))
    }

    /// Scale of the open path u - v - x: same three-case rule as triangles.
    pub fn scale_wedge(&self, u: VertexId, v: VertexId, x: VertexId) -> f64 {
        self.scale_triangle(u, v, x)
    }
}

/// Keys of subgraphs that contain parts `a` and `b` (which may be equal).
pub fn subgraphs_for_parts(p: u32, a: u32, b: u32) -> Vec<SubgraphKey> {
    let mut out = Vec::new();
    if a == b {
        for x in 0..p {
            if x == a {
                continue;
            }
            for y in (x + 1)..p {
                if y != a {
                    out.push(SubgraphKey::sorted(x, y, a));
                }
            }
        }
    } else {
        for x in 0..p {
            if x != a && x != b {
                out.push(SubgraphKey::sorted(x, a, b));
            }
        }
    }
    out.sort_unstable();
    out
}

fn distinct_parts(parts: &[u32]) -> usize {
    let mut v = parts.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeClass {
    Inner,
    Outer,
}

/// Whether an edge's interactions are computed in a given subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRole {
    Main,
    Rear,
}

/// Sorted part triple `i < j < k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SubgraphKey(pub u32, pub u32, pub u32);

impl SubgraphKey {
    pub fn sorted(a: u32, b: u32, c: u32) -> Self {
        let mut t = [a, b, c];
        t.sort_unstable();
        assert!(t[0] < t[1] && t[1] < t[2], "subgraph parts must be distinct");
        SubgraphKey(t[0], t[1], t[2])
    }

    pub fn contains(&self, part: u32) -> bool {
        self.0 == part || self.1 == part || self.2 == part
    }

    pub fn role(&self, scheme: &PartitionScheme, u: VertexId, v: VertexId) -> EdgeRole {
        if self.contains(scheme.part(u)) && self.contains(scheme.part(v)) {
            EdgeRole::Main
        } else {
            EdgeRole::Rear
        }
    }

    /// All `C(p, 3)` keys, ascending.
    pub fn all(p: u32) -> Vec<SubgraphKey> {
        let mut out = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                for k in (j + 1)..p {
                    out.push(SubgraphKey(i, j, k));
                }
            }
        }
        out
    }
}

impl fmt::Display for SubgraphKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0, self.1, self.2)
    }
}

/// Keys a star must be shipped to: the union over its incident edges.
pub fn star_destinations(star: &StarGraph, scheme: &PartitionScheme) -> Vec<SubgraphKey> {
    let own = scheme.part(star.center);
    let mut parts: Vec<u32> = star.neighbors.iter().map(|&(x, _)| scheme.part(x)).collect();
    parts.sort_unstable();
    parts.dedup();
    let mut keys: Vec<SubgraphKey> = parts
        .into_iter()
        .flat_map(|q| subgraphs_for_parts(scheme.parts(), own, q))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

/// Main edges of the subgraph, ascending, with their distances.
pub fn main_edges(key: &SubgraphKey, stars: &[Arc<StarGraph>], scheme: &PartitionScheme) -> Vec<(EdgeKey, f64)> {
    let mut out = Vec::new();
    for star in stars {
        let u = star.center;
        if !key.contains(scheme.part(u)) {
            continue;
        }
        for &(v, d) in &star.neighbors {
            if v > u && key.contains(scheme.part(v)) {
                out.push((EdgeKey { u, v }, d));
            }
        }
    }
    out.sort_unstable_by_key(|&(e, _)| e);
    out
}

/// Scaled interaction partials partial of every live main edge of one subgraph.
/// `stars` must be sorted by center.
pub fn reduce_subgraph(
    key: &SubgraphKey,
    stars: &[Arc<StarGraph>],
    scheme: &PartitionScheme,
    params: &CohesionParams,
) -> Result<Vec<(EdgeKey, f64)>, PipelineError> {
    let lookup = |x: VertexId| -> Result<&Neighborhood, PipelineError> {
        stars
            .binary_search_by_key(&x, |s| s.center)
            .map(|i| stars[i].neighbors.as_slice())
            .map_err(|_| PipelineError::MissingStar {
                key: key.to_string(),
                vertex: x,
            })
    };
    let in_key = |x: VertexId| key.contains(scheme.part(x));

    let mut out = Vec::new();
    for (edge, d_uv) in main_edges(key, stars, scheme) {
        if !is_live(d_uv) {
            continue;
        }
        let EdgeKey { u, v } = edge;
        let gu = lookup(u)?;
        let gv = lookup(v)?;
        let (deg_u, deg_v) = (gu.len(), gv.len());

        let mut partial = compute_di(d_uv, deg_u, deg_v) * scheme.scale_edge(u, v);

        for_each_common(gu, gv, |c, d_uc, d_vc| {
            if in_key(c) {
                partial += ci_term(d_uc, d_vc, deg_u, deg_v) * scheme.scale_triangle(u, v, c);
            }
        });

        let mut failure = None;
        for_each_exclusive(gv, gu, u, |x, d_vx| {
            if failure.is_some() || !in_key(x) {
                return;
            }
            match lookup(x) {
                Ok(gx) => {
                    let rho = compute_rho(compute_similarity(gx, gu, params.similarity), params.lambda);
                    partial += ei_term(rho, d_vx, deg_v) * scheme.scale_wedge(u, v, x);
                }
                Err(e) => failure = Some(e),
            }
        });
        for_each_exclusive(gu, gv, v, |y, d_uy| {
            if failure.is_some() || !in_key(y) {
                return;
            }
            match lookup(y) {
                Ok(gy) => {
                    let rho = compute_rho(compute_similarity(gy, gv, params.similarity), params.lambda);
                    partial += ei_term(rho, d_uy, deg_u) * scheme.scale_wedge(v, u, y);
                }
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        out.push((edge, partial));
    }
    Ok(out)
}

/// Exact number of partial records one iteration emits: each live edge once per
/// subgraph containing it.
pub fn expected_emissions(g: &Graph, distances: &[f64], scheme: &PartitionScheme) -> u64 {
    g.edges()
        .iter()
        .zip(distances)
        .filter(|(_, &d)| is_live(d))
        .map(|(e, _)| match scheme.edge_class(e.u, e.v) {
            EdgeClass::Inner => scheme.multiplicity(1),
            EdgeClass::Outer => scheme.multiplicity(2),
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubgraphStats {
    pub key: SubgraphKey,
    pub vertices: usize,
    pub main_edges: usize,
    pub rear_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionStats {
    pub partitions: u32,
    pub subgraphs: Vec<SubgraphStats>,
    pub inner_edges: usize,
    pub outer_edges: usize,
    /// Main edges summed over all subgraphs; equals the per-iteration partial
    /// record count when every edge is live.
    pub total_emissions: u64,
    /// (p-1)(p-2)/2 per inner edge plus (p-2) per outer edge.
    pub expected_emissions: u64,
    /// m·p, the order of the emission count.
    pub mp_bound: u64,
}

/// Per-subgraph composition of `g` under `scheme`. Subgraphs with no routed
/// vertex are omitted.
pub fn partition_stats(g: &Graph, scheme: &PartitionScheme) -> PartitionStats {
    let p = scheme.parts();
    let mut inner = 0;
    let mut outer = 0;
    let mut expected = 0;
    for e in g.edges() {
        match scheme.edge_class(e.u, e.v) {
            EdgeClass::Inner => {
                inner += 1;
                expected += scheme.multiplicity(1);
            }
            EdgeClass::Outer => {
                outer += 1;
                expected += scheme.multiplicity(2);
            }
        }
    }
    let mut subgraphs = Vec::new();
    let mut total = 0u64;
    for key in SubgraphKey::all(p) {
        let mut vertices = std::collections::BTreeSet::new();
        let mut main = 0;
        let mut rear = 0;
        for e in g.edges() {
            let (pu, pv) = (scheme.part(e.u), scheme.part(e.v));
            let touches_u = key.contains(pu);
            let touches_v = key.contains(pv);
            if touches_u && touches_v {
                main += 1;
            } else if touches_u || touches_v {
                // carried along inside a routed star
                rear += 1;
            } else {
                continue;
            }
            if touches_u {
                vertices.insert(e.u);
            }
            if touches_v {
                vertices.insert(e.v);
            }
        }
        if vertices.is_empty() {
            continue;
        }
        total += main as u64;
        subgraphs.push(SubgraphStats {
            key,
            vertices: vertices.len(),
            main_edges: main,
            rear_edges: rear,
        });
    }
    PartitionStats {
        partitions: p,
        subgraphs,
        inner_edges: inner,
        outer_edges: outer,
        total_emissions: total,
        expected_emissions: expected,
        mp_bound: g.edge_count() as u64 * p as u64,
    }
}
