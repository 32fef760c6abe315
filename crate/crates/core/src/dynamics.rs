//! Exact, unpartitioned distance dynamics: direct, common and exclusive
//! interactions, and the synchronous distance update.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::ConfigError;
use crate::graph::{EdgeKey, Graph, StarGraph, VertexId};
use crate::window::{advance_distance, SlidingWindow, WindowPolicy};

/// Neighbor list of a star, sorted by neighbor id.
pub type Neighborhood = [(VertexId, f64)];

/// Which neighborhoods the denominator of the exclusive-neighbor similarity
/// sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityForm {
    /// Closed neighborhoods: each endpoint also contributes its own weight
    /// `1 - d(x, x) = 1`, matching the closed neighborhoods of the Jaccard
    /// initialization.
    Closed,
    /// Open neighborhoods only.
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CohesionParams {
    pub lambda: f64,
    pub similarity: SimilarityForm,
}

impl CohesionParams {
    pub fn new(lambda: f64) -> Result<Self, ConfigError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(ConfigError::Lambda(lambda));
        }
        Ok(CohesionParams {
            lambda,
            similarity: SimilarityForm::Closed,
        })
    }

    pub fn with_similarity(mut self, form: SimilarityForm) -> Self {
        self.similarity = form;
        self
    }
}

impl Default for CohesionParams {
    fn default() -> Self {
        CohesionParams {
            lambda: 0.5,
            similarity: SimilarityForm::Closed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct InteractionTerms {
    pub di: f64,
    pub ci: f64,
    pub ei: f64,
}

impl InteractionTerms {
    pub fn total(&self) -> f64 {
        self.di + self.ci + self.ei
    }
}

pub fn compute_di(d: f64, deg_u: usize, deg_v: usize) -> f64 {
    let s = (1.0 - d).sin();
    s / deg_u as f64 + s / deg_v as f64
}

/// Contribution of one common neighbor `c`.
pub fn ci_term(d_uc: f64, d_vc: f64, deg_u: usize, deg_v: usize) -> f64 {
    let (w_u, w_v) = (1.0 - d_uc, 1.0 - d_vc);
    w_v * w_u.sin() / deg_u as f64 + w_u * w_v.sin() / deg_v as f64
}

pub fn compute_rho(theta: f64, lambda: f64) -> f64 {
    if theta >= lambda {
        theta
    } else {
        theta - lambda
    }
}

/// Contribution of exclusive neighbor `x` of `v` on edge `(u, v)`.
pub fn ei_term(rho: f64, d_vx: f64, deg_v: usize) -> f64 {
    rho * (1.0 - d_vx).sin() / deg_v as f64
}

/// Sum of `1 - d` over a neighborhood.
pub fn strength(star: &Neighborhood) -> f64 {
    star.iter().map(|&(_, d)| 1.0 - d).sum()
}

/// Similarity of two unlinked vertices from their stars.
pub fn compute_similarity(gx: &Neighborhood, gu: &Neighborhood, form: SimilarityForm) -> f64 {
    let mut numerator = 0.0;
    for_each_common(gx, gu, |_, d_xc, d_uc| numerator += (1.0 - d_xc) + (1.0 - d_uc));
    let mut denominator = strength(gx) + strength(gu);
    if form == SimilarityForm::Closed {
        denominator += 2.0;
    }
    if denominator == 0.0 {
        0.0
    } else {
        numerator / denominator
    }
}

/// Calls `f(c, d(a, c), d(b, c))` for every common neighbor, ascending.
pub fn for_each_common(a: &Neighborhood, b: &Neighborhood, mut f: impl FnMut(VertexId, f64, f64)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (x, dx) = a[i];
        let (y, dy) = b[j];
        match x.cmp(&y) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(x, dx, dy);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Calls `f(x, d(center, x))` for each neighbor of `own` that is neither
/// `other_center` nor a neighbor of `other`, ascending.
pub fn for_each_exclusive(
    own: &Neighborhood,
    other: &Neighborhood,
    other_center: VertexId,
    mut f: impl FnMut(VertexId, f64),
) {
    let mut j = 0;
    for &(x, d) in own {
        if x == other_center {
            continue;
        }
        while j < other.len() && other[j].0 < x {
            j += 1;
        }
        if j < other.len() && other[j].0 == x {
            continue;
        }
        f(x, d);
    }
}

pub fn compute_ci(gu: &Neighborhood, gv: &Neighborhood) -> f64 {
    let (deg_u, deg_v) = (gu.len(), gv.len());
    let mut ci = 0.0;
    for_each_common(gu, gv, |_, d_uc, d_vc| ci += ci_term(d_uc, d_vc, deg_u, deg_v));
    ci
}

/// Exclusive interaction of edge `(u, v)`. `star` resolves the neighborhood
/// of any exclusive neighbor.
pub fn compute_ei<'a>(
    u: VertexId,
    v: VertexId,
    gu: &'a Neighborhood,
    gv: &'a Neighborhood,
    star: impl Fn(VertexId) -> &'a Neighborhood,
    params: &CohesionParams,
) -> f64 {
    let mut ei = 0.0;
    for_each_exclusive(gv, gu, u, |x, d_vx| {
        let rho = compute_rho(compute_similarity(star(x), gu, params.similarity), params.lambda);
        ei += ei_term(rho, d_vx, gv.len());
    });
    for_each_exclusive(gu, gv, v, |y, d_uy| {
        let rho = compute_rho(compute_similarity(star(y), gv, params.similarity), params.lambda);
        ei += ei_term(rho, d_uy, gu.len());
    });
    ei
}

pub fn interaction_terms<'a>(
    u: VertexId,
    v: VertexId,
    d_uv: f64,
    gu: &'a Neighborhood,
    gv: &'a Neighborhood,
    star: impl Fn(VertexId) -> &'a Neighborhood,
    params: &CohesionParams,
) -> InteractionTerms {
    InteractionTerms {
        di: compute_di(d_uv, gu.len(), gv.len()),
        ci: compute_ci(gu, gv),
        ei: compute_ei(u, v, gu, gv, star, params),
    }
}

pub fn is_live(d: f64) -> bool {
    d > 0.0 && d < 1.0
}

/// All star graphs under `distances`, indexed by vertex id.
pub fn all_stars(g: &Graph, distances: &[f64]) -> Vec<StarGraph> {
    (0..g.vertex_count() as VertexId).map(|u| g.star(u, distances)).collect()
}

/// Interaction terms of every live edge, computed from the `distances`
/// snapshot. Returned in ascending edge-index order.
pub fn compute_step_terms(
    g: &Graph,
    distances: &[f64],
    params: &CohesionParams,
) -> Vec<(usize, InteractionTerms)> {
    let stars = all_stars(g, distances);
    let live: Vec<usize> = (0..g.edge_count()).filter(|&i| is_live(distances[i])).collect();
    live.into_par_iter()
        .map(|i| {
            let EdgeKey { u, v } = g.edges()[i];
            let terms = interaction_terms(
                u,
                v,
                distances[i],
                &stars[u as usize].neighbors,
                &stars[v as usize].neighbors,
                |x| &stars[x as usize].neighbors,
                params,
            );
            (i, terms)
        })
        .collect()
}

/// One synchronous step without a window: returns the per-edge terms of live
/// edges and the new distance vector.
pub fn sequential_step(
    g: &Graph,
    distances: &[f64],
    params: &CohesionParams,
) -> (Vec<(usize, InteractionTerms)>, Vec<f64>) {
    let terms = compute_step_terms(g, distances, params);
    let mut next = distances.to_vec();
    for &(i, t) in &terms {
        let delta = t.total();
        if delta != 0.0 {
            next[i] = (distances[i] - delta).clamp(0.0, 1.0);
        }
    }
    (terms, next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IterationStats {
    pub t: u64,
    pub live_before: usize,
    pub live_after: usize,
}

/// Applies one windowed iteration `t` in place. Only live edges move.
pub fn sequential_iteration(
    g: &Graph,
    distances: &mut [f64],
    windows: &mut [SlidingWindow],
    params: &CohesionParams,
    policy: &WindowPolicy,
    t: u64,
) -> IterationStats {
    let terms = compute_step_terms(g, distances, params);
    let live_before = terms.len();
    for (i, term) in terms {
        distances[i] = advance_distance(distances[i], term.total(), &mut windows[i], policy, t);
    }
    let live_after = distances.iter().filter(|&&d| is_live(d)).count();
    IterationStats {
        t,
        live_before,
        live_after,
    }
}

#[derive(Debug, Clone)]
pub struct SequentialRun {
    pub distances: Vec<f64>,
    pub iterations: u64,
    pub converged: bool,
    pub stats: Vec<IterationStats>,
}

/// Iterates from `initial` until every distance is 0 or 1, or `max_iters`
/// iterations have run.
pub fn run_sequential(
    g: &Graph,
    initial: &[f64],
    params: &CohesionParams,
    policy: &WindowPolicy,
    max_iters: u64,
) -> SequentialRun {
    let mut distances = initial.to_vec();
    let mut windows = vec![SlidingWindow::new(policy.size); g.edge_count()];
    let mut stats = Vec::new();
    let mut t = 0;
    while t < max_iters && distances.iter().any(|&d| is_live(d)) {
        stats.push(sequential_iteration(g, &mut distances, &mut windows, params, policy, t));
        t += 1;
    }
    let converged = !distances.iter().any(|&d| is_live(d));
    SequentialRun {
        distances,
        iterations: t,
        converged,
        stats,
    }
}
