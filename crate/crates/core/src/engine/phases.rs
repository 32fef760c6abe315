//! The three phases of one distributed iteration.

use std::sync::Arc;

use crate::dynamics::{is_live, CohesionParams};
use crate::error::PipelineError;
use crate::graph::{EdgeKey, StarGraph, VertexId};
use crate::partition::{reduce_subgraph, star_destinations, PartitionScheme, SubgraphKey};
use crate::window::{advance_distance, SlidingWindow, WindowPolicy};

use super::mapreduce::{run_phase, PhaseOutput};

/// Value half of a shuffled key-value pair.
#[derive(Debug, Clone)]
pub enum Record {
    Distance(f64),
    Window(SlidingWindow),
    Partial { from: SubgraphKey, value: f64 },
    Star(Arc<StarGraph>),
}

impl Record {
    fn kind(&self) -> &'static str {
        match self {
            Record::Distance(_) => "distance",
            Record::Window(_) => "window",
            Record::Partial { .. } => "partial",
            Record::Star(_) => "star",
        }
    }
}

/// Edge state after an update.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeUpdate {
    pub key: EdgeKey,
    pub delta: f64,
    pub distance: f64,
    pub window: SlidingWindow,
}

/// Star graph per non-isolated vertex, ascending by center.
pub fn build_stars(
    edges: Vec<(EdgeKey, f64)>,
    reducers: usize,
) -> Result<PhaseOutput<Arc<StarGraph>>, PipelineError> {
    run_phase(
        edges,
        reducers,
        |(e, d)| vec![(e.u, (e.v, d)), (e.v, (e.u, d))],
        |&center: &VertexId, mut neighbors: Vec<(VertexId, f64)>| {
            neighbors.sort_by_key(|&(x, _)| x);
            Ok(vec![Arc::new(StarGraph { center, neighbors })])
        },
    )
}

/// Routes every star to its subgraphs and computes scaled partials there.
pub fn compute_partials(
    stars: Vec<Arc<StarGraph>>,
    scheme: &PartitionScheme,
    params: &CohesionParams,
    reducers: usize,
) -> Result<PhaseOutput<(EdgeKey, Record)>, PipelineError> {
    run_phase(
        stars,
        reducers,
        |star| {
            star_destinations(&star, scheme)
                .into_iter()
                .map(|key| (key, Record::Star(star.clone())))
                .collect()
        },
        |key: &SubgraphKey, records: Vec<Record>| {
            let mut stars = Vec::with_capacity(records.len());
            for r in records {
                match r {
                    Record::Star(s) => stars.push(s),
                    other => return Err(format!("unexpected {} record", other.kind())),
                }
            }
            stars.sort_by_key(|s| s.center);
            let partials = reduce_subgraph(key, &stars, scheme, params).map_err(|e| e.to_string())?;
            Ok(partials
                .into_iter()
                .map(|(edge, value)| (edge, Record::Partial { from: *key, value }))
                .collect())
        },
    )
}

/// Sums partials per edge in subgraph-key order and applies the update rule.
/// `states` must hold the distance and window of every live edge only.
pub fn apply_updates(
    partials: Vec<(EdgeKey, Record)>,
    states: Vec<(EdgeKey, f64, SlidingWindow)>,
    policy: &WindowPolicy,
    t: u64,
    reducers: usize,
) -> Result<PhaseOutput<EdgeUpdate>, PipelineError> {
    let mut records = partials;
    records.reserve(2 * states.len());
    for (key, d, w) in states {
        records.push((key, Record::Distance(d)));
        records.push((key, Record::Window(w)));
    }
    run_phase(records, reducers, |r| vec![r], |key: &EdgeKey, values: Vec<Record>| {
        let mut distance = Vec::new();
        let mut window = Vec::new();
        let mut sums: Vec<(SubgraphKey, f64)> = Vec::new();
        for v in values {
            match v {
                Record::Distance(d) => distance.push(d),
                Record::Window(w) => window.push(w),
                Record::Partial { from, value } => sums.push((from, value)),
                Record::Star(_) => return Err("unexpected star record".into()),
            }
        }
        let (d, mut w) = match (distance.as_slice(), window.len()) {
            ([], _) => return Err(PipelineError::MissingDistance { u: key.u, v: key.v }.to_string()),
            ([d], 1) => (*d, window.pop().unwrap()),
            ([_], n) => return Err(format!("expected one window record, got {n}")),
            (many, _) => {
                return Err(PipelineError::DuplicateDistance {
                    u: key.u,
                    v: key.v,
                    count: many.len(),
                }
                .to_string())
            }
        };
        if !is_live(d) {
            return Ok(Vec::new());
        }
        if sums.is_empty() {
            return Err("live edge received no interaction partials".into());
        }
        sums.sort_by_key(|&(from, _)| from);
        let delta: f64 = sums.iter().map(|&(_, s)| s).sum();
        let next = advance_distance(d, delta, &mut w, policy, t);
        Ok(vec![EdgeUpdate {
            key: *key,
            delta,
            distance: next,
            window: w,
        }])
    })
}
