//! Iteration driver: distributed phases while many edges are live, then the
//! single-node engine for the tail.

pub mod checkpoint;
pub mod mapreduce;
pub mod phases;

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::dynamics::{compute_step_terms, is_live, CohesionParams, SimilarityForm};
use crate::error::{ConfigError, PipelineError};
use crate::graph::{jaccard_init, Graph};
use crate::partition::PartitionScheme;
use crate::window::{advance_distance, SlidingWindow, WindowPolicy};

use phases::{build_stars, compute_partials, apply_updates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// No window, single-node engine.
    Sequential,
    /// Sliding window, single-node engine.
    Windowed,
    /// Sliding window, map/reduce phases with fallback below `gamma`.
    Partitioned,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub lambda: f64,
    pub similarity: SimilarityForm,
    pub window: usize,
    pub tau: f64,
    /// Fall back to the single-node engine once fewer than this many edges
    /// are live. 0 never falls back.
    pub gamma: usize,
    pub partitions: u32,
    pub reducers: usize,
    pub workers: usize,
    pub max_iters: u64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        RunConfig {
            mode: Mode::Partitioned,
            lambda: 0.5,
            similarity: SimilarityForm::Closed,
            window: 15,
            tau: 0.5,
            gamma: 10_000,
            partitions: 20,
            reducers: 30.min(workers),
            workers,
            max_iters: 1000,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        CohesionParams::new(self.lambda)?;
        WindowPolicy::new(self.window, self.tau)?;
        if self.partitions < 3 {
            return Err(ConfigError::TooFewPartitions(self.partitions));
        }
        if self.reducers == 0 {
            return Err(ConfigError::Zero("reducer count"));
        }
        if self.workers == 0 {
            return Err(ConfigError::Zero("worker count"));
        }
        Ok(())
    }

    pub fn params(&self) -> CohesionParams {
        CohesionParams {
            lambda: self.lambda,
            similarity: self.similarity,
        }
    }

    pub fn policy(&self) -> WindowPolicy {
        match self.mode {
            Mode::Sequential => WindowPolicy::disabled(),
            _ => WindowPolicy {
                size: self.window,
                tau: self.tau,
            },
        }
    }
}

/// Cross-iteration state owned by the driver.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineState {
    /// Index of the next iteration.
    pub t: u64,
    /// Every edge's distance, converged or not, in edge order.
    pub distances: Vec<f64>,
    pub windows: Vec<SlidingWindow>,
    pub mr_iterations: u64,
    pub fallback_iterations: u64,
}

impl EngineState {
    pub fn initial(g: &Graph, policy: &WindowPolicy) -> Self {
        EngineState {
            t: 0,
            distances: jaccard_init(g),
            windows: vec![SlidingWindow::new(policy.size); g.edge_count()],
            mr_iterations: 0,
            fallback_iterations: 0,
        }
    }

    pub fn live(&self) -> usize {
        self.distances.iter().filter(|&&d| is_live(d)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Mapreduce,
    Fallback,
}

/// What one iteration did, handed to an observer.
#[derive(Debug)]
pub struct IterationTrace<'a> {
    pub t: u64,
    pub stage: Stage,
    /// Distances before the update.
    pub before: &'a [f64],
    /// `(edge index, delta)` of every edge that was live, ascending.
    pub deltas: &'a [(usize, f64)],
    /// Interaction partials emitted (0 on the fallback stage).
    pub emissions: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub star_graphs: Duration,
    pub interactions: Duration,
    pub update: Duration,
    pub fallback: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub distances: Vec<f64>,
    pub iterations: u64,
    pub mr_iterations: u64,
    pub fallback_iterations: u64,
    pub converged: bool,
    /// Partial records per distributed iteration.
    pub emissions: Vec<u64>,
    pub timings: PhaseTimings,
}

#[derive(Default)]
pub struct RunHooks<'a> {
    pub observer: Option<&'a mut (dyn FnMut(&IterationTrace) + Send)>,
    /// Rewritten after every iteration.
    pub checkpoint: Option<PathBuf>,
}

/// Runs from the Jaccard initialisation.
pub fn run_engine(g: &Graph, config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    let state = EngineState::initial(g, &config.policy());
    run_from(g, config, state, RunHooks::default())
}

/// Runs from an explicit state, e.g. one read back from a checkpoint.
pub fn run_from(
    g: &Graph,
    config: &RunConfig,
    mut state: EngineState,
    mut hooks: RunHooks,
) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    let params = config.params();
    let policy = config.policy();
    let scheme = PartitionScheme::modulo(config.partitions)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| PipelineError::Reduce {
            key: "pool".into(),
            message: e.to_string(),
        })?;
    let reducers = config.reducers.min(config.workers).max(1);
    let start = Instant::now();
    let mut timings = PhaseTimings::default();
    let mut emissions = Vec::new();

    pool.install(|| -> Result<(), PipelineError> {
        loop {
            let live = state.live();
            if live == 0 || state.t >= config.max_iters {
                break;
            }
            let distributed = config.mode == Mode::Partitioned && live >= config.gamma;
            let t = state.t;
            let before = state.distances.clone();
            let deltas: Vec<(usize, f64)>;
            let mut emitted = 0;

            if distributed {
                let edges: Vec<_> = g.edges().iter().copied().zip(state.distances.iter().copied()).collect();
                let stars = build_stars(edges, reducers)?;
                timings.star_graphs += stars.elapsed;

                let partials = compute_partials(stars.records, &scheme, &params, reducers)?;
                timings.interactions += partials.elapsed;
                emitted = partials.records.len() as u64;
                emissions.push(emitted);

                let states: Vec<_> = g
                    .edges()
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| is_live(state.distances[i]))
                    .map(|(i, &e)| (e, state.distances[i], state.windows[i].clone()))
                    .collect();
                let updates = apply_updates(partials.records, states, &policy, t, reducers)?;
                timings.update += updates.elapsed;

                if updates.records.len() != live {
                    return Err(PipelineError::Reduce {
                        key: format!("iteration {t}"),
                        message: format!("{} updates for {live} live edges", updates.records.len()),
                    });
                }
                let mut collected = Vec::with_capacity(live);
                for u in updates.records {
                    let i = g.edge_index(u.key.u, u.key.v).ok_or(PipelineError::MissingDistance {
                        u: u.key.u,
                        v: u.key.v,
                    })?;
                    state.distances[i] = u.distance;
                    state.windows[i] = u.window;
                    collected.push((i, u.delta));
                }
                collected.sort_by_key(|&(i, _)| i);
                deltas = collected;
                state.mr_iterations += 1;
            } else {
                let phase = Instant::now();
                let terms = compute_step_terms(g, &state.distances, &params);
                let mut collected = Vec::with_capacity(terms.len());
                for (i, term) in terms {
                    let delta = term.total();
                    state.distances[i] =
                        advance_distance(state.distances[i], delta, &mut state.windows[i], &policy, t);
                    collected.push((i, delta));
                }
                deltas = collected;
                timings.fallback += phase.elapsed();
                state.fallback_iterations += 1;
            }

            state.t += 1;
            if let Some(observer) = hooks.observer.as_mut() {
                observer(&IterationTrace {
                    t,
                    stage: if distributed { Stage::Mapreduce } else { Stage::Fallback },
                    before: &before,
                    deltas: &deltas,
                    emissions: emitted,
                });
            }
            if let Some(path) = &hooks.checkpoint {
                let file = File::create(path).map_err(crate::error::CheckpointError::from)?;
                checkpoint::write_checkpoint(BufWriter::new(file), g, &state)?;
            }
        }
        Ok(())
    })?;

    timings.total = start.elapsed();
    let converged = state.live() == 0;
    Ok(RunOutcome {
        iterations: state.t,
        mr_iterations: state.mr_iterations,
        fallback_iterations: state.fallback_iterations,
        distances: state.distances,
        converged,
        emissions,
        timings,
    })
}
