use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::Arc;

use attractor_core::dynamics::{all_stars, compute_step_terms, is_live};
use attractor_core::engine::checkpoint::{read_checkpoint, write_checkpoint};
use attractor_core::engine::phases::{build_stars, compute_partials};
use attractor_core::engine::{IterationTrace, Stage};
use attractor_core::partition::{expected_emissions, star_destinations};
use attractor_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn load(name: &str) -> Graph {
    load_edge_list(BufReader::new(File::open(data(name)).unwrap())).unwrap().0
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Graph {
    let pairs: Vec<_> = (0..m)
        .map(|_| (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32)))
        .collect();
    Graph::from_edges(n, &pairs)
}

fn edge_states(g: &Graph) -> Vec<(EdgeKey, f64)> {
    g.edges().iter().copied().zip(jaccard_init(g)).collect()
}

fn partitioned(p: u32, window: usize) -> RunConfig {
    RunConfig {
        mode: Mode::Partitioned,
        gamma: 0,
        partitions: p,
        window,
        workers: 4,
        reducers: 4,
        ..RunConfig::default()
    }
}

#[test]
fn karate_star_graphs_cover_every_vertex() {
    let g = load("karate.txt");
    let stars = build_stars(edge_states(&g), 3).unwrap().records;
    assert_eq!(stars.len(), 34);
    assert_eq!(stars.iter().map(|s| s.degree()).sum::<usize>(), 156);
    assert!(stars.iter().all(|s| s.neighbors.windows(2).all(|w| w[0].0 < w[1].0)));
}

#[test]
fn example_graph_reduces_in_four_subgraphs() {
    let g = load("example12.txt");
    assert_eq!((g.vertex_count(), g.edge_count()), (12, 16));
    let scheme = PartitionScheme::modulo(4).unwrap();
    let stars = build_stars(edge_states(&g), 2).unwrap().records;
    for s in stars.iter().filter(|s| [0, 4, 8].contains(&s.center)) {
        assert!(star_destinations(s, &scheme).iter().all(|k| k.contains(0)));
    }
    let out = compute_partials(stars, &scheme, &CohesionParams::default(), 2).unwrap();
    assert_eq!(out.counts.groups, 4);
    let mut keys: Vec<SubgraphKey> = out
        .records
        .iter()
        .map(|(_, r)| match r {
            attractor_core::engine::phases::Record::Partial { from, .. } => *from,
            other => panic!("unexpected {other:?}"),
        })
        .collect();
    keys.dedup();
    assert_eq!(
        keys,
        vec![SubgraphKey(0, 1, 2), SubgraphKey(0, 1, 3), SubgraphKey(0, 2, 3), SubgraphKey(1, 2, 3)]
    );
}

#[test]
fn karate_fallback_is_the_windowed_engine() {
    let g = load("karate.txt");
    let config = RunConfig {
        mode: Mode::Partitioned,
        window: 10,
        tau: 0.5,
        ..RunConfig::default()
    };
    let out = run_engine(&g, &config).unwrap();
    assert_eq!(out.mr_iterations, 0);
    let seq = run_sequential(&g, &jaccard_init(&g), &config.params(), &config.policy(), 1000);
    assert_eq!(out.distances, seq.distances);
    assert_eq!(out.iterations, seq.iterations);
}

#[test]
fn deltas_emissions_and_live_set_follow_the_sequential_engine() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for round in 0..6 {
        let g = random_graph(&mut rng, 60 + 20 * round, 300);
        let p = 3 + (round as u32 % 3);
        let config = partitioned(p, 10);
        let scheme = PartitionScheme::modulo(p).unwrap();
        let params = config.params();
        let mut previous_live: Option<Vec<bool>> = None;
        let mut observer = |trace: &IterationTrace| {
            assert_eq!(trace.stage, Stage::Mapreduce);
            let exact = compute_step_terms(&g, trace.before, &params);
            assert_eq!(exact.len(), trace.deltas.len());
            for (&(i, t), &(j, d)) in exact.iter().zip(trace.deltas) {
                assert_eq!(i, j);
                assert!((t.total() - d).abs() < 1e-9);
            }
            assert_eq!(trace.emissions, expected_emissions(&g, trace.before, &scheme));
            let live: Vec<bool> = trace.before.iter().map(|&d| is_live(d)).collect();
            if let Some(prev) = &previous_live {
                assert!(live.iter().zip(prev).all(|(&now, &before)| !now || before));
            }
            previous_live = Some(live);
        };
        let hooks = RunHooks {
            observer: Some(&mut observer),
            checkpoint: None,
        };
        let out = run_from(&g, &config, EngineState::initial(&g, &config.policy()), hooks).unwrap();
        assert!(out.converged);
        let seq = run_sequential(&g, &jaccard_init(&g), &params, &config.policy(), 1000);
        let a = extract_communities(&g, &out.distances).unwrap();
        let b = extract_communities(&g, &seq.distances).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn gamma_zero_matches_sequential_on_larger_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let g = random_graph(&mut rng, 200, 900);
        let config = partitioned(4, 15);
        let out = run_engine(&g, &config).unwrap();
        let seq = run_sequential(&g, &jaccard_init(&g), &config.params(), &config.policy(), 1000);
        assert_eq!(
            extract_communities(&g, &out.distances).unwrap(),
            extract_communities(&g, &seq.distances).unwrap()
        );
    }
}

#[test]
fn resume_from_checkpoint_continues_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_graph(&mut rng, 80, 320);
    let config = partitioned(3, 10);
    let full = run_engine(&g, &config).unwrap();
    assert!(full.iterations > 3);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.ckpt");
    let short = RunConfig {
        max_iters: 3,
        ..config.clone()
    };
    let hooks = RunHooks {
        observer: None,
        checkpoint: Some(path.clone()),
    };
    let partial = run_from(&g, &short, EngineState::initial(&g, &short.policy()), hooks).unwrap();
    assert_eq!(partial.iterations, 3);
    assert!(!partial.converged);

    let state = read_checkpoint(BufReader::new(File::open(&path).unwrap()), &g).unwrap();
    assert_eq!(state.t, 3);
    let resumed = run_from(&g, &config, state, RunHooks::default()).unwrap();
    assert_eq!(resumed.iterations, full.iterations);
    assert_eq!(
        resumed.distances.iter().map(|d| d.to_bits()).collect::<Vec<_>>(),
        full.distances.iter().map(|d| d.to_bits()).collect::<Vec<_>>()
    );

    let mut buf = Vec::new();
    let initial = EngineState::initial(&g, &config.policy());
    write_checkpoint(&mut buf, &g, &initial).unwrap();
    assert_eq!(read_checkpoint(buf.as_slice(), &g).unwrap(), initial);
}

#[test]
fn stars_are_shared_not_copied() {
    let g = load("example12.txt");
    let stars = all_stars(&g, &jaccard_init(&g));
    let shared: Vec<_> = stars.into_iter().map(Arc::new).collect();
    let scheme = PartitionScheme::modulo(4).unwrap();
    let routed: usize = shared.iter().map(|s| star_destinations(s, &scheme).len()).sum();
    let out = compute_partials(shared, &scheme, &CohesionParams::default(), 1).unwrap();
    assert_eq!(out.counts.shuffled, routed);
}
