//! In-process map / shuffle / reduce with deterministic grouping.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::PipelineError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PhaseCounts {
    pub inputs: usize,
    pub shuffled: usize,
    pub groups: usize,
    pub outputs: usize,
}

#[derive(Debug, Clone, Default)]
pub struct PhaseOutput<O> {
    pub records: Vec<O>,
    pub counts: PhaseCounts,
    pub elapsed: Duration,
}

/// Runs one phase on the current rayon pool.
///
/// Emitted pairs are stably sorted by key, so values inside a group keep the
/// order in which their inputs appeared. Groups are split into `reducers`
/// contiguous chunks; output is concatenated in key order. The first failing
/// group (in key order) aborts the phase.
pub fn run_phase<I, K, V, O, M, R>(
    inputs: Vec<I>,
    reducers: usize,
    map: M,
    reduce: R,
) -> Result<PhaseOutput<O>, PipelineError>
where
    I: Send,
    K: Ord + Send + Sync + std::fmt::Debug,
    V: Send,
    O: Send,
    M: Fn(I) -> Vec<(K, V)> + Sync + Send,
    R: Fn(&K, Vec<V>) -> Result<Vec<O>, String> + Sync + Send,
{
    let start = Instant::now();
    let n_inputs = inputs.len();
    let mapped: Vec<Vec<(K, V)>> = inputs.into_par_iter().map(&map).collect();
    let mut pairs: Vec<(K, V)> = mapped.into_iter().flatten().collect();
    let shuffled = pairs.len();
    pairs.par_sort_by(|a, b| a.0.cmp(&b.0));

    let mut groups: Vec<(K, Vec<V>)> = Vec::new();
    for (k, v) in pairs {
        match groups.last_mut() {
            Some((last, vs)) if *last == k => vs.push(v),
            _ => groups.push((k, vec![v])),
        }
    }
    let n_groups = groups.len();
    let chunk = n_groups.div_ceil(reducers.max(1)).max(1);

    let mut chunks: Vec<Vec<(K, Vec<V>)>> = Vec::new();
    let mut it = groups.into_iter().peekable();
    while it.peek().is_some() {
        chunks.push(it.by_ref().take(chunk).collect());
    }

    let reduced: Vec<Result<Vec<O>, PipelineError>> = chunks
        .into_par_iter()
        .map(|chunk| {
            let mut out = Vec::new();
            for (k, vs) in chunk {
                match reduce(&k, vs) {
                    Ok(mut o) => out.append(&mut o),
                    Err(message) => {
                        return Err(PipelineError::Reduce {
                            key: format!("{k:?}"),
                            message,
                        })
                    }
                }
            }
            Ok(out)
        })
        .collect();

    let mut records = Vec::new();
    for r in reduced {
        records.append(&mut r?);
    }
    let outputs = records.len();
    Ok(PhaseOutput {
        records,
        counts: PhaseCounts {
            inputs: n_inputs,
            shuffled,
            groups: n_groups,
            outputs,
        },
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(n: usize) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
    }

    #[test]
    fn identity_map_is_worker_independent() {
        let inputs: Vec<(u32, u32)> = (0..500).map(|i| ((i * 7919) % 37, i)).collect();
        let run = |workers: usize, reducers: usize| {
            pool(workers).install(|| {
                run_phase(inputs.clone(), reducers, |r| vec![r], |k, vs| Ok(vec![(*k, vs)]))
                    .unwrap()
                    .records
            })
        };
        let one = run(1, 1);
        assert_eq!(one, run(8, 8));
        assert_eq!(one, run(4, 3));
        assert_eq!(one.len(), 37);
        assert!(one.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn word_count_matches_fold() {
        let text = "a b c a b a d e d a";
        let words: Vec<String> = text.split(' ').map(String::from).collect();
        let out = pool(4)
            .install(|| {
                run_phase(words.clone(), 2, |w| vec![(w, 1u32)], |k, vs| {
                    Ok(vec![(k.clone(), vs.iter().sum::<u32>())])
                })
            })
            .unwrap();
        let mut fold = std::collections::BTreeMap::new();
        for w in words {
            *fold.entry(w).or_insert(0) += 1;
        }
        assert_eq!(out.records, fold.into_iter().collect::<Vec<_>>());
        assert_eq!(out.counts.shuffled, 10);
        assert_eq!(out.counts.groups, 5);
    }

    #[test]
    fn failing_reducer_reports_key() {
        let err = run_phase(vec![1u32, 2, 3], 2, |x| vec![(x, x)], |k, _| {
            if *k == 2 {
                Err("boom".into())
            } else {
                Ok(vec![()])
            }
        })
        .unwrap_err();
        match err {
            PipelineError::Reduce { key, message } => {
                assert_eq!(key, "2");
                assert_eq!(message, "boom");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input() {
        let out = run_phase(Vec::<u8>::new(), 4, |x| vec![(x, x)], |_, v| Ok(v)).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.counts, PhaseCounts::default());
    }
}
