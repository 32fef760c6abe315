//! Communities as connected components of the zero-distance subgraph.

use std::collections::VecDeque;
use std::io::{self, Write};

use crate::error::ExtractError;
use crate::graph::{Graph, VertexId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityPartition {
    /// Community id of each vertex.
    pub assignment: Vec<usize>,
    /// Members of each community, ascending.
    pub communities: Vec<Vec<VertexId>>,
}

impl CommunityPartition {
    pub fn from_assignment(assignment: &[usize]) -> Self {
        // relabel by ascending minimum member
        let mut remap = std::collections::HashMap::new();
        let mut dense = Vec::with_capacity(assignment.len());
        for &a in assignment {
            let next = remap.len();
            dense.push(*remap.entry(a).or_insert(next));
        }
        let mut communities = vec![Vec::new(); remap.len()];
        for (v, &c) in dense.iter().enumerate() {
            communities[c].push(v as VertexId);
        }
        CommunityPartition {
            assignment: dense,
            communities,
        }
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    /// One line per community, external ids separated by spaces.
    pub fn write_communities<W: Write>(&self, g: &Graph, mut out: W) -> io::Result<()> {
        for members in &self.communities {
            let line: Vec<String> = members.iter().map(|&v| g.external_id(v).to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        out.flush()
    }

    /// `vertex community` per line, ascending by external id.
    pub fn write_assignment<W: Write>(&self, g: &Graph, mut out: W) -> io::Result<()> {
        for (v, c) in self.assignment.iter().enumerate() {
            writeln!(out, "{} {}", g.external_id(v as VertexId), c)?;
        }
        out.flush()
    }
}

/// Requires every distance to be exactly 0 or 1.
pub fn extract_communities(g: &Graph, distances: &[f64]) -> Result<CommunityPartition, ExtractError> {
    if distances.len() != g.edge_count() {
        return Err(ExtractError::Length {
            expected: g.edge_count(),
            got: distances.len(),
        });
    }
    if let Some((i, &d)) = distances.iter().enumerate().find(|(_, &d)| d != 0.0 && d != 1.0) {
        let e = g.edges()[i];
        return Err(ExtractError::NotConverged {
            u: e.u,
            v: e.v,
            distance: d,
        });
    }

    let n = g.vertex_count();
    let mut assignment = vec![usize::MAX; n];
    let mut communities = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if assignment[start] != usize::MAX {
            continue;
        }
        let id = communities.len();
        let mut members = vec![start as VertexId];
        assignment[start] = id;
        queue.push_back(start as VertexId);
        while let Some(u) = queue.pop_front() {
            for (&x, &e) in g.neighbors(u).iter().zip(g.incident_edges(u)) {
                if distances[e as usize] == 0.0 && assignment[x as usize] == usize::MAX {
                    assignment[x as usize] = id;
                    members.push(x);
                    queue.push_back(x);
                }
            }
        }
        members.sort_unstable();
        communities.push(members);
    }
    Ok(CommunityPartition {
        assignment,
        communities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn graph() -> Graph {
        Graph::from_edges(6, &[(0, 1), (1, 2), (3, 4), (2, 3)])
    }

    #[test]
    fn all_zero_gives_components() {
        let p = extract_communities(&graph(), &[0.0; 4]).unwrap();
        assert_eq!(p.communities, vec![vec![0, 1, 2, 3, 4], vec![5]]);
    }

    #[test]
    fn all_one_gives_singletons() {
        let p = extract_communities(&graph(), &[1.0; 4]).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p.assignment, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn rejects_live_distance() {
        let err = extract_communities(&graph(), &[0.0, 0.5, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, ExtractError::NotConverged { distance, .. } if distance == 0.5));
    }

    #[test]
    fn writes_external_ids() {
        let (g, _) = Graph::from_external_edges(&[(10, 20), (20, 30), (40, 50)]);
        let p = extract_communities(&g, &[0.0, 0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        p.write_communities(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "10 20 30\n40\n50\n");
        let mut buf = Vec::new();
        p.write_assignment(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "10 0\n20 0\n30 0\n40 1\n50 2\n");
    }

    #[test]
    fn relabels_by_first_member() {
        let p = CommunityPartition::from_assignment(&[7, 7, 3, 9, 3]);
        assert_eq!(p.assignment, vec![0, 0, 1, 2, 1]);
        assert_eq!(p.communities, vec![vec![0, 1], vec![2, 4], vec![3]]);
    }

    proptest! {
        #[test]
        fn is_partition_consistent_with_zero_edges(
            n in 1usize..30,
            raw in proptest::collection::vec((0u32..30, 0u32..30, any::<bool>()), 0..80),
        ) {
            let pairs: Vec<_> = raw.iter().map(|&(a, b, _)| (a % n as u32, b % n as u32)).collect();
            let g = Graph::from_edges(n, &pairs);
            let d: Vec<f64> = (0..g.edge_count()).map(|i| if raw[i % raw.len().max(1)].2 { 0.0 } else { 1.0 }).collect();
            let p = extract_communities(&g, &d).unwrap();
            let mut seen = BTreeSet::new();
            for (c, members) in p.communities.iter().enumerate() {
                for &v in members {
                    prop_assert!(seen.insert(v));
                    prop_assert_eq!(p.assignment[v as usize], c);
                }
            }
            prop_assert_eq!(seen.len(), n);
            for (i, e) in g.edges().iter().enumerate() {
                if d[i] == 0.0 {
                    prop_assert_eq!(p.assignment[e.u as usize], p.assignment[e.v as usize]);
                }
            }
            for u in 0..n as u32 {
                let zero_incident = g.incident_edges(u).iter().any(|&e| d[e as usize] == 0.0);
                if !zero_incident {
                    prop_assert_eq!(p.communities[p.assignment[u as usize]].len(), 1);
                }
            }
            // ids ascend with minimum member
            let mins: Vec<u32> = p.communities.iter().map(|m| m[0]).collect();
            prop_assert!(mins.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
