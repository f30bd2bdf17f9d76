//! Precision check for summaries: does every instance of every summary
//! path exist in the original graph?
//!
//! An instance picks one member per path position independently, so all
//! instances of a path are realized exactly when each of its edges is
//! realized by every (source member, target member) pair. The checker
//! precomputes that per summary edge and then enumerates paths.

use std::collections::{HashMap, HashSet};

use super::{PartitionId, SummaryError, SummaryGraph, SummaryMapping};
use crate::graph::{RelationId, TripleGraph};

pub const MAX_SUMMARY_PATHS: u64 = 1_000_000;

/// A walk in the summary graph: `nodes.len() == predicates.len() + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SummaryPath {
    pub nodes: Vec<PartitionId>,
    pub predicates: Vec<RelationId>,
}

/// Returns every summary path of length `1..=max_path_len` that has at
/// least one instance missing from `g`, in depth-first order.
pub fn check_precise(
    summary: &SummaryGraph,
    mapping: &SummaryMapping,
    g: &TripleGraph,
    max_path_len: usize,
) -> Result<Vec<SummaryPath>, SummaryError> {
    if mapping.num_nodes() != g.num_nodes() {
        return Err(SummaryError::MappingMismatch {
            mapping: mapping.num_nodes(),
            graph: g.num_nodes(),
        });
    }
    let sg = &summary.graph;
    let mut adj: Vec<Vec<(RelationId, PartitionId, bool)>> = vec![Vec::new(); sg.num_nodes()];

    let mut realized: HashMap<(PartitionId, RelationId, PartitionId), HashSet<(usize, usize)>> =
        HashMap::new();
    for e in g.edges() {
        let key = (
            mapping.partition_of(e.source),
            e.predicate,
            mapping.partition_of(e.target),
        );
        realized
            .entry(key)
            .or_default()
            .insert((e.source, e.target));
    }
    for e in sg.edges() {
        let pairs = realized
            .get(&(e.source, e.predicate, e.target))
            .map_or(0, |s| s.len());
        let complete = pairs == mapping.members(e.source).len() * mapping.members(e.target).len();
        adj[e.source].push((e.predicate, e.target, complete));
    }

    // walks of exactly `len` edges starting at each node
    let mut walks = vec![1u64; sg.num_nodes()];
    let mut total = 0u64;
    for _ in 0..max_path_len {
        walks = adj
            .iter()
            .map(|out| {
                out.iter()
                    .fold(0u64, |acc, &(_, t, _)| acc.saturating_add(walks[t]))
            })
            .collect();
        total = walks.iter().fold(total, |acc, &w| acc.saturating_add(w));
        if total > MAX_SUMMARY_PATHS {
            return Err(SummaryError::TooManyPaths {
                count: total,
                limit: MAX_SUMMARY_PATHS,
            });
        }
    }

    let mut violations = Vec::new();
    let mut nodes = Vec::with_capacity(max_path_len + 1);
    let mut predicates = Vec::with_capacity(max_path_len);
    for start in 0..sg.num_nodes() {
        nodes.push(start);
        walk(
            &adj,
            max_path_len,
            &mut nodes,
            &mut predicates,
            0,
            &mut violations,
        );
        nodes.pop();
    }
    Ok(violations)
}

fn walk(
    adj: &[Vec<(RelationId, PartitionId, bool)>],
    max_len: usize,
    nodes: &mut Vec<PartitionId>,
    predicates: &mut Vec<RelationId>,
    broken_steps: usize,
    out: &mut Vec<SummaryPath>,
) {
    if predicates.len() == max_len {
        return;
    }
    let here = *nodes.last().expect("path has a start");
    for &(p, t, complete) in &adj[here] {
        nodes.push(t);
        predicates.push(p);
        let broken = broken_steps + usize::from(!complete);
        if broken > 0 {
            out.push(SummaryPath {
                nodes: nodes.clone(),
                predicates: predicates.clone(),
            });
        }
        walk(adj, max_len, nodes, predicates, broken, out);
        nodes.pop();
        predicates.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_ntriples_str;
    use crate::summary::{attribute_summary, io_summary};

    #[test]
    fn fragment_reports_friend_wrote_path() {
        let g = parse_ntriples_str(include_str!("../../fixtures/figure1.nt")).unwrap();
        let (s, m) = attribute_summary(&g);
        let v = |name: &str| {
            let label = format!("<http://example.org/{name}>");
            g.nodes().iter().position(|n| n.label == label).unwrap()
        };
        let (s1, s2, s3) = (
            m.partition_of(v("v3")),
            m.partition_of(v("v1")),
            m.partition_of(v("v5")),
        );
        let friends = g.relation_index("http://example.org/friends").unwrap();
        let wrote = g.relation_index("http://example.org/wrote").unwrap();
        let violations = check_precise(&s, &m, &g, 2).unwrap();
        assert!(violations.contains(&SummaryPath {
            nodes: vec![s3, s1, s2],
            predicates: vec![friends, wrote],
        }));
        // length-1 paths are flagged too when an edge is not realized by all pairs
        assert!(violations.contains(&SummaryPath {
            nodes: vec![s3, s1],
            predicates: vec![friends],
        }));
    }

    #[test]
    fn singleton_partitions_are_precise() {
        let g = parse_ntriples_str("<a> <p> <b> .\n<b> <q> <c> .\n<c> <r> <a> .\n").unwrap();
        let (s, m) = io_summary(&g);
        assert_eq!(m.num_partitions(), 3);
        assert!(check_precise(&s, &m, &g, 4).unwrap().is_empty());
    }

    #[test]
    fn complete_bipartite_blocks_are_precise() {
        let g = parse_ntriples_str("<a> <p> <x> .\n<a> <p> <y> .\n<b> <p> <x> .\n<b> <p> <y> .\n")
            .unwrap();
        let (s, m) = attribute_summary(&g);
        assert!(check_precise(&s, &m, &g, 3).unwrap().is_empty());
    }

    #[test]
    fn path_guard_refuses_large_enumerations() {
        // two nodes with a self loop each and an edge between: walks grow exponentially
        let g = parse_ntriples_str("<a> <p> <a> .\n<a> <q> <b> .\n<b> <p> <b> .\n<b> <q> <a> .\n")
            .unwrap();
        let (s, m) = io_summary(&g);
        assert!(matches!(
            check_precise(&s, &m, &g, 40),
            Err(SummaryError::TooManyPaths { .. })
        ));
    }

    #[test]
    fn mismatched_mapping_is_rejected() {
        let g = parse_ntriples_str("<a> <p> <b> .\n").unwrap();
        let h = parse_ntriples_str("<a> <p> <b> .\n<c> <p> <d> .\n").unwrap();
        let (s, m) = attribute_summary(&g);
        assert!(matches!(
            check_precise(&s, &m, &h, 1),
            Err(SummaryError::MappingMismatch { .. })
        ));
    }
}
