//! Structural graph summaries.
//!
//! Each summarization relation assigns a signature to every node; nodes
//! with equal signatures form one partition and every partition becomes a
//! summary node. Partition ids follow first occurrence in node-id order.

mod export;
mod precise;

pub use export::{read_mapping, write_mapping, MappingError};
pub use precise::{check_precise, SummaryPath, MAX_SUMMARY_PATHS};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use crate::graph::{Node, NodeId, NodeKind, Triple, TripleGraph};

pub type PartitionId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SummaryError {
    #[error("compression rate is undefined for a graph without edges")]
    EmptyGraph,
    #[error("summary has {count} paths up to the requested length, limit is {limit}")]
    TooManyPaths { count: u64, limit: u64 },
    #[error("mapping covers {mapping} nodes but the graph has {graph}")]
    MappingMismatch { mapping: usize, graph: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryMethod {
    Attributes,
    InputOutput,
    IncomingAttributes,
    Bisimulation { k: usize },
}

impl SummaryMethod {
    pub const DEFAULT_BISIM_K: usize = 3;

    pub fn name(&self) -> &'static str {
        match self {
            SummaryMethod::Attributes => "attributes",
            SummaryMethod::InputOutput => "io",
            SummaryMethod::IncomingAttributes => "incoming",
            SummaryMethod::Bisimulation { .. } => "bisim",
        }
    }
}

impl fmt::Display for SummaryMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SummaryMethod::Bisimulation { k } => write!(f, "bisim(k={k})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for SummaryMethod {
    type Err = String;

    /// Parses a method name; `bisim` takes the default depth.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "attributes" => Ok(SummaryMethod::Attributes),
            "io" => Ok(SummaryMethod::InputOutput),
            "incoming" => Ok(SummaryMethod::IncomingAttributes),
            "bisim" => Ok(SummaryMethod::Bisimulation {
                k: SummaryMethod::DEFAULT_BISIM_K,
            }),
            other => Err(format!(
                "unknown summary method `{other}` (expected attributes, io, incoming or bisim)"
            )),
        }
    }
}

/// Map from original nodes to partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryMapping {
    partition_of: Vec<PartitionId>,
    empty_partition: Option<PartitionId>,
    members: Vec<Vec<NodeId>>,
}

impl SummaryMapping {
    /// Builds a mapping from a total assignment whose ids are dense.
    pub fn from_assignment(
        partition_of: Vec<PartitionId>,
        empty_partition: Option<PartitionId>,
    ) -> Self {
        let count = partition_of.iter().map(|&p| p + 1).max().unwrap_or(0);
        let mut members = vec![Vec::new(); count];
        for (v, &p) in partition_of.iter().enumerate() {
            members[p].push(v);
        }
        debug_assert!(
            members.iter().all(|m| !m.is_empty()),
            "partition ids must be dense"
        );
        SummaryMapping {
            partition_of,
            empty_partition,
            members,
        }
    }

    pub fn partition_of(&self, node: NodeId) -> PartitionId {
        self.partition_of[node]
    }

    pub fn assignment(&self) -> &[PartitionId] {
        &self.partition_of
    }

    /// Partition holding the nodes whose signature is empty, if any.
    pub fn empty_partition(&self) -> Option<PartitionId> {
        self.empty_partition
    }

    pub fn members(&self, partition: PartitionId) -> &[NodeId] {
        &self.members[partition]
    }

    pub fn num_partitions(&self) -> usize {
        self.members.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.partition_of.len()
    }
}

/// Summary graph over partition ids, sharing the original relation
/// vocabulary. Node `i` is partition `i`, labeled `<urn:summary:i>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryGraph {
    pub graph: TripleGraph,
    pub method: SummaryMethod,
}

impl SummaryGraph {
    pub fn partition_label(id: PartitionId) -> String {
        format!("<urn:summary:{id}>")
    }
}

pub fn summarize(g: &TripleGraph, method: SummaryMethod) -> (SummaryGraph, SummaryMapping) {
    match method {
        SummaryMethod::Attributes => attribute_summary(g),
        SummaryMethod::InputOutput => io_summary(g),
        SummaryMethod::IncomingAttributes => incoming_attribute_summary(g),
        SummaryMethod::Bisimulation { k } => k_forward_bisimulation(g, k),
    }
}

/// Groups nodes by their outgoing attribute sets.
pub fn attribute_summary(g: &TripleGraph) -> (SummaryGraph, SummaryMapping) {
    let (out, _) = g.attribute_table();
    let empty: Vec<bool> = out.iter().map(|s| s.is_empty()).collect();
    finish(
        g,
        SummaryMethod::Attributes,
        group_by_signature(out),
        &empty,
    )
}

/// Groups nodes by the pair (outgoing attribute set, incoming attribute set).
pub fn io_summary(g: &TripleGraph) -> (SummaryGraph, SummaryMapping) {
    let (out, inc) = g.attribute_table();
    let empty: Vec<bool> = out
        .iter()
        .zip(&inc)
        .map(|(o, i)| o.is_empty() && i.is_empty())
        .collect();
    let sigs: Vec<_> = out.into_iter().zip(inc).collect();
    finish(
        g,
        SummaryMethod::InputOutput,
        group_by_signature(sigs),
        &empty,
    )
}

/// Groups nodes by their incoming attribute sets.
pub fn incoming_attribute_summary(g: &TripleGraph) -> (SummaryGraph, SummaryMapping) {
    let (_, inc) = g.attribute_table();
    let empty: Vec<bool> = inc.iter().map(|s| s.is_empty()).collect();
    finish(
        g,
        SummaryMethod::IncomingAttributes,
        group_by_signature(inc),
        &empty,
    )
}

/// Stratified forward bisimulation up to depth `k`.
///
/// Level 0 is the universal block. The level `i + 1` signature of `v` is
/// its level `i` block plus the sorted set of `(predicate, level i block
/// of target)` pairs over its outgoing edges.
pub fn k_forward_bisimulation(g: &TripleGraph, k: usize) -> (SummaryGraph, SummaryMapping) {
    let (blocks, _) = bisimulation_levels(g, k);
    let sinks: Vec<bool> = {
        let mut has_out = vec![false; g.num_nodes()];
        for e in g.edges() {
            has_out[e.source] = true;
        }
        has_out.into_iter().map(|o| !o).collect()
    };
    finish(g, SummaryMethod::Bisimulation { k }, blocks, &sinks)
}

/// Returns the level-`k` partition and the number of levels actually
/// refined before the partition became stable.
pub fn bisimulation_levels(g: &TripleGraph, k: usize) -> (Vec<PartitionId>, usize) {
    let adj = g.out_adjacency();
    let mut blocks = vec![0; g.num_nodes()];
    let mut count = usize::from(g.num_nodes() > 0);
    for level in 0..k {
        let sigs: Vec<(PartitionId, Vec<(usize, PartitionId)>)> = adj
            .iter()
            .enumerate()
            .map(|(v, out)| {
                let mut pairs: Vec<_> = out.iter().map(|&(p, t)| (p, blocks[t])).collect();
                pairs.sort_unstable();
                pairs.dedup();
                (blocks[v], pairs)
            })
            .collect();
        let next = group_by_signature(sigs);
        let next_count = next.iter().map(|&b| b + 1).max().unwrap_or(0);
        if next_count == count {
            return (next, level);
        }
        blocks = next;
        count = next_count;
    }
    (blocks, k)
}

/// Assigns dense ids to signatures in order of first occurrence.
fn group_by_signature<K: Hash + Eq>(sigs: Vec<K>) -> Vec<PartitionId> {
    let mut ids: HashMap<K, PartitionId> = HashMap::with_capacity(sigs.len());
    sigs.into_iter()
        .map(|s| {
            let next = ids.len();
            *ids.entry(s).or_insert(next)
        })
        .collect()
}

fn finish(
    g: &TripleGraph,
    method: SummaryMethod,
    partition_of: Vec<PartitionId>,
    empty_signature: &[bool],
) -> (SummaryGraph, SummaryMapping) {
    let mut empty_partition = None;
    let mut pure = true;
    for (v, &p) in partition_of.iter().enumerate() {
        if empty_signature[v] && empty_partition.is_none() {
            empty_partition = Some(p);
        }
    }
    if let Some(e) = empty_partition {
        pure = partition_of
            .iter()
            .zip(empty_signature)
            .all(|(&p, &is_empty)| p != e || is_empty);
    }
    let mapping = SummaryMapping::from_assignment(partition_of, empty_partition.filter(|_| pure));
    let graph = quotient(g, &mapping);
    (SummaryGraph { graph, method }, mapping)
}

/// Maps every edge endpoint-wise through the mapping, keeping each
/// distinct summary edge once in first-occurrence order.
pub fn quotient(g: &TripleGraph, mapping: &SummaryMapping) -> TripleGraph {
    let nodes = (0..mapping.num_partitions())
        .map(|p| Node {
            label: SummaryGraph::partition_label(p),
            kind: NodeKind::Resource,
        })
        .collect();
    let mut seen = HashSet::new();
    let edges = g
        .edges()
        .iter()
        .map(|e| {
            Triple::new(
                mapping.partition_of(e.source),
                e.predicate,
                mapping.partition_of(e.target),
            )
        })
        .filter(|t| seen.insert(*t))
        .collect();
    TripleGraph::from_parts_unchecked(nodes, g.relations().to_vec(), edges)
}

/// `1 - |summary edges| / |original edges|`.
pub fn compression_rate(g: &TripleGraph, summary: &SummaryGraph) -> Result<f64, SummaryError> {
    if g.size() == 0 {
        return Err(SummaryError::EmptyGraph);
    }
    Ok(1.0 - summary.graph.size() as f64 / g.size() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_ntriples_str;

    fn blocks(mapping: &SummaryMapping, g: &TripleGraph) -> Vec<Vec<String>> {
        (0..mapping.num_partitions())
            .map(|p| {
                mapping
                    .members(p)
                    .iter()
                    .map(|&v| g.node(v).label.clone())
                    .collect()
            })
            .collect()
    }

    const FIG1: &str = include_str!("../../fixtures/figure1.nt");

    #[test]
    fn attribute_summary_on_the_kg_fragment() {
        let g = parse_ntriples_str(FIG1).unwrap();
        let (s, m) = attribute_summary(&g);
        let b = blocks(&m, &g);
        assert!(b.contains(&vec![
            "<http://example.org/v1>".into(),
            "<http://example.org/v2>".into()
        ]));
        assert!(b.contains(&vec![
            "<http://example.org/v3>".into(),
            "<http://example.org/v4>".into()
        ]));
        assert!(b.contains(&vec!["<http://example.org/v5>".into()]));
        let empty = m.empty_partition().unwrap();
        assert_eq!(
            blocks(&m, &g)[empty],
            vec!["\"Book1\"".to_string(), "\"Book2\"".into()]
        );
        assert_eq!(m.num_partitions(), 4);
        // title, wrote, friends each collapse onto one summary edge
        assert_eq!(s.graph.size(), 3);
    }

    #[test]
    fn edgeless_graph_has_one_empty_partition() {
        let g = TripleGraph::from_parts(
            vec![
                Node {
                    label: "<a>".into(),
                    kind: NodeKind::Resource,
                },
                Node {
                    label: "<b>".into(),
                    kind: NodeKind::Resource,
                },
            ],
            vec![],
            vec![],
        )
        .unwrap();
        for method in [
            SummaryMethod::Attributes,
            SummaryMethod::InputOutput,
            SummaryMethod::IncomingAttributes,
            SummaryMethod::Bisimulation { k: 3 },
        ] {
            let (s, m) = summarize(&g, method);
            assert_eq!(m.num_partitions(), 1, "{method}");
            assert_eq!(m.empty_partition(), Some(0), "{method}");
            assert_eq!(s.graph.num_nodes(), 1);
            assert_eq!(s.graph.size(), 0);
        }
    }

    #[test]
    fn incoming_summary_single_edge() {
        let g = parse_ntriples_str("<a> <p> <b> .\n").unwrap();
        let (_, m) = incoming_attribute_summary(&g);
        assert_eq!(m.assignment(), [0, 1]);
        assert_eq!(m.empty_partition(), Some(0));
    }

    #[test]
    fn incoming_summary_groups_the_two_titles() {
        let g = parse_ntriples_str(FIG1).unwrap();
        let (_, m) = incoming_attribute_summary(&g);
        let b1 = g
            .nodes()
            .iter()
            .position(|n| n.label == "\"Book1\"")
            .unwrap();
        let b2 = g
            .nodes()
            .iter()
            .position(|n| n.label == "\"Book2\"")
            .unwrap();
        assert_eq!(m.partition_of(b1), m.partition_of(b2));
    }

    #[test]
    fn io_summary_on_the_fragment_matches_pairwise_signatures() {
        let g = parse_ntriples_str(FIG1).unwrap();
        let (_, m) = io_summary(&g);
        for u in 0..g.num_nodes() {
            for v in 0..g.num_nodes() {
                let same = g.attributes(u).unwrap() == g.attributes(v).unwrap()
                    && g.inverse_attributes(u).unwrap() == g.inverse_attributes(v).unwrap();
                assert_eq!(same, m.partition_of(u) == m.partition_of(v));
            }
        }
        // v1 and v2 both receive a `wrote` edge, so they stay together
        assert_eq!(m.partition_of(0), m.partition_of(2));
    }

    #[test]
    fn isolated_node_lands_in_io_empty_partition() {
        let g = TripleGraph::from_parts(
            vec![
                Node {
                    label: "<a>".into(),
                    kind: NodeKind::Resource,
                },
                Node {
                    label: "<b>".into(),
                    kind: NodeKind::Resource,
                },
                Node {
                    label: "<c>".into(),
                    kind: NodeKind::Resource,
                },
            ],
            vec!["p".into()],
            vec![Triple::new(0, 0, 1)],
        )
        .unwrap();
        let (_, m) = io_summary(&g);
        assert_eq!(m.empty_partition(), Some(m.partition_of(2)));
        assert_eq!(m.members(m.partition_of(2)), [2]);
    }

    #[test]
    fn bisimulation_level_zero_is_universal() {
        let g = parse_ntriples_str(FIG1).unwrap();
        let (s, m) = k_forward_bisimulation(&g, 0);
        assert_eq!(m.num_partitions(), 1);
        assert_eq!(m.empty_partition(), None);
        assert_eq!(s.graph.size(), 3);
    }

    #[test]
    fn bisimulation_separates_by_depth() {
        // a -p-> b -q-> c   versus   d -p-> e (sink)
        let g = parse_ntriples_str("<a> <p> <b> .\n<b> <q> <c> .\n<d> <p> <e> .\n").unwrap();
        let a = 0;
        let d = 3;
        let (_, m1) = k_forward_bisimulation(&g, 1);
        assert_eq!(m1.partition_of(a), m1.partition_of(d));
        let (_, m2) = k_forward_bisimulation(&g, 2);
        assert_ne!(m2.partition_of(a), m2.partition_of(d));
        // sinks c and e stay together at every depth and form the empty partition
        assert_eq!(m2.partition_of(2), m2.partition_of(4));
        assert_eq!(m2.empty_partition(), Some(m2.partition_of(2)));
    }

    #[test]
    fn bisimulation_stops_once_stable() {
        let g = parse_ntriples_str("<a> <p> <b> .\n").unwrap();
        let (p, levels) = bisimulation_levels(&g, 10);
        assert_eq!(p, [0, 1]);
        assert_eq!(levels, 1);
    }

    #[test]
    fn compression_rate_cases() {
        let g = parse_ntriples_str("<a> <p> <b> .\n<c> <p> <d> .\n").unwrap();
        let (s, _) = attribute_summary(&g);
        assert_eq!(compression_rate(&g, &s).unwrap(), 0.5);
        let empty = TripleGraph::default();
        let (s, _) = attribute_summary(&empty);
        assert_eq!(compression_rate(&empty, &s), Err(SummaryError::EmptyGraph));

        // a chain whose io-signatures are all distinct: summary == graph
        let chain = parse_ntriples_str("<a> <p> <b> .\n<b> <q> <c> .\n").unwrap();
        let (s, m) = io_summary(&chain);
        assert_eq!(m.num_partitions(), chain.num_nodes());
        assert_eq!(compression_rate(&chain, &s).unwrap(), 0.0);
    }

    #[test]
    fn method_names_round_trip() {
        for name in ["attributes", "io", "incoming", "bisim"] {
            assert_eq!(name.parse::<SummaryMethod>().unwrap().name(), name);
        }
        assert!("fluid".parse::<SummaryMethod>().is_err());
    }
}
