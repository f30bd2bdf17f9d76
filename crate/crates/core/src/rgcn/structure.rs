use std::fmt;

use crate::graph::{NodeId, TripleGraph};

/// Relation identity used to line up models built on different graphs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationKey {
    pub label: String,
    pub inverse: bool,
}

impl fmt::Display for RelationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "{}^-1", self.label)
        } else {
            f.write_str(&self.label)
        }
    }
}

/// One message `source -> target` with its normalization `1 / c_{target,r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub source: NodeId,
    pub target: NodeId,
    /// Position of `source` in [`RelationAdjacency::sources`].
    pub source_slot: usize,
    /// Position of `target` in [`RelationAdjacency::targets`].
    pub target_slot: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationAdjacency {
    pub key: RelationKey,
    /// Sorted distinct message senders; these are the only nodes whose
    /// first-layer row for this relation can influence any output.
    pub sources: Vec<NodeId>,
    /// Sorted distinct receivers.
    pub targets: Vec<NodeId>,
    pub arcs: Vec<Arc>,
}

impl RelationAdjacency {
    pub fn source_slot(&self, node: NodeId) -> Option<usize> {
        self.sources.binary_search(&node).ok()
    }

    /// `c_{i,r}`: number of messages `i` receives under this relation.
    pub fn in_degree(&self, node: NodeId) -> usize {
        self.arcs.iter().filter(|a| a.target == node).count()
    }

    /// Senders to `node` under this relation.
    pub fn neighbors(&self, node: NodeId) -> Vec<NodeId> {
        self.arcs
            .iter()
            .filter(|a| a.target == node)
            .map(|a| a.source)
            .collect()
    }
}

/// Per-relation message lists for the R-GCN. The self-connection is not
/// listed here; it is carried by the dedicated self weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MessagePassingStructure {
    num_nodes: usize,
    relations: Vec<RelationAdjacency>,
}

impl MessagePassingStructure {
    /// Forward relations in vocabulary order, followed by one inverse per
    /// forward relation when `add_inverses` is set.
    pub fn build(g: &TripleGraph, add_inverses: bool) -> Self {
        let r = g.num_relations();
        let mut pairs: Vec<Vec<(NodeId, NodeId)>> =
            vec![Vec::new(); if add_inverses { 2 * r } else { r }];
        for e in g.edges() {
            pairs[e.predicate].push((e.source, e.target));
            if add_inverses {
                pairs[r + e.predicate].push((e.target, e.source));
            }
        }
        let relations = pairs
            .into_iter()
            .enumerate()
            .map(|(i, list)| {
                let key = RelationKey {
                    label: g.relations()[i % r.max(1)].clone(),
                    inverse: i >= r,
                };
                adjacency(key, list, g.num_nodes())
            })
            .collect();
        MessagePassingStructure {
            num_nodes: g.num_nodes(),
            relations,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn relations(&self) -> &[RelationAdjacency] {
        &self.relations
    }

    pub fn relation_keys(&self) -> Vec<RelationKey> {
        self.relations.iter().map(|r| r.key.clone()).collect()
    }

    pub fn find(&self, key: &RelationKey) -> Option<usize> {
        self.relations.iter().position(|r| &r.key == key)
    }

    /// True when `node` receives no message under any relation.
    pub fn is_isolated(&self, node: NodeId) -> bool {
        self.relations
            .iter()
            .all(|r| r.targets.binary_search(&node).is_err())
    }
}

fn adjacency(key: RelationKey, list: Vec<(NodeId, NodeId)>, n: usize) -> RelationAdjacency {
    let mut degree = vec![0usize; n];
    for &(_, t) in &list {
        degree[t] += 1;
    }
    let mut sources: Vec<NodeId> = list.iter().map(|&(s, _)| s).collect();
    sources.sort_unstable();
    sources.dedup();
    let mut targets: Vec<NodeId> = list.iter().map(|&(_, t)| t).collect();
    targets.sort_unstable();
    targets.dedup();
    let arcs = list
        .into_iter()
        .map(|(source, target)| Arc {
            source,
            target,
            source_slot: sources.binary_search(&source).expect("source listed"),
            target_slot: targets.binary_search(&target).expect("target listed"),
            norm: 1.0 / degree[target] as f64,
        })
        .collect();
    RelationAdjacency {
        key,
        sources,
        targets,
        arcs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_ntriples_str;

    #[test]
    fn single_edge_with_inverse() {
        let g = parse_ntriples_str("<a> <p> <b> .\n").unwrap();
        let s = MessagePassingStructure::build(&g, true);
        assert_eq!(s.relations().len(), 2);
        let fwd = &s.relations()[0];
        let inv = &s.relations()[1];
        assert_eq!(fwd.key.to_string(), "p");
        assert_eq!(inv.key.to_string(), "p^-1");
        assert_eq!(fwd.neighbors(1), [0]);
        assert_eq!(inv.neighbors(0), [1]);
        assert_eq!(fwd.in_degree(1), 1);
        assert_eq!(fwd.arcs[0].norm, 1.0);
        assert!(!s.is_isolated(0) && !s.is_isolated(1));
    }

    #[test]
    fn normalization_is_in_degree() {
        let g = parse_ntriples_str("<a> <p> <d> .\n<b> <p> <d> .\n<c> <p> <d> .\n<a> <q> <b> .\n")
            .unwrap();
        let s = MessagePassingStructure::build(&g, false);
        let p = &s.relations()[0];
        // ids by first occurrence: a=0 d=1 b=2 c=3
        assert_eq!(p.in_degree(1), 3);
        assert!(p.arcs.iter().all(|a| (a.norm - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(p.sources, [0, 2, 3]);
        assert_eq!(p.targets, [1]);
        assert!(s.is_isolated(0));
    }

    #[test]
    fn edgeless_graph_has_no_relations() {
        let s = MessagePassingStructure::build(&TripleGraph::default(), true);
        assert!(s.relations().is_empty());
    }
}
