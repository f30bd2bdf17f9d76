//! Labeled directed multigraphs in the shape of RDF data.
//!
//! A [`TripleGraph`] owns three dense vocabularies: nodes (with their
//! original lexical term), relation labels (predicate IRIs) and the edge
//! list. Node and relation ids are contiguous `0..len`.

mod ntriples;
mod preprocess;

pub use ntriples::{parse_ntriples, parse_ntriples_str, write_ntriples, ParseError, ParseOptions};
pub use preprocess::{
    drop_literal_edges, filter_owl, strip_types, Compaction, Dataset, TypeAssignment,
    OWL_NAMESPACE, RDF_TYPE,
};

use std::collections::BTreeSet;

pub type NodeId = usize;
pub type RelationId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Resource,
    Literal,
}

/// A node together with the term it was read from.
///
/// `label` holds the N-Triples term verbatim: `<iri>`, `_:id` or a quoted
/// literal including any `@lang` / `^^<datatype>` suffix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub label: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub source: NodeId,
    pub predicate: RelationId,
    pub target: NodeId,
}

impl Triple {
    pub fn new(source: NodeId, predicate: RelationId, target: NodeId) -> Self {
        Triple {
            source,
            predicate,
            target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("node id {id} out of range (graph has {len} nodes)")]
    NodeOutOfRange { id: NodeId, len: usize },
    #[error("relation id {id} out of range (graph has {len} relations)")]
    RelationOutOfRange { id: RelationId, len: usize },
    #[error("literal node {id} used as an edge source")]
    LiteralSource { id: NodeId },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripleGraph {
    nodes: Vec<Node>,
    relations: Vec<String>,
    edges: Vec<Triple>,
}

impl TripleGraph {
    /// Builds a graph from raw parts, checking every index.
    pub fn from_parts(
        nodes: Vec<Node>,
        relations: Vec<String>,
        edges: Vec<Triple>,
    ) -> Result<Self, GraphError> {
        for e in &edges {
            for id in [e.source, e.target] {
                if id >= nodes.len() {
                    return Err(GraphError::NodeOutOfRange {
                        id,
                        len: nodes.len(),
                    });
                }
            }
            if e.predicate >= relations.len() {
                return Err(GraphError::RelationOutOfRange {
                    id: e.predicate,
                    len: relations.len(),
                });
            }
            if nodes[e.source].kind == NodeKind::Literal {
                return Err(GraphError::LiteralSource { id: e.source });
            }
        }
        Ok(TripleGraph {
            nodes,
            relations,
            edges,
        })
    }

    pub(crate) fn from_parts_unchecked(
        nodes: Vec<Node>,
        relations: Vec<String>,
        edges: Vec<Triple>,
    ) -> Self {
        debug_assert!(
            TripleGraph::from_parts(nodes.clone(), relations.clone(), edges.clone()).is_ok()
        );
        TripleGraph {
            nodes,
            relations,
            edges,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn edges(&self) -> &[Triple] {
        &self.edges
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    /// Graph size, measured in edges.
    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn relation_index(&self, label: &str) -> Option<RelationId> {
        self.relations.iter().position(|r| r == label)
    }

    /// Set of predicates on the node's outgoing edges.
    pub fn attributes(&self, node: NodeId) -> Result<BTreeSet<RelationId>, GraphError> {
        self.check_node(node)?;
        Ok(self
            .edges
            .iter()
            .filter(|e| e.source == node)
            .map(|e| e.predicate)
            .collect())
    }

    /// Set of predicates on the node's incoming edges.
    pub fn inverse_attributes(&self, node: NodeId) -> Result<BTreeSet<RelationId>, GraphError> {
        self.check_node(node)?;
        Ok(self
            .edges
            .iter()
            .filter(|e| e.target == node)
            .map(|e| e.predicate)
            .collect())
    }

    /// Outgoing and incoming attribute sets for every node in one scan,
    /// each sorted and deduplicated.
    pub fn attribute_table(&self) -> (Vec<Vec<RelationId>>, Vec<Vec<RelationId>>) {
        let mut out = vec![Vec::new(); self.nodes.len()];
        let mut inc = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            out[e.source].push(e.predicate);
            inc[e.target].push(e.predicate);
        }
        for list in out.iter_mut().chain(inc.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        (out, inc)
    }

    /// Outgoing adjacency as `(predicate, target)` lists per node.
    pub fn out_adjacency(&self) -> Vec<Vec<(RelationId, NodeId)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.source].push((e.predicate, e.target));
        }
        adj
    }

    fn check_node(&self, node: NodeId) -> Result<(), GraphError> {
        if node < self.nodes.len() {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange {
                id: node,
                len: self.nodes.len(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(label: &str) -> Node {
        Node {
            label: label.to_string(),
            kind: NodeKind::Resource,
        }
    }

    #[test]
    fn from_parts_rejects_dangling_indices() {
        let err = TripleGraph::from_parts(
            vec![res("<a>")],
            vec!["p".into()],
            vec![Triple::new(0, 0, 1)],
        )
        .unwrap_err();
        assert_eq!(err, GraphError::NodeOutOfRange { id: 1, len: 1 });
        let err = TripleGraph::from_parts(vec![res("<a>")], vec![], vec![Triple::new(0, 0, 0)])
            .unwrap_err();
        assert_eq!(err, GraphError::RelationOutOfRange { id: 0, len: 0 });
    }

    #[test]
    fn from_parts_rejects_literal_sources() {
        let lit = Node {
            label: "\"x\"".into(),
            kind: NodeKind::Literal,
        };
        let err = TripleGraph::from_parts(
            vec![lit, res("<a>")],
            vec!["p".into()],
            vec![Triple::new(0, 0, 1)],
        )
        .unwrap_err();
        assert_eq!(err, GraphError::LiteralSource { id: 0 });
    }

    #[test]
    fn attribute_sets_deduplicate_predicates() {
        let g =
            parse_ntriples_str("<a> <p> <b> .\n<a> <p> <c> .\n<a> <q> \"x\" .\n<c> <p> <b> .\n")
                .unwrap();
        let p = g.relation_index("p").unwrap();
        let q = g.relation_index("q").unwrap();
        assert_eq!(g.attributes(0).unwrap(), BTreeSet::from([p, q]));
        // "x" is a literal: no outgoing edges
        let x = g.nodes().iter().position(|n| n.label == "\"x\"").unwrap();
        assert!(g.attributes(x).unwrap().is_empty());
        assert_eq!(g.inverse_attributes(x).unwrap(), BTreeSet::from([q]));
        // b has two incoming p-edges
        assert_eq!(g.inverse_attributes(1).unwrap(), BTreeSet::from([p]));
        // a has no incoming edges
        assert!(g.inverse_attributes(0).unwrap().is_empty());
        assert!(matches!(
            g.attributes(99),
            Err(GraphError::NodeOutOfRange { .. })
        ));
        assert!(matches!(
            g.inverse_attributes(99),
            Err(GraphError::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn attribute_table_matches_per_node_queries() {
        let g =
            parse_ntriples_str("<a> <p> <b> .\n<b> <q> <a> .\n<b> <p> <a> .\n<a> <r> \"1\" .\n")
                .unwrap();
        let (out, inc) = g.attribute_table();
        for v in 0..g.num_nodes() {
            assert_eq!(
                out[v],
                g.attributes(v).unwrap().into_iter().collect::<Vec<_>>()
            );
            assert_eq!(
                inc[v],
                g.inverse_attributes(v)
                    .unwrap()
                    .into_iter()
                    .collect::<Vec<_>>()
            );
        }
    }
}
