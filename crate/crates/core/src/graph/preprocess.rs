//! Edge filters applied before summarization: type extraction, OWL
//! filtering and literal removal.
//!
//! Every filter re-compacts node and relation ids and returns the
//! old-to-new node map. A node is dropped only when all of its edges were
//! removed and it never occurred as the source of a removed edge, so
//! subjects survive (possibly isolated) while orphaned objects such as
//! class IRIs or literals go away.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Node, NodeId, NodeKind, RelationId, Triple, TripleGraph};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const OWL_NAMESPACE: &str = "http://www.w3.org/2002/07/owl#";

/// Old-to-new node id map produced by a filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compaction {
    old_to_new: Vec<Option<NodeId>>,
    new_to_old: Vec<NodeId>,
}

impl Compaction {
    pub fn identity(n: usize) -> Self {
        Compaction {
            old_to_new: (0..n).map(Some).collect(),
            new_to_old: (0..n).collect(),
        }
    }

    pub fn map(&self, old: NodeId) -> Option<NodeId> {
        self.old_to_new.get(old).copied().flatten()
    }

    pub fn original(&self, new: NodeId) -> NodeId {
        self.new_to_old[new]
    }

    pub fn old_len(&self) -> usize {
        self.old_to_new.len()
    }

    pub fn new_len(&self) -> usize {
        self.new_to_old.len()
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Compaction) -> Compaction {
        let old_to_new: Vec<_> = self
            .old_to_new
            .iter()
            .map(|m| m.and_then(|n| next.map(n)))
            .collect();
        let new_to_old = next
            .new_to_old
            .iter()
            .map(|&mid| self.new_to_old[mid])
            .collect();
        Compaction {
            old_to_new,
            new_to_old,
        }
    }
}

/// Types removed from the graph, keyed by (compacted) node id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeAssignment {
    /// Type terms as they appeared in object position, first-occurrence order.
    pub vocabulary: Vec<String>,
    pub assigned: BTreeMap<NodeId, BTreeSet<usize>>,
}

impl TypeAssignment {
    pub fn is_empty(&self) -> bool {
        self.assigned.is_empty()
    }

    pub fn types_of(&self, node: NodeId) -> Option<&BTreeSet<usize>> {
        self.assigned.get(&node)
    }

    /// Re-keys the assignment through a compaction; nodes that were
    /// dropped lose their types.
    pub fn remap(&self, compaction: &Compaction) -> TypeAssignment {
        TypeAssignment {
            vocabulary: self.vocabulary.clone(),
            assigned: self
                .assigned
                .iter()
                .filter_map(|(&v, t)| compaction.map(v).map(|n| (n, t.clone())))
                .collect(),
        }
    }
}

/// Removes every `type_predicate` edge and records it as a type.
pub fn strip_types(
    g: &TripleGraph,
    type_predicate: &str,
) -> (TripleGraph, TypeAssignment, Compaction) {
    let Some(type_rel) = g.relation_index(type_predicate) else {
        return (
            g.clone(),
            TypeAssignment::default(),
            Compaction::identity(g.num_nodes()),
        );
    };
    let mut vocabulary = Vec::new();
    let mut vocab_index = HashMap::new();
    let mut by_old: BTreeMap<NodeId, BTreeSet<usize>> = BTreeMap::new();
    for e in g.edges().iter().filter(|e| e.predicate == type_rel) {
        let term = &g.node(e.target).label;
        let t = *vocab_index.entry(term.clone()).or_insert_with(|| {
            vocabulary.push(term.clone());
            vocabulary.len() - 1
        });
        by_old.entry(e.source).or_default().insert(t);
    }
    let (graph, compaction) = retain_edges(g, |e| e.predicate != type_rel, |_| false);
    let assignment = TypeAssignment {
        vocabulary,
        assigned: by_old,
    }
    .remap(&compaction);
    (graph, assignment, compaction)
}

/// Removes every edge whose predicate lives in the OWL namespace.
pub fn filter_owl(g: &TripleGraph) -> (TripleGraph, Compaction) {
    let owl = owl_relations(g);
    retain_edges(g, |e| !owl[e.predicate], |_| false)
}

/// Removes every edge pointing at a literal, and the literals themselves.
pub fn drop_literal_edges(g: &TripleGraph) -> (TripleGraph, Compaction) {
    retain_edges(g, |e| g.node(e.target).kind != NodeKind::Literal, |_| false)
}

fn owl_relations(g: &TripleGraph) -> Vec<bool> {
    g.relations()
        .iter()
        .map(|r| r.starts_with(OWL_NAMESPACE))
        .collect()
}

pub(crate) fn retain_edges(
    g: &TripleGraph,
    keep_edge: impl Fn(&Triple) -> bool,
    protect: impl Fn(NodeId) -> bool,
) -> (TripleGraph, Compaction) {
    let n = g.num_nodes();
    let mut kept_incident = vec![false; n];
    let mut removed_incident = vec![false; n];
    let mut removed_source = vec![false; n];
    let mut kept = Vec::with_capacity(g.size());
    for e in g.edges() {
        if keep_edge(e) {
            kept_incident[e.source] = true;
            kept_incident[e.target] = true;
            kept.push(*e);
        } else {
            removed_incident[e.source] = true;
            removed_incident[e.target] = true;
            removed_source[e.source] = true;
        }
    }
    let mut old_to_new = vec![None; n];
    let mut new_to_old = Vec::with_capacity(n);
    let mut nodes: Vec<Node> = Vec::with_capacity(n);
    for v in 0..n {
        let orphaned = removed_incident[v] && !kept_incident[v] && !removed_source[v];
        if !orphaned || protect(v) {
            old_to_new[v] = Some(nodes.len());
            new_to_old.push(v);
            nodes.push(g.node(v).clone());
        }
    }
    let mut rel_map: Vec<Option<RelationId>> = vec![None; g.num_relations()];
    let mut relations = Vec::new();
    let edges = kept
        .into_iter()
        .map(|e| {
            let p = *rel_map[e.predicate].get_or_insert_with(|| {
                relations.push(g.relations()[e.predicate].clone());
                relations.len() - 1
            });
            Triple::new(
                old_to_new[e.source].expect("kept edge endpoint"),
                p,
                old_to_new[e.target].expect("kept edge endpoint"),
            )
        })
        .collect();
    (
        TripleGraph::from_parts_unchecked(nodes, relations, edges),
        Compaction {
            old_to_new,
            new_to_old,
        },
    )
}

/// A preprocessed graph together with the labels stripped from it.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: TripleGraph,
    pub types: TypeAssignment,
}

impl Dataset {
    /// Strips `type_predicate` edges, then filters OWL predicates; typed
    /// nodes are never dropped by the OWL filter.
    pub fn prepare(raw: &TripleGraph, type_predicate: &str) -> Dataset {
        let (stripped, types, _) = strip_types(raw, type_predicate);
        let owl = owl_relations(&stripped);
        let (graph, compaction) = retain_edges(
            &stripped,
            |e| !owl[e.predicate],
            |v| types.assigned.contains_key(&v),
        );
        Dataset {
            types: types.remap(&compaction),
            graph,
        }
    }
}
