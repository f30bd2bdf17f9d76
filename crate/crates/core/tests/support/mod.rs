//! Test-only graph generators and brute-force reference implementations.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use summgcn::graph::{Node, NodeKind, Triple, TripleGraph};
use summgcn::labels::{read_labels, LabelMatrix};
use summgcn::summary::PartitionId;

/// Random graph with at most `max_nodes` nodes, `max_relations` predicates
/// and `3 * n` edges. Roughly a fifth of the nodes are literals, which only
/// ever appear as edge targets.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize, max_relations: usize) -> TripleGraph {
    let n = rng.gen_range(1..=max_nodes);
    let r = rng.gen_range(1..=max_relations);
    let nodes: Vec<Node> = (0..n)
        .map(|i| {
            let literal = i > 0 && rng.gen_bool(0.2);
            Node {
                label: if literal {
                    format!("\"lit{i}\"")
                } else {
                    format!("<n{i}>")
                },
                kind: if literal {
                    NodeKind::Literal
                } else {
                    NodeKind::Resource
                },
            }
        })
        .collect();
    let resources: Vec<usize> = (0..n)
        .filter(|&i| nodes[i].kind == NodeKind::Resource)
        .collect();
    let m = rng.gen_range(0..=3 * n);
    let edges = (0..m)
        .map(|_| {
            Triple::new(
                resources[rng.gen_range(0..resources.len())],
                rng.gen_range(0..r),
                rng.gen_range(0..n),
            )
        })
        .collect();
    let relations = (0..r).map(|i| format!("p{i}")).collect();
    TripleGraph::from_parts(nodes, relations, edges).expect("generated graph is well formed")
}

/// Relabels blocks densely in order of first occurrence.
pub fn canonical(partition: &[usize]) -> Vec<usize> {
    let mut ids = HashMap::new();
    partition
        .iter()
        .map(|&b| {
            let next = ids.len();
            *ids.entry(b).or_insert(next)
        })
        .collect()
}

/// Partition from a pairwise equivalence, assigning each node to the first
/// earlier node it is equivalent to.
pub fn partition_by(n: usize, mut equivalent: impl FnMut(usize, usize) -> bool) -> Vec<usize> {
    let mut reps: Vec<usize> = Vec::new();
    (0..n)
        .map(|v| match reps.iter().position(|&r| equivalent(r, v)) {
            Some(b) => b,
            None => {
                reps.push(v);
                reps.len() - 1
            }
        })
        .collect()
}

fn out_set(g: &TripleGraph, v: usize) -> BTreeSet<usize> {
    g.edges()
        .iter()
        .filter(|e| e.source == v)
        .map(|e| e.predicate)
        .collect()
}

fn in_set(g: &TripleGraph, v: usize) -> BTreeSet<usize> {
    g.edges()
        .iter()
        .filter(|e| e.target == v)
        .map(|e| e.predicate)
        .collect()
}

pub fn attribute_oracle(g: &TripleGraph) -> Vec<usize> {
    partition_by(g.num_nodes(), |a, b| out_set(g, a) == out_set(g, b))
}

pub fn incoming_oracle(g: &TripleGraph) -> Vec<usize> {
    partition_by(g.num_nodes(), |a, b| in_set(g, a) == in_set(g, b))
}

pub fn io_oracle(g: &TripleGraph) -> Vec<usize> {
    partition_by(g.num_nodes(), |a, b| {
        out_set(g, a) == out_set(g, b) && in_set(g, a) == in_set(g, b)
    })
}

/// Pairwise stratified definition: every node is equivalent at depth 0;
/// at depth `i + 1` two nodes are equivalent when they were at depth `i`
/// and every outgoing edge of either one is matched by an edge of the
/// other with the same predicate to a depth-`i` equivalent target.
pub fn bisimulation_oracle(g: &TripleGraph, k: usize) -> Vec<usize> {
    let n = g.num_nodes();
    let out: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|v| {
            g.edges()
                .iter()
                .filter(|e| e.source == v)
                .map(|e| (e.predicate, e.target))
                .collect()
        })
        .collect();
    let mut eq = vec![vec![true; n]; n];
    for _ in 0..k {
        let prev = eq.clone();
        let covers = |a: usize, b: usize| {
            out[a]
                .iter()
                .all(|&(p, t)| out[b].iter().any(|&(q, u)| p == q && prev[t][u]))
        };
        for a in 0..n {
            for b in 0..n {
                eq[a][b] = prev[a][b] && covers(a, b) && covers(b, a);
            }
        }
    }
    partition_by(n, |a, b| eq[a][b])
}

/// Summary paths of `1..=max_len` edges that have an instance missing from
/// `g`, found by enumerating every instance explicitly. Paths are returned
/// as `(partition sequence, predicate sequence)`, sorted.
pub fn imprecise_paths_oracle(
    summary: &TripleGraph,
    members: &[Vec<usize>],
    g: &TripleGraph,
    max_len: usize,
) -> Vec<(Vec<PartitionId>, Vec<usize>)> {
    let has_edge = |s: usize, p: usize, t: usize| {
        g.edges()
            .iter()
            .any(|e| e.source == s && e.predicate == p && e.target == t)
    };
    let mut found = Vec::new();
    let mut stack: Vec<(Vec<usize>, Vec<usize>)> = (0..summary.num_nodes())
        .map(|s| (vec![s], vec![]))
        .collect();
    while let Some((nodes, preds)) = stack.pop() {
        if !preds.is_empty() {
            // every instance: one member per position
            let mut imprecise = false;
            let mut choice = vec![0usize; nodes.len()];
            'outer: loop {
                let inst: Vec<usize> = nodes
                    .iter()
                    .zip(&choice)
                    .map(|(&s, &c)| members[s][c])
                    .collect();
                if (0..preds.len()).any(|i| !has_edge(inst[i], preds[i], inst[i + 1])) {
                    imprecise = true;
                    break;
                }
                for pos in (0..choice.len()).rev() {
                    choice[pos] += 1;
                    if choice[pos] < members[nodes[pos]].len() {
                        continue 'outer;
                    }
                    choice[pos] = 0;
                }
                break;
            }
            if imprecise {
                found.push((nodes.clone(), preds.clone()));
            }
        }
        if preds.len() < max_len {
            let last = *nodes.last().unwrap();
            for e in summary.edges().iter().filter(|e| e.source == last) {
                let mut n2 = nodes.clone();
                n2.push(e.target);
                let mut p2 = preds.clone();
                p2.push(e.predicate);
                stack.push((n2, p2));
            }
        }
    }
    found.sort();
    found
}

/// Label matrix over `node_labels` from explicit rows of weights.
pub fn label_matrix(node_labels: &[String], rows: &[Vec<f64>]) -> LabelMatrix {
    let classes: Vec<String> = (0..rows.first().map_or(0, |r| r.len()))
        .map(|c| format!("<c{c}>"))
        .collect();
    let mut text = String::new();
    for (v, row) in rows.iter().enumerate() {
        for (c, &w) in row.iter().enumerate() {
            if w != 0.0 {
                text += &format!("{}\t{}\t{}\n", node_labels[v], classes[c], w);
            }
        }
    }
    read_labels(&text, node_labels, Some(&classes)).expect("well-formed labels")
}

type EntityKind<'a> = (&'a str, &'a [&'a str], &'a [(&'a str, usize)]);

/// An entity–relationship style KG whose types are reflected in the
/// predicates each entity uses, in the spirit of research-portal graphs.
///
/// Every entity gets one primary type from `{Person, Publication,
/// Organization, Project}`; with probability 0.1 it also gets `Agent` or
/// `Document` according to its primary type.
pub fn synthetic_kg<R: Rng>(rng: &mut R, per_type: usize) -> String {
    const TYPE: &str = "<http://www.w3.org/1999/02/22-rdf-syntax-ns#type>";
    let ex = |s: &str| format!("<http://example.org/{s}>");
    let kinds: [EntityKind; 4] = [
        (
            "Person",
            &["name", "email"],
            &[("worksAt", 2), ("authorOf", 1)],
        ),
        ("Publication", &["title", "year"], &[("about", 3)]),
        ("Organization", &["name", "homepage"], &[("partOf", 2)]),
        ("Project", &["title"], &[("fundedBy", 2), ("member", 0)]),
    ];
    let id = |k: usize, i: usize| ex(&format!("{}{i}", kinds[k].0.to_lowercase()));
    let mut out = String::new();
    for (k, (ty, literals, links)) in kinds.iter().enumerate() {
        for i in 0..per_type {
            let me = id(k, i);
            out += &format!("{me} {TYPE} {} .\n", ex(ty));
            if rng.gen_bool(0.1) {
                let extra = if k == 1 { "Document" } else { "Agent" };
                out += &format!("{me} {TYPE} {} .\n", ex(extra));
            }
            for p in literals.iter() {
                if rng.gen_bool(0.9) {
                    out += &format!("{me} {} \"{p} {}\" .\n", ex(p), rng.gen_range(0..per_type));
                }
            }
            for &(p, target) in links.iter() {
                for _ in 0..rng.gen_range(0..=2) {
                    out += &format!(
                        "{me} {} {} .\n",
                        ex(p),
                        id(target, rng.gen_range(0..per_type))
                    );
                }
            }
        }
    }
    out += &format!(
        "{} <http://www.w3.org/2002/07/owl#sameAs> {} .\n",
        id(0, 0),
        id(0, 0)
    );
    out
}

/// Worst relative error between the analytic gradient and central finite
/// differences over every parameter of one random small model.
///
/// The error of an entry is `|a - n| / max(|a|, |n|, 1e-6)`, so entries
/// whose gradient is essentially zero are compared absolutely.
pub fn gradient_check(seed: u64) -> f64 {
    use summgcn::rgcn::{backward, bce_loss, forward, MessagePassingStructure, RgcnParams};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_graph(&mut rng, 8, 3);
    let s = MessagePassingStructure::build(&g, rng.gen_bool(0.7));
    let hidden = rng.gen_range(1..=4);
    let classes = rng.gen_range(1..=3);
    let params = RgcnParams::glorot(&s, hidden, classes, rng.gen());
    let names: Vec<String> = g.nodes().iter().map(|n| n.label.clone()).collect();
    let rows_w: Vec<Vec<f64>> = (0..g.num_nodes())
        .map(|_| {
            (0..classes)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        rng.gen_range(0.0..=1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let targets = label_matrix(&names, &rows_w);
    let mut rows: Vec<usize> = (0..g.num_nodes()).filter(|_| rng.gen_bool(0.6)).collect();
    if rows.is_empty() {
        rows.push(0);
    }
    let loss = |p: &RgcnParams| bce_loss(&forward(&s, p).unwrap().probs, &targets, &rows).unwrap();
    let pass = forward(&s, &params).unwrap();
    let grads = backward(&s, &params, &pass, &targets, &rows).unwrap();

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let blocks = params.blocks().count();
    for b in 0..blocks {
        let len = params.blocks().nth(b).unwrap().1.as_slice().len();
        for i in 0..len {
            let mut plus = params.clone();
            plus.blocks_mut().nth(b).unwrap().1.as_mut_slice()[i] += h;
            let mut minus = params.clone();
            minus.blocks_mut().nth(b).unwrap().1.as_mut_slice()[i] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let analytic = grads.blocks().nth(b).unwrap().1.as_slice()[i];
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}
