//! Initializing an original-graph model from a model trained on its summary.

use std::fmt;

use rayon::prelude::*;

use crate::graph::NodeId;
use crate::rgcn::{FreezePlan, MessagePassingStructure, RgcnModel, RgcnParams};
use crate::summary::PartitionId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransferError {
    #[error("hidden width mismatch: summary model has {summary}, requested {original}")]
    HiddenMismatch { summary: usize, original: usize },
    #[error("class vocabularies differ between summary model and original labels")]
    ClassMismatch,
    #[error("mapping covers {mapping} nodes but the original graph has {graph}")]
    MappingLength { mapping: usize, graph: usize },
}

/// Bookkeeping of what was copied and what stayed at its random init.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransferReport {
    /// Original nodes whose rows were copied from their partition.
    pub transferred_nodes: usize,
    /// Original nodes without a usable partition; their rows stay random.
    pub unmapped_nodes: usize,
    /// Relations present in both models.
    pub transferred_relations: usize,
    /// Relations of the original graph that the summary model lacks.
    pub original_only_relations: usize,
    /// Relations of the summary model absent from the original graph.
    pub summary_only_relations: usize,
    /// First-layer relation rows left random although the relation exists
    /// in both models.
    pub random_rows: usize,
}

impl TransferReport {
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TransferReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "transferred_nodes={}", self.transferred_nodes)?;
        writeln!(f, "unmapped_nodes={}", self.unmapped_nodes)?;
        writeln!(f, "transferred_relations={}", self.transferred_relations)?;
        writeln!(
            f,
            "original_only_relations={}",
            self.original_only_relations
        )?;
        writeln!(f, "summary_only_relations={}", self.summary_only_relations)?;
        writeln!(f, "random_rows={}", self.random_rows)
    }
}

/// Builds parameters for `original` from a summary model.
///
/// `partition_of[v]` names the summary-model node whose rows node `v`
/// inherits. Everything not covered is taken from
/// `RgcnParams::glorot(original, hidden, classes.len(), seed)`, so passing
/// the baseline's seed makes the untransferred part identical to the
/// baseline's initialization.
pub fn transfer_params(
    summary: &RgcnModel,
    partition_of: &[Option<PartitionId>],
    original: &MessagePassingStructure,
    classes: &[String],
    hidden: usize,
    seed: u64,
) -> Result<(RgcnParams, TransferReport), TransferError> {
    let sp = &summary.params;
    if sp.hidden != hidden {
        return Err(TransferError::HiddenMismatch {
            summary: sp.hidden,
            original: hidden,
        });
    }
    if summary.classes != classes {
        return Err(TransferError::ClassMismatch);
    }
    if partition_of.len() != original.num_nodes() {
        return Err(TransferError::MappingLength {
            mapping: partition_of.len(),
            graph: original.num_nodes(),
        });
    }
    let source: Vec<Option<NodeId>> = partition_of
        .iter()
        .map(|p| p.filter(|&s| s < sp.num_nodes))
        .collect();

    let mut params = RgcnParams::glorot(original, hidden, classes.len(), seed);
    let mut report = TransferReport {
        transferred_nodes: source.iter().flatten().count(),
        ..TransferReport::default()
    };
    report.unmapped_nodes = original.num_nodes() - report.transferred_nodes;

    for (v, s) in source.iter().enumerate() {
        if let Some(s) = *s {
            params
                .input_self
                .row_mut(v)
                .copy_from_slice(sp.input_self.row(s));
        }
    }
    params.output_self = sp.output_self.clone();

    let keys = original.relation_keys();
    let matched: Vec<Option<usize>> = keys
        .iter()
        .map(|k| summary.relations.iter().position(|sk| sk == k))
        .collect();
    report.transferred_relations = matched.iter().flatten().count();
    report.original_only_relations = keys.len() - report.transferred_relations;
    report.summary_only_relations = summary
        .relations
        .iter()
        .filter(|k| !keys.contains(k))
        .count();

    let random_rows: usize = params
        .input_rel
        .par_iter_mut()
        .zip(params.output_rel.par_iter_mut())
        .zip(matched.par_iter())
        .map(|((block, out), m)| {
            let Some(r) = *m else { return 0 };
            out.clone_from(&sp.output_rel[r]);
            let from = &sp.input_rel[r];
            let mut missing = 0;
            for (row, &v) in block.nodes.iter().enumerate() {
                match source[v].and_then(|s| from.row_of(s)) {
                    Some(src) => block
                        .weights
                        .row_mut(row)
                        .copy_from_slice(from.weights.row(src)),
                    None => missing += 1,
                }
            }
            missing
        })
        .sum();
    report.random_rows = random_rows;
    Ok((params, report))
}

/// Per-layer freezing flags consumed by training.
pub fn freeze_plan(layer1: bool, layer2: bool) -> FreezePlan {
    FreezePlan::new(layer1, layer2)
}
