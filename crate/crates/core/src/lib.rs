//! Structural summaries of RDF-style graphs and transfer of featureless
//! R-GCN parameters from a summary back to the graph it condenses.

pub mod graph;
pub mod labels;
pub mod pipeline;
pub mod rgcn;
pub mod summary;
pub mod transfer;
