//! Two-layer featureless R-GCN.
//!
//! With one-hot node inputs the first layer reduces to row lookups: the
//! message from `j` under relation `r` is row `j` of `W_r`, and the self
//! term is row `i` of `W_0`. Only rows of actual message senders are
//! stored per relation.
//!
//! ```text
//! pre_i    = W0[i] + Σ_r Σ_{j ∈ N_i^r} W_r[j] / c_{i,r}
//! h_i      = relu(pre_i)
//! logit_i  = h_i V0 + Σ_r (Σ_{j ∈ N_i^r} h_j / c_{i,r}) V_r
//! p_i      = sigmoid(logit_i)
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matrix::{add_outer, add_row_times, add_row_times_transpose, axpy, DenseMatrix};
use super::structure::MessagePassingStructure;
use super::RgcnError;
use crate::graph::NodeId;
use crate::labels::LabelMatrix;

pub const DEFAULT_HIDDEN: usize = 16;

/// First-layer weights for one relation, restricted to its senders.
#[derive(Debug, Clone, PartialEq)]
pub struct InputBlock {
    /// Sorted node ids, one per row of `weights`.
    pub nodes: Vec<NodeId>,
    pub weights: DenseMatrix,
}

impl InputBlock {
    pub fn row_of(&self, node: NodeId) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgcnParams {
    pub num_nodes: usize,
    pub hidden: usize,
    pub classes: usize,
    /// Per relation, aligned with the structure's relation order.
    pub input_rel: Vec<InputBlock>,
    /// Self weights of the first layer, `num_nodes × hidden`.
    pub input_self: DenseMatrix,
    /// Per relation, `hidden × classes`.
    pub output_rel: Vec<DenseMatrix>,
    pub output_self: DenseMatrix,
}

impl RgcnParams {
    pub fn zeros(structure: &MessagePassingStructure, hidden: usize, classes: usize) -> Self {
        let n = structure.num_nodes();
        RgcnParams {
            num_nodes: n,
            hidden,
            classes,
            input_rel: structure
                .relations()
                .iter()
                .map(|r| InputBlock {
                    nodes: r.sources.clone(),
                    weights: DenseMatrix::zeros(r.sources.len(), hidden),
                })
                .collect(),
            input_self: DenseMatrix::zeros(n, hidden),
            output_rel: structure
                .relations()
                .iter()
                .map(|_| DenseMatrix::zeros(hidden, classes))
                .collect(),
            output_self: DenseMatrix::zeros(hidden, classes),
        }
    }

    /// Glorot-uniform initialization. Bounds use the full conceptual
    /// shapes (`num_nodes × hidden` for first-layer relation matrices).
    pub fn glorot(
        structure: &MessagePassingStructure,
        hidden: usize,
        classes: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = structure.num_nodes();
        let b1 = glorot_bound(n, hidden);
        let b2 = glorot_bound(hidden, classes);
        let input_self = DenseMatrix::uniform(n, hidden, b1, &mut rng);
        let input_rel = structure
            .relations()
            .iter()
            .map(|r| InputBlock {
                nodes: r.sources.clone(),
                weights: DenseMatrix::uniform(r.sources.len(), hidden, b1, &mut rng),
            })
            .collect();
        let output_self = DenseMatrix::uniform(hidden, classes, b2, &mut rng);
        let output_rel = structure
            .relations()
            .iter()
            .map(|_| DenseMatrix::uniform(hidden, classes, b2, &mut rng))
            .collect();
        RgcnParams {
            num_nodes: n,
            hidden,
            classes,
            input_rel,
            input_self,
            output_rel,
            output_self,
        }
    }

    /// Checks that the weight layout matches `structure`.
    pub fn check_structure(&self, structure: &MessagePassingStructure) -> Result<(), RgcnError> {
        let mismatch = |what: String| Err(RgcnError::Shape(what));
        if self.num_nodes != structure.num_nodes() {
            return mismatch(format!(
                "parameters cover {} nodes, graph has {}",
                self.num_nodes,
                structure.num_nodes()
            ));
        }
        if self.input_rel.len() != structure.relations().len()
            || self.output_rel.len() != structure.relations().len()
        {
            return mismatch(format!(
                "parameters have {} relations, graph has {}",
                self.input_rel.len(),
                structure.relations().len()
            ));
        }
        if self.input_self.shape() != (self.num_nodes, self.hidden)
            || self.output_self.shape() != (self.hidden, self.classes)
        {
            return mismatch("self weight shape".into());
        }
        for (i, (block, rel)) in self.input_rel.iter().zip(structure.relations()).enumerate() {
            if block.nodes != rel.sources
                || block.weights.shape() != (rel.sources.len(), self.hidden)
            {
                return mismatch(format!("first-layer rows of relation {} ({})", i, rel.key));
            }
        }
        if self
            .output_rel
            .iter()
            .any(|m| m.shape() != (self.hidden, self.classes))
        {
            return mismatch("second-layer relation weight shape".into());
        }
        Ok(())
    }

    /// Weight blocks of the first layer followed by the second layer.
    pub fn blocks(&self) -> impl Iterator<Item = (Layer, &DenseMatrix)> {
        std::iter::once(&self.input_self)
            .chain(self.input_rel.iter().map(|b| &b.weights))
            .map(|m| (Layer::Input, m))
            .chain(
                std::iter::once(&self.output_self)
                    .chain(self.output_rel.iter())
                    .map(|m| (Layer::Output, m)),
            )
    }

    pub fn blocks_mut(&mut self) -> impl Iterator<Item = (Layer, &mut DenseMatrix)> {
        std::iter::once(&mut self.input_self)
            .chain(self.input_rel.iter_mut().map(|b| &mut b.weights))
            .map(|m| (Layer::Input, m))
            .chain(
                std::iter::once(&mut self.output_self)
                    .chain(self.output_rel.iter_mut())
                    .map(|m| (Layer::Output, m)),
            )
    }

    pub fn num_parameters(&self) -> usize {
        self.blocks().map(|(_, m)| m.as_slice().len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().all(|(_, m)| m.is_finite())
    }
}

pub(crate) fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out).max(1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Input,
    Output,
}

impl Layer {
    pub fn number(self) -> usize {
        match self {
            Layer::Input => 1,
            Layer::Output => 2,
        }
    }
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub pre_hidden: DenseMatrix,
    pub hidden: DenseMatrix,
    /// Per relation, normalized neighbor sums of `hidden`, indexed by target slot.
    pub aggregated: Vec<DenseMatrix>,
    pub logits: DenseMatrix,
    pub probs: DenseMatrix,
}

pub fn forward(
    structure: &MessagePassingStructure,
    params: &RgcnParams,
) -> Result<ForwardPass, RgcnError> {
    params.check_structure(structure)?;
    let n = structure.num_nodes();
    let h = params.hidden;
    let c = params.classes;

    let mut pre_hidden = params.input_self.clone();
    for (rel, block) in structure.relations().iter().zip(&params.input_rel) {
        for arc in &rel.arcs {
            axpy(
                pre_hidden.row_mut(arc.target),
                arc.norm,
                block.weights.row(arc.source_slot),
            );
        }
    }
    if !pre_hidden.is_finite() {
        return Err(RgcnError::NumericFault {
            layer: 1,
            epoch: None,
        });
    }
    let mut hidden = pre_hidden.clone();
    for v in hidden.as_mut_slice() {
        *v = v.max(0.0);
    }

    let mut logits = DenseMatrix::zeros(n, c);
    for i in 0..n {
        add_row_times(logits.row_mut(i), hidden.row(i), &params.output_self);
    }
    let mut aggregated = Vec::with_capacity(structure.relations().len());
    for (rel, weight) in structure.relations().iter().zip(&params.output_rel) {
        let mut agg = DenseMatrix::zeros(rel.targets.len(), h);
        for arc in &rel.arcs {
            axpy(
                agg.row_mut(arc.target_slot),
                arc.norm,
                hidden.row(arc.source),
            );
        }
        for (slot, &t) in rel.targets.iter().enumerate() {
            add_row_times(logits.row_mut(t), agg.row(slot), weight);
        }
        aggregated.push(agg);
    }
    if !logits.is_finite() {
        return Err(RgcnError::NumericFault {
            layer: 2,
            epoch: None,
        });
    }
    let mut probs = logits.clone();
    for v in probs.as_mut_slice() {
        *v = sigmoid(*v);
    }
    Ok(ForwardPass {
        pre_hidden,
        hidden,
        aggregated,
        logits,
        probs,
    })
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Exact gradients of the mean BCE over `rows` × all classes.
///
/// Sigmoid and BCE are fused: the logit gradient is `(p - t) / (|rows| C)`.
pub fn backward(
    structure: &MessagePassingStructure,
    params: &RgcnParams,
    pass: &ForwardPass,
    targets: &LabelMatrix,
    rows: &[NodeId],
) -> Result<RgcnParams, RgcnError> {
    params.check_structure(structure)?;
    let n = structure.num_nodes();
    let (h, c) = (params.hidden, params.classes);
    if targets.num_rows() != n || targets.num_classes() != c {
        return Err(RgcnError::Shape(format!(
            "targets are {}×{}, model expects {}×{}",
            targets.num_rows(),
            targets.num_classes(),
            n,
            c
        )));
    }
    if rows.is_empty() {
        return Err(RgcnError::EmptyRows);
    }
    let mut grads = RgcnParams::zeros(structure, h, c);
    let scale = 1.0 / (rows.len() * c) as f64;
    let mut dlogits = DenseMatrix::zeros(n, c);
    let mut active = vec![false; n];
    for &i in rows {
        active[i] = true;
        for ((d, &p), &t) in dlogits
            .row_mut(i)
            .iter_mut()
            .zip(pass.probs.row(i))
            .zip(targets.row(i))
        {
            *d += (p - t) * scale;
        }
    }

    let mut dhidden = DenseMatrix::zeros(n, h);
    for i in (0..n).filter(|&i| active[i]) {
        add_outer(&mut grads.output_self, pass.hidden.row(i), dlogits.row(i));
        add_row_times_transpose(dhidden.row_mut(i), dlogits.row(i), &params.output_self);
    }
    let mut dagg = vec![0.0; h];
    for (r, rel) in structure.relations().iter().enumerate() {
        let mut dagg_rows = DenseMatrix::zeros(rel.targets.len(), h);
        let mut any = false;
        for (slot, &t) in rel.targets.iter().enumerate() {
            if !active[t] {
                continue;
            }
            any = true;
            add_outer(
                &mut grads.output_rel[r],
                pass.aggregated[r].row(slot),
                dlogits.row(t),
            );
            dagg.fill(0.0);
            add_row_times_transpose(&mut dagg, dlogits.row(t), &params.output_rel[r]);
            dagg_rows.row_mut(slot).copy_from_slice(&dagg);
        }
        if any {
            for arc in &rel.arcs {
                if active[arc.target] {
                    axpy(
                        dhidden.row_mut(arc.source),
                        arc.norm,
                        dagg_rows.row(arc.target_slot),
                    );
                }
            }
        }
    }

    let mut dpre = dhidden;
    for (d, &pre) in dpre
        .as_mut_slice()
        .iter_mut()
        .zip(pass.pre_hidden.as_slice())
    {
        if pre <= 0.0 {
            *d = 0.0;
        }
    }
    for (rel, block) in structure.relations().iter().zip(grads.input_rel.iter_mut()) {
        for arc in &rel.arcs {
            axpy(
                block.weights.row_mut(arc.source_slot),
                arc.norm,
                dpre.row(arc.target),
            );
        }
    }
    grads.input_self = dpre;
    Ok(grads)
}
