use super::adam::{AdamConfig, AdamState, FreezePlan};
use super::loss::{bce_loss, evaluate, Metrics};
use super::model::{backward, forward, ForwardPass, RgcnParams};
use super::structure::MessagePassingStructure;
use super::RgcnError;
use crate::graph::NodeId;
use crate::labels::LabelMatrix;

pub const DEFAULT_EPOCHS: usize = 51;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: AdamConfig,
    pub freeze: FreezePlan,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: DEFAULT_EPOCHS,
            adam: AdamConfig::default(),
            freeze: FreezePlan::default(),
        }
    }
}

/// Binary targets and rows scored after every epoch.
#[derive(Debug, Clone, Copy)]
pub struct EvalSet<'a> {
    pub targets: &'a LabelMatrix,
    pub rows: &'a [NodeId],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Training loss of this epoch's forward pass, before the update.
    pub loss: f64,
    /// Scores after this epoch's update, when an eval set is attached.
    pub metrics: Option<Metrics>,
}

/// Loss on `train_rows` and, when given, metrics on the eval set for the
/// current parameters without training.
pub fn assess(
    structure: &MessagePassingStructure,
    params: &RgcnParams,
    targets: &LabelMatrix,
    train_rows: &[NodeId],
    eval: Option<EvalSet<'_>>,
) -> Result<(f64, Option<Metrics>), RgcnError> {
    let pass = forward(structure, params)?;
    let loss = bce_loss(&pass.probs, targets, train_rows)?;
    let metrics = eval
        .map(|e| evaluate(&pass.probs, e.targets, e.rows))
        .transpose()?;
    Ok((loss, metrics))
}

/// Full-batch training: forward, loss, backward, freeze, Adam step.
pub fn train(
    structure: &MessagePassingStructure,
    params: &mut RgcnParams,
    targets: &LabelMatrix,
    train_rows: &[NodeId],
    config: &TrainConfig,
    eval: Option<EvalSet<'_>>,
) -> Result<Vec<EpochRecord>, RgcnError> {
    train_observed(structure, params, targets, train_rows, config, eval, |_| {})
}

/// [`train`], calling `observe` as soon as each epoch finishes.
pub fn train_observed(
    structure: &MessagePassingStructure,
    params: &mut RgcnParams,
    targets: &LabelMatrix,
    train_rows: &[NodeId],
    config: &TrainConfig,
    eval: Option<EvalSet<'_>>,
    mut observe: impl FnMut(&EpochRecord),
) -> Result<Vec<EpochRecord>, RgcnError> {
    let mut state = AdamState::new(config.adam, params);
    let at_epoch = |e: usize| move |err: RgcnError| err.at_epoch(e);
    let mut pass: ForwardPass = forward(structure, params).map_err(at_epoch(1))?;
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let loss = bce_loss(&pass.probs, targets, train_rows)?;
        if !loss.is_finite() {
            return Err(RgcnError::NumericFault {
                layer: 2,
                epoch: Some(epoch),
            });
        }
        let mut grads = backward(structure, params, &pass, targets, train_rows)?;
        config.freeze.apply(&mut grads);
        state.step(params, &grads, config.freeze)?;
        if !params.is_finite() {
            return Err(RgcnError::NumericFault {
                layer: 1,
                epoch: Some(epoch),
            });
        }
        pass = forward(structure, params).map_err(at_epoch(epoch))?;
        let metrics = eval
            .map(|e| evaluate(&pass.probs, e.targets, e.rows))
            .transpose()?;
        let record = EpochRecord {
            epoch,
            loss,
            metrics,
        };
        observe(&record);
        history.push(record);
    }
    Ok(history)
}
