//! Featureless two-layer R-GCN with a sigmoid multi-label head, trained
//! with hand-written reverse-mode gradients and Adam.

mod adam;
mod checkpoint;
mod loss;
mod matrix;
mod model;
mod structure;
mod train;

pub use adam::{adam_update, AdamConfig, AdamState, FreezePlan};
pub use checkpoint::{
    CheckpointError, RgcnModel, MAGIC as CHECKPOINT_MAGIC, VERSION as CHECKPOINT_VERSION,
};
pub use loss::{bce_loss, evaluate, Metrics, PROB_EPS};
pub use matrix::DenseMatrix;
pub use model::{backward, forward, ForwardPass, InputBlock, Layer, RgcnParams, DEFAULT_HIDDEN};
pub use structure::{Arc, MessagePassingStructure, RelationAdjacency, RelationKey};
pub use train::{assess, train, train_observed, EpochRecord, EvalSet, TrainConfig, DEFAULT_EPOCHS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RgcnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("row subset is empty")]
    EmptyRows,
    #[error("evaluation targets must be binary")]
    NonBinaryTargets,
    #[error("numeric fault (NaN or infinity) in layer {layer}{}", epoch.map(|e| format!(" at epoch {e}")).unwrap_or_default())]
    NumericFault { layer: usize, epoch: Option<usize> },
}

impl RgcnError {
    pub(crate) fn at_epoch(self, e: usize) -> Self {
        match self {
            RgcnError::NumericFault { layer, .. } => RgcnError::NumericFault {
                layer,
                epoch: Some(e),
            },
            other => other,
        }
    }
}
