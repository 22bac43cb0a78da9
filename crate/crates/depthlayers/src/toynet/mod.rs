//! Desk-scale learned refinement backend: a tape-based reverse-mode
//! differentiation core, the two-branch encoder-decoder, the composite loss,
//! the AdamW trainer, and the backend exporter.

pub mod backend;
pub mod gradcheck;
pub mod graph;
pub mod loss;
pub mod model;
pub mod optim;
pub mod train;

pub use backend::{export_backend, ToynetBackend};
pub use graph::{Graph, NodeId};
pub use loss::{composite_loss, LossParts};
pub use model::{forward, ModelParams, NetWidths};
pub use optim::{lr_at, AdamW, OptimConfig};
pub use train::{
    run_stage, train_stage1, train_stage2, LossRow, TrainConfig, TrainOutcome,
};
