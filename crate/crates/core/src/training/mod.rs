//! Loss assembly, Adam and the full-batch training loop.

mod adam;
mod loss;
mod train;

pub use adam::{adam_step, AdamState};
pub use loss::{assemble_loss, LossBreakdown, LossData, LossObjective, LossWeights};
pub use train::{
    check_arch, prepare, train, train_with, HistoryRecord, Prepared, TrainConfig, TrainHistory,
    TrainOutcome,
};
