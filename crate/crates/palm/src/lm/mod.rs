//! The assembled language model: embeddings, stacked recurrent layers, the
//! span-attention block inserted before the last layer, a tied output
//! projection, and the joint training objective.

mod model;
mod optim;
mod train;

pub use model::{
    lm_loss, CarriedState, ForwardOptions, ForwardResult, LanguageModel, ModelConfig, StepRecord,
    SupervisionSet, WindowSupervision,
};
pub use optim::{clip_global_norm, Adam, Asgd, Optimizer};
pub use train::{
    evaluate_ppl, joint_loss, train_epoch, EpochStats, EvalStats, LossBreakdown, TrainOptions,
};
