//! Small generator/discriminator networks with hand-written backward passes,
//! least-squares GAN losses and the DFN-constrained generator objective.

mod checkpoint;
mod layers;
mod loss;
mod network;
mod optim;
mod tensor;
mod train;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use layers::LayerSpec;
pub use loss::{d_loss, d_loss_grad, g_loss, g_ls_loss, hinge_penalty, GLossParts};
pub use network::{discriminator_layers, generator_layers, ForwardCache, Network};
pub use optim::Adam;
pub use tensor::Tensor4;
pub use train::{
    batch_dfn, generator_objective, train_step, DfnView, GanConfig, GanModel, PenaltyMode, StepReport, TrainState,
};

use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum GanError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(&'static str),
    #[error("non-finite loss at iteration {iter}: {detail}")]
    NonFiniteLoss { iter: u64, detail: String },
    #[error("checkpoint checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
