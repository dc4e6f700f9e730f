//! Word masking, the learning-rate schedule, momentum SGD and the training loop.

mod masking;
mod optim;
mod trainer;

pub use masking::{compute_content_rate, select_mask_targets, ContentRate, MaskPlan, MaskStrategy};
pub use optim::{Momentum, Schedule};
pub use trainer::{batch_indices, clip_global_norm, train, IterationLog, TrainSetup};
