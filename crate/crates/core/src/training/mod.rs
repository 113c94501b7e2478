//! Contrastive objectives, negative sampling and the optimizer.

mod batch;
mod bi_encoder;
mod loss;
mod optimizer;
mod triple;

pub use batch::{batch_objective, BatchEmbeddings, BatchGradients, NegativeSets};
pub use bi_encoder::{
    anchor_term_active, assemble_batch, batch_ranges, loss_and_gradients, train_step, AnchorPathway,
    AnchorsCompiledOut, AnchorsEnabled, StepOutput, TrainingItem, TAU_RANGE,
};
pub use loss::{info_nce, loss_anchor, loss_classic, loss_combined, InfoNce, LossBreakdown};
pub use optimizer::OptimizerState;
pub use triple::{
    anchor_pool, assemble_triple_batch, cosine_with_grads, triple_loss_and_gradients, triple_train_step, TripleItem,
};
