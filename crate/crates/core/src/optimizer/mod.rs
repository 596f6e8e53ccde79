//! The editing procedure: a target point in embedding space, a loss made of
//! embedding, perceptual and latent terms, and normalized-gradient descent on
//! the latent code with all networks frozen.

mod fgm;
mod loss;
mod run;
mod target;

pub use fgm::fgm_step;
pub use loss::{
    embedding_loss, embedding_loss_and_grad, latent_loss, latent_loss_and_grad, perceptual_loss,
    perceptual_loss_and_grad, total_loss, total_loss_and_grad, LossBreakdown, LossContext,
};
pub use run::{optimize, prepare, OptimizeOutput, Prepared, Trajectory};
pub use target::{compute_target, TARGET_DRAW_BASE};
