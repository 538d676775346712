//! Training objectives: verifiable rewards, group-relative advantages, exact
//! KL divergences, the clipped policy-gradient surrogate, and the two
//! counterfactual shaping terms (a consistency pull toward the
//! evidence-preserving view and a separation push away from the
//! evidence-ablated view), composed per curriculum stage.

mod config;
mod losses;

pub use config::TrainConfig;
pub use losses::{
    compute_reward, consistency_node, grpo_loss_node, group_advantages, kl_divergence, kl_node,
    separation_node, stage_objective, GrpoInputs, GrpoNodes, LossReport, Reward, Rollout,
    RolloutGroup, ShapingError, StageTag, METRICS_HEADER,
};
