//! The answer policy and its training machinery: featurization, the MLP
//! forward pass, sampling, reverse-mode differentiation, and AdamW.

mod adamw;
mod feature;
mod graph;
mod mlp;

pub use adamw::{adamw_update, AdamHyper, AdamState};
pub use feature::{featurize, FeatureConfig, PARAM_SLOTS};
pub use graph::{Gradients, Graph, NodeId};
pub use mlp::{
    forward, logprob_node, AnswerDistribution, ParamLeaves, PolicyError, PolicyParams, N_ANSWERS,
};
