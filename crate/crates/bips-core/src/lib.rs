//! Desk-scale study of perceptual grounding for chart question answering.
//!
//! The crate covers the full loop: a line-oriented chart DSL with exact
//! decimal coordinates ([`chartdsl`]), a deterministic grayscale rasterizer
//! ([`render`]), question generation with symbolic ground truth and edited
//! evidence views ([`viewgen`]), a small MLP answer policy with tape-based
//! reverse-mode differentiation ([`policy`]), group-relative policy
//! optimization with consistency and separation KL terms ([`shaping`]), and a
//! two-stage curriculum trainer with ablation modes ([`trainer`]).

pub mod chartdsl;
pub mod policy;
pub mod render;
pub mod rng;
pub mod shaping;
pub mod trainer;
pub mod viewgen;
