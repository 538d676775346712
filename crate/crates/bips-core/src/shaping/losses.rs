//! Loss arithmetic: rewards, advantages, exact KL, the clipped surrogate,
//! both counterfactual shaping terms, and per-stage composition.
//!
//! Graph-building functions return node ids on a caller-owned tape so a
//! whole batch objective differentiates in one backward pass. Every `sg[..]`
//! target enters the tape as a constant: the caller evaluates the target
//! distribution with the current parameters and passes its logprobs by
//! value, which is exactly stop-gradient semantics.

use crate::policy::{AnswerDistribution, Graph, NodeId, N_ANSWERS};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ShapingError {
    #[error("domain: {0}")]
    Domain(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("rollout group needs at least 2 rollouts, got {0}")]
    GroupTooSmall(usize),
    #[error("stage `{stage}` needs a {fragment} fragment")]
    MissingFragment { stage: &'static str, fragment: &'static str },
    #[error("config: {0}")]
    Config(String),
}

/// Verifiable reward split into its two components. The gate for the
/// consistency term is the `correct` flag alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reward {
    pub format_ok: bool,
    pub correct: bool,
}

impl Reward {
    pub fn value(self) -> f64 {
        0.1 * f64::from(u8::from(self.format_ok)) + 0.9 * f64::from(u8::from(self.correct))
    }
}

/// Scores one sampled option against the item's answer. Options drawn from
/// the four answer slots are well-formed by construction; the format
/// component exists for the general reward decomposition.
pub fn compute_reward(option_index: u8, answer_index: u8) -> Reward {
    Reward { format_ok: option_index < N_ANSWERS as u8, correct: option_index == answer_index }
}

/// One sampled answer with the logprob it had under the rollout-time policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rollout {
    pub option_index: u8,
    pub old_logprob: f64,
    pub reward: Reward,
}

/// All rollouts for one item plus their normalized advantages.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutGroup {
    pub item_index: usize,
    pub rollouts: Vec<Rollout>,
    pub advantages: Vec<f64>,
}

impl RolloutGroup {
    pub fn new(item_index: usize, rollouts: Vec<Rollout>) -> Result<RolloutGroup, ShapingError> {
        let rewards: Vec<f64> = rollouts.iter().map(|r| r.reward.value()).collect();
        let advantages = group_advantages(&rewards)?;
        Ok(RolloutGroup { item_index, rollouts, advantages })
    }

    /// Fraction of rollouts whose correctness gate is open.
    pub fn correct_fraction(&self) -> f64 {
        let n = self.rollouts.iter().filter(|r| r.reward.correct).count();
        n as f64 / self.rollouts.len() as f64
    }
}

/// Standardizes rewards within a group: zero mean, and unit variance except
/// for constant-reward groups, which get all-zero advantages. The constant
/// case is detected by comparing the reward values themselves; a computed
/// variance can round to a nonzero denormal for a constant group (eight
/// copies of 0.1 do not sum to 0.8 exactly), which would turn the zeros
/// into spurious unit advantages.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, ShapingError> {
    if rewards.len() < 2 {
        return Err(ShapingError::GroupTooSmall(rewards.len()));
    }
    if rewards.iter().all(|r| *r == rewards[0]) {
        return Ok(vec![0.0; rewards.len()]);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// Exact `KL(p || q)` over the four answer slots. Slots with `p_i = 0`
/// contribute nothing; a zero `q_i` under positive `p_i` is an error.
pub fn kl_divergence(
    p: &AnswerDistribution,
    q: &AnswerDistribution,
) -> Result<f64, ShapingError> {
    let mut acc = 0.0;
    for i in 0..N_ANSWERS {
        if p.probs[i] > 0.0 {
            if q.probs[i] <= 0.0 {
                return Err(ShapingError::Domain(format!(
                    "KL undefined: q has no mass on slot {i} but p does"
                )));
            }
            acc += p.probs[i] * (p.logprobs[i] - q.logprobs[i]);
        }
    }
    Ok(acc)
}

/// Tape node for `KL(softmax(lp) || target)` where `lp` is a logprob vector
/// node and the target logprobs enter as constants (stop-gradient).
pub fn kl_node(g: &mut Graph, lp: NodeId, target_logprobs: &[f64; N_ANSWERS]) -> NodeId {
    let lq = g.constant(target_logprobs.to_vec());
    let p = g.exp(lp);
    let diff = g.sub(lp, lq);
    let terms = g.mul(p, diff);
    g.sum(terms)
}

/// Per-group inputs to the clipped surrogate, recorded at rollout time.
#[derive(Debug, Clone)]
pub struct GrpoInputs<'a> {
    pub options: &'a [u8],
    pub old_logprobs: &'a [f64],
    pub advantages: &'a [f64],
    /// Logprobs of the stage-entry reference policy on this item.
    pub ref_logprobs: [f64; N_ANSWERS],
    pub epsilon: f64,
    pub gamma: f64,
}

pub struct GrpoNodes {
    pub loss: NodeId,
    pub kl_to_ref: NodeId,
    /// Fraction of rollouts whose ratio left `[1 - eps, 1 + eps]`.
    pub clip_fraction: f64,
}

/// Builds `-mean_i min(ratio_i A_i, clip(ratio_i) A_i) + gamma KL(pi || ref)`
/// for one group on the tape. `lp` is the current policy's logprob vector
/// node for the item.
pub fn grpo_loss_node(
    g: &mut Graph,
    lp: NodeId,
    inputs: &GrpoInputs,
) -> Result<GrpoNodes, ShapingError> {
    let n = inputs.options.len();
    if n == 0 || inputs.old_logprobs.len() != n || inputs.advantages.len() != n {
        return Err(ShapingError::Domain(format!(
            "group shape mismatch: {n} options, {} old logprobs, {} advantages",
            inputs.old_logprobs.len(),
            inputs.advantages.len()
        )));
    }
    for (name, values) in [("old_logprob", inputs.old_logprobs), ("advantage", inputs.advantages)]
    {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ShapingError::NonFinite(name.to_string()));
        }
    }
    let (lo, hi) = (1.0 - inputs.epsilon, 1.0 + inputs.epsilon);
    let mut terms = Vec::with_capacity(n);
    let mut clipped_count = 0usize;
    for i in 0..n {
        let picked = g.index(lp, inputs.options[i] as usize);
        let old = g.scalar_const(inputs.old_logprobs[i]);
        let logratio = g.sub(picked, old);
        let ratio = g.exp(logratio);
        let r = g.scalar(ratio);
        if !(lo..=hi).contains(&r) {
            clipped_count += 1;
        }
        let unclipped = g.scale(ratio, inputs.advantages[i]);
        let clamped = g.clamp(ratio, lo, hi);
        let clipped = g.scale(clamped, inputs.advantages[i]);
        terms.push(g.min(unclipped, clipped));
    }
    let surrogate = g.mean(&terms);
    let neg = g.neg(surrogate);
    let kl_to_ref = kl_node(g, lp, &inputs.ref_logprobs);
    let penalty = g.scale(kl_to_ref, inputs.gamma);
    let loss = g.add(neg, penalty);
    Ok(GrpoNodes { loss, kl_to_ref, clip_fraction: clipped_count as f64 / n as f64 })
}

/// Consistency pull: `gate * min(c_cons, KL(pi(I) || sg pi(I_pres)))` where
/// `gate` is the fraction of correct rollouts. A closed gate contributes an
/// exact constant zero.
pub fn consistency_node(
    g: &mut Graph,
    lp: NodeId,
    pres_logprobs: &[f64; N_ANSWERS],
    correct_fraction: f64,
    c_cons: f64,
) -> NodeId {
    if correct_fraction == 0.0 {
        return g.scalar_const(0.0);
    }
    let kl = kl_node(g, lp, pres_logprobs);
    let capped = g.min_const(c_cons, kl);
    g.scale(capped, correct_fraction)
}

/// Separation push: `min(c_sep, KL(pi(I) || sg pi(I_abl)))`, ungated. The
/// stage objective subtracts it, so gradient pressure raises the KL until
/// the cap saturates.
pub fn separation_node(
    g: &mut Graph,
    lp: NodeId,
    abl_logprobs: &[f64; N_ANSWERS],
    c_sep: f64,
) -> NodeId {
    let kl = kl_node(g, lp, abl_logprobs);
    g.min_const(c_sep, kl)
}

/// Curriculum phase labels. `RevSep`/`RevCons` are the reversed-order
/// curriculum's phases; they compose like Stage2/Stage1 respectively but are
/// tagged distinctly in metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageTag {
    Stage1,
    Stage2,
    Joint,
    RevSep,
    RevCons,
}

impl StageTag {
    pub fn name(self) -> &'static str {
        match self {
            StageTag::Stage1 => "stage1",
            StageTag::Stage2 => "stage2",
            StageTag::Joint => "joint",
            StageTag::RevSep => "rev_sep",
            StageTag::RevCons => "rev_cons",
        }
    }

    pub fn parse(name: &str) -> Option<StageTag> {
        [
            StageTag::Stage1,
            StageTag::Stage2,
            StageTag::Joint,
            StageTag::RevSep,
            StageTag::RevCons,
        ]
        .into_iter()
        .find(|t| t.name() == name)
    }

    pub fn uses_consistency(self) -> bool {
        matches!(self, StageTag::Stage1 | StageTag::Joint | StageTag::RevCons)
    }

    pub fn uses_separation(self) -> bool {
        matches!(self, StageTag::Stage2 | StageTag::Joint | StageTag::RevSep)
    }

    /// Whether the phase trains only on items that have a preserving view.
    pub fn wants_pres_subset(self) -> bool {
        self.uses_consistency() && !self.uses_separation()
    }
}

/// Composes the total objective for a stage:
/// `l_grpo + alpha * l_cons - beta * l_sep`, with each shaping term present
/// only when the stage uses it.
pub fn stage_objective(
    g: &mut Graph,
    tag: StageTag,
    l_grpo: NodeId,
    l_cons: Option<NodeId>,
    l_sep: Option<NodeId>,
    alpha: f64,
    beta: f64,
) -> Result<NodeId, ShapingError> {
    let mut total = l_grpo;
    if tag.uses_consistency() {
        let cons = l_cons.ok_or(ShapingError::MissingFragment {
            stage: tag.name(),
            fragment: "consistency",
        })?;
        let scaled = g.scale(cons, alpha);
        total = g.add(total, scaled);
    }
    if tag.uses_separation() {
        let sep = l_sep.ok_or(ShapingError::MissingFragment {
            stage: tag.name(),
            fragment: "separation",
        })?;
        let scaled = g.scale(sep, beta);
        total = g.sub(total, scaled);
    }
    Ok(total)
}

/// Scalar summary of one optimizer step, mirrored into the metrics CSV.
/// Inactive terms are exact zeros, so stage isolation is visible in the log.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossReport {
    pub l_grpo: f64,
    pub l_cons: f64,
    pub l_sep: f64,
    pub l_total: f64,
    pub kl_to_ref: f64,
    pub kl_to_pres: f64,
    pub kl_to_abl: f64,
    pub clip_fraction: f64,
}

pub const METRICS_HEADER: &str =
    "step,stage,l_grpo,l_cons,l_sep,l_total,kl_to_ref,kl_to_pres,kl_to_abl,clip_fraction,accuracy";

impl LossReport {
    /// The composition the stage should have produced.
    pub fn expected_total(&self, tag: StageTag, alpha: f64, beta: f64) -> f64 {
        let mut total = self.l_grpo;
        if tag.uses_consistency() {
            total += alpha * self.l_cons;
        }
        if tag.uses_separation() {
            total -= beta * self.l_sep;
        }
        total
    }

    pub fn csv_row(&self, step: u64, tag: StageTag, accuracy: f64) -> String {
        format!(
            "{step},{},{},{},{},{},{},{},{},{},{}",
            tag.name(),
            self.l_grpo,
            self.l_cons,
            self.l_sep,
            self.l_total,
            self.kl_to_ref,
            self.kl_to_pres,
            self.kl_to_abl,
            self.clip_fraction,
            accuracy
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Graph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dist(probs: [f64; 4]) -> AnswerDistribution {
        AnswerDistribution::from_probs(probs, 1.0).unwrap()
    }

    #[test]
    fn reward_values_cover_the_decomposition() {
        assert_eq!(compute_reward(2, 2).value(), 1.0);
        assert_eq!(compute_reward(1, 2).value(), 0.1);
        assert_eq!(Reward { format_ok: false, correct: false }.value(), 0.0);
        assert_eq!(Reward { format_ok: false, correct: true }.value(), 0.9);
    }

    #[test]
    fn advantages_match_the_hand_computed_case() {
        let a = group_advantages(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        for (got, want) in a.iter().zip([1.0, 1.0, -1.0, -1.0]) {
            assert!((got - want).abs() < 1e-6, "{a:?}");
        }
        assert_eq!(group_advantages(&[0.7; 5]).unwrap(), vec![0.0; 5]);
        assert_eq!(group_advantages(&[1.0]), Err(ShapingError::GroupTooSmall(1)));
    }

    #[test]
    fn constant_groups_get_zero_advantages_despite_rounding() {
        // Eight copies of 0.1 sum to 0.7999999999999999 in f64, so the
        // computed variance is a nonzero denormal; the all-equal check must
        // still yield zeros, not tiny/tiny = 1.0 for every slot.
        assert_eq!(group_advantages(&[0.1; 8]).unwrap(), vec![0.0; 8]);
        for r in [0.0, 0.1, 0.3, 1.0] {
            for n in 2..=12 {
                let a = group_advantages(&vec![r; n]).unwrap();
                assert_eq!(a, vec![0.0; n], "constant reward {r} size {n}");
            }
        }
    }

    #[test]
    fn advantages_are_standardized_over_random_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.random_range(2..=12);
            let rewards: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 3.0).collect();
            let a = group_advantages(&rewards).unwrap();
            let mean = a.iter().sum::<f64>() / n as f64;
            assert!(mean.abs() < 1e-9, "mean {mean}");
            let var = a.iter().map(|x| x * x).sum::<f64>() / n as f64;
            assert!((var - 1.0).abs() < 1e-9, "var {var}");
        }
    }

    #[test]
    fn advantages_ignore_reward_shift_and_scale() {
        let base = [1.0, 0.1, 0.1, 1.0, 0.1];
        let a = group_advantages(&base).unwrap();
        let shifted: Vec<f64> = base.iter().map(|r| r + 7.5).collect();
        let scaled: Vec<f64> = base.iter().map(|r| r * 3.0).collect();
        for (x, y) in a.iter().zip(group_advantages(&shifted).unwrap()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.iter().zip(group_advantages(&scaled).unwrap()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_identity_symmetry_and_edge_cases() {
        let p = dist([0.1, 0.2, 0.3, 0.4]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);

        let q = dist([0.6, 0.2, 0.1, 0.1]);
        let pq = kl_divergence(&p, &q).unwrap();
        let qp = kl_divergence(&q, &p).unwrap();
        assert!(pq > 0.0 && qp > 0.0);
        assert!((pq - qp).abs() > 1e-6, "KL should not be symmetric");

        // Two near-point masses against uniform approach ln 2.
        let eps = 1e-12;
        let p2 = dist([0.5 - eps, 0.5 - eps, eps, eps]);
        let u = dist([0.25; 4]);
        assert!((kl_divergence(&p2, &u).unwrap() - f64::ln(2.0)).abs() < 1e-9);

        // Zero q mass under positive p mass is rejected.
        let q0 = dist([0.5, 0.5, 0.0, 0.0]);
        assert!(kl_divergence(&p, &q0).is_err());
        // ...but p may skip slots q covers.
        assert!(kl_divergence(&q0, &u).is_ok());
    }

    #[test]
    fn kl_node_agrees_with_the_scalar_oracle() {
        let logits = [0.3, -0.7, 1.1, 0.2];
        let p = AnswerDistribution::from_logits(logits, 1.0).unwrap();
        let q = dist([0.4, 0.1, 0.25, 0.25]);
        let mut g = Graph::new();
        let leaf = g.leaf(logits.to_vec());
        let lp = g.log_softmax(leaf);
        let node = kl_node(&mut g, lp, &q.logprobs);
        let want = kl_divergence(&p, &q).unwrap();
        assert!((g.scalar(node) - want).abs() < 1e-12);
    }

    /// Builds a logprob node over four leaf logits.
    fn lp_over(g: &mut Graph, logits: [f64; 4]) -> (NodeId, NodeId) {
        let leaf = g.leaf(logits.to_vec());
        let lp = g.log_softmax(leaf);
        (leaf, lp)
    }

    #[test]
    fn grpo_surrogate_is_zero_at_the_old_policy() {
        let logits = [0.4, -0.2, 0.9, 0.0];
        let mut g = Graph::new();
        let (_, lp) = lp_over(&mut g, logits);
        let lpv: [f64; 4] = g.value(lp).try_into().unwrap();
        let options = [0u8, 2, 2, 3];
        let old: Vec<f64> = options.iter().map(|&o| lpv[o as usize]).collect();
        let advantages = group_advantages(&[1.0, 1.0, 0.1, 0.1]).unwrap();
        let nodes = grpo_loss_node(
            &mut g,
            lp,
            &GrpoInputs {
                options: &options,
                old_logprobs: &old,
                advantages: &advantages,
                ref_logprobs: lpv,
                epsilon: 0.2,
                gamma: 0.0,
            },
        )
        .unwrap();
        assert!(g.scalar(nodes.loss).abs() < 1e-12);
        assert_eq!(nodes.clip_fraction, 0.0);
    }

    #[test]
    fn grpo_clip_cases_match_hand_evaluation() {
        // ratio 1.5, A = +1: min(1.5, 1.2) = 1.2, loss -1.2.
        let logits = [0.0, 0.3, -0.4, 0.1];
        let mut g = Graph::new();
        let (_, lp) = lp_over(&mut g, logits);
        let lpv: [f64; 4] = g.value(lp).try_into().unwrap();
        let old = [lpv[1] - 1.5f64.ln()];
        let nodes = grpo_loss_node(
            &mut g,
            lp,
            &GrpoInputs {
                options: &[1],
                old_logprobs: &old,
                advantages: &[1.0],
                ref_logprobs: lpv,
                epsilon: 0.2,
                gamma: 0.0,
            },
        )
        .unwrap();
        assert!((g.scalar(nodes.loss) + 1.2).abs() < 1e-12);
        assert_eq!(nodes.clip_fraction, 1.0);

        // ratio 0.5, A = -1: min(-0.5, -0.8) = -0.8, loss +0.8.
        let mut g = Graph::new();
        let (_, lp) = lp_over(&mut g, logits);
        let old = [lpv[1] - 0.5f64.ln()];
        let nodes = grpo_loss_node(
            &mut g,
            lp,
            &GrpoInputs {
                options: &[1],
                old_logprobs: &old,
                advantages: &[-1.0],
                ref_logprobs: lpv,
                epsilon: 0.2,
                gamma: 0.0,
            },
        )
        .unwrap();
        assert!((g.scalar(nodes.loss) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn grpo_gamma_adds_the_reference_kl() {
        let logits = [0.4, -0.2, 0.9, 0.0];
        let ref_dist = dist([0.25; 4]);
        let mut g = Graph::new();
        let (_, lp) = lp_over(&mut g, logits);
        let lpv: [f64; 4] = g.value(lp).try_into().unwrap();
        let nodes = grpo_loss_node(
            &mut g,
            lp,
            &GrpoInputs {
                options: &[0, 1],
                old_logprobs: &[lpv[0], lpv[1]],
                advantages: &[0.0, 0.0],
                ref_logprobs: ref_dist.logprobs,
                epsilon: 0.2,
                gamma: 0.01,
            },
        )
        .unwrap();
        let p = AnswerDistribution::from_logits(logits, 1.0).unwrap();
        let want = 0.01 * kl_divergence(&p, &ref_dist).unwrap();
        assert!((g.scalar(nodes.loss) - want).abs() < 1e-12);
        assert!((g.scalar(nodes.kl_to_ref) - want / 0.01).abs() < 1e-12);
    }

    #[test]
    fn closed_consistency_gate_is_an_exact_zero_with_no_gradient() {
        let mut g = Graph::new();
        let (leaf, lp) = lp_over(&mut g, [0.5, -0.5, 0.2, 0.0]);
        let target = dist([0.7, 0.1, 0.1, 0.1]);
        let node = consistency_node(&mut g, lp, &target.logprobs, 0.0, 1.0);
        assert_eq!(g.scalar(node), 0.0);
        assert_eq!(g.backward(node).of(leaf), &[0.0; 4]);
    }

    #[test]
    fn saturated_caps_zero_the_gradient() {
        // KL far above c_cons: value clips to the cap, gradient vanishes.
        let sharp = AnswerDistribution::from_logits([8.0, 0.0, 0.0, 0.0], 1.0).unwrap();
        let mut g = Graph::new();
        let (leaf, lp) = lp_over(&mut g, [0.0, 8.0, 0.0, 0.0]);
        let kl = {
            let here = AnswerDistribution::from_logits([0.0, 8.0, 0.0, 0.0], 1.0).unwrap();
            kl_divergence(&here, &sharp).unwrap()
        };
        assert!(kl > 1.0);
        let node = consistency_node(&mut g, lp, &sharp.logprobs, 1.0, 1.0);
        assert_eq!(g.scalar(node), 1.0);
        assert_eq!(g.backward(node).of(leaf), &[0.0; 4]);

        // Same for separation above c_sep.
        let mut g = Graph::new();
        let (leaf, lp) = lp_over(&mut g, [0.0, 8.0, 0.0, 0.0]);
        let node = separation_node(&mut g, lp, &sharp.logprobs, 0.2);
        assert_eq!(g.scalar(node), 0.2);
        assert_eq!(g.backward(node).of(leaf), &[0.0; 4]);
    }

    #[test]
    fn shaping_terms_track_small_kls_with_live_gradients() {
        let target = dist([0.3, 0.3, 0.2, 0.2]);
        let mut g = Graph::new();
        let (leaf, lp) = lp_over(&mut g, [0.1, 0.05, -0.1, 0.0]);
        let here = AnswerDistribution::from_logits([0.1, 0.05, -0.1, 0.0], 1.0).unwrap();
        let kl = kl_divergence(&here, &target).unwrap();
        assert!(kl < 0.2);
        let node = separation_node(&mut g, lp, &target.logprobs, 0.2);
        assert!((g.scalar(node) - kl).abs() < 1e-12);
        assert!(g.backward(node).of(leaf).iter().any(|&v| v != 0.0));

        // Identical predictions mean zero KL for both terms.
        let mut g = Graph::new();
        let (_, lp) = lp_over(&mut g, [0.1, 0.05, -0.1, 0.0]);
        let self_target: [f64; 4] = g.value(lp).try_into().unwrap();
        let cons = consistency_node(&mut g, lp, &self_target, 1.0, 1.0);
        assert!(g.scalar(cons).abs() < 1e-15);
        let sep = separation_node(&mut g, lp, &self_target, 0.2);
        assert!(g.scalar(sep).abs() < 1e-15);
    }

    #[test]
    fn stage_compositions_match_hand_arithmetic() {
        let mut g = Graph::new();
        let l_grpo = g.scalar_const(0.5);
        let l_cons = g.scalar_const(0.3);
        let l_sep = g.scalar_const(0.2);

        let s1 = stage_objective(&mut g, StageTag::Stage1, l_grpo, Some(l_cons), None, 0.01, 0.02)
            .unwrap();
        assert!((g.scalar(s1) - 0.503).abs() < 1e-12);

        let s2 = stage_objective(&mut g, StageTag::Stage2, l_grpo, None, Some(l_sep), 0.01, 0.02)
            .unwrap();
        assert!((g.scalar(s2) - 0.496).abs() < 1e-12);

        let joint = stage_objective(
            &mut g,
            StageTag::Joint,
            l_grpo,
            Some(l_cons),
            Some(l_sep),
            0.01,
            0.02,
        )
        .unwrap();
        assert!((g.scalar(joint) - 0.499).abs() < 1e-12);

        // With both coefficients zero every stage degenerates to l_grpo.
        for tag in [StageTag::Stage1, StageTag::Stage2, StageTag::Joint, StageTag::RevSep] {
            let t = stage_objective(&mut g, tag, l_grpo, Some(l_cons), Some(l_sep), 0.0, 0.0)
                .unwrap();
            assert_eq!(g.scalar(t), 0.5);
        }

        assert_eq!(
            stage_objective(&mut g, StageTag::Stage1, l_grpo, None, None, 0.01, 0.02),
            Err(ShapingError::MissingFragment { stage: "stage1", fragment: "consistency" })
        );
    }

    #[test]
    fn totals_are_linear_in_the_coefficients() {
        let build = |alpha: f64, beta: f64| -> f64 {
            let mut g = Graph::new();
            let l_grpo = g.scalar_const(0.4);
            let l_cons = g.scalar_const(0.9);
            let l_sep = g.scalar_const(0.15);
            let t = stage_objective(
                &mut g,
                StageTag::Joint,
                l_grpo,
                Some(l_cons),
                Some(l_sep),
                alpha,
                beta,
            )
            .unwrap();
            g.scalar(t)
        };
        // Three-point slope checks: d total / d alpha = l_cons, d/d beta = -l_sep.
        let slope_a = (build(0.02, 0.0) - build(0.0, 0.0)) / 0.02;
        let mid_a = (build(0.01, 0.0) - build(0.0, 0.0)) / 0.01;
        assert!((slope_a - 0.9).abs() < 1e-12 && (mid_a - 0.9).abs() < 1e-12);
        let slope_b = (build(0.0, 0.04) - build(0.0, 0.0)) / 0.04;
        let mid_b = (build(0.0, 0.02) - build(0.0, 0.0)) / 0.02;
        assert!((slope_b + 0.15).abs() < 1e-12 && (mid_b + 0.15).abs() < 1e-12);
    }

    #[test]
    fn stage_tags_expose_their_composition() {
        assert!(StageTag::Stage1.uses_consistency() && !StageTag::Stage1.uses_separation());
        assert!(!StageTag::Stage2.uses_consistency() && StageTag::Stage2.uses_separation());
        assert!(StageTag::Joint.uses_consistency() && StageTag::Joint.uses_separation());
        assert!(StageTag::RevSep.uses_separation() && !StageTag::RevSep.uses_consistency());
        assert!(StageTag::RevCons.uses_consistency() && !StageTag::RevCons.uses_separation());
        assert!(StageTag::Stage1.wants_pres_subset() && StageTag::RevCons.wants_pres_subset());
        assert!(!StageTag::Joint.wants_pres_subset());
        for tag in [StageTag::Stage1, StageTag::Stage2, StageTag::Joint, StageTag::RevSep, StageTag::RevCons] {
            assert_eq!(StageTag::parse(tag.name()), Some(tag));
        }
    }

    #[test]
    fn loss_report_rows_follow_the_header() {
        let report = LossReport {
            l_grpo: 0.5,
            l_cons: 0.3,
            l_sep: 0.0,
            l_total: 0.503,
            kl_to_ref: 0.01,
            kl_to_pres: 0.2,
            kl_to_abl: 0.1,
            clip_fraction: 0.125,
        };
        let row = report.csv_row(17, StageTag::Stage1, 0.5);
        assert_eq!(row.split(',').count(), METRICS_HEADER.split(',').count());
        assert!(row.starts_with("17,stage1,0.5,0.3,0,0.503,"));
        let expected = report.expected_total(StageTag::Stage1, 0.01, 0.02);
        assert!((report.l_total - expected).abs() < 1e-12);
    }
}
