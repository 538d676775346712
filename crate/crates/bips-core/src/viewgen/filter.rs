//! Difficulty filtering by a reference answer policy.
//!
//! An item is worth training on only if the reference policy cannot already
//! answer it reliably: we draw `k` sampled answers and drop the item when
//! every draw is correct. The number of correct draws doubles as a
//! difficulty score (0 = hardest).

use crate::policy::{
    featurize, forward, AnswerDistribution, FeatureConfig, PolicyError, PolicyParams,
};
use crate::render::Image;
use crate::rng::rng_from;
use crate::viewgen::question::Question;

/// Anything that maps a rendered chart and question to an answer
/// distribution over the four options.
pub trait AnswerPolicy {
    fn answer(
        &self,
        image: &Image,
        question: &Question,
        temperature: f64,
    ) -> Result<AnswerDistribution, PolicyError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterOutcome {
    /// False when the policy answered correctly on all `k` draws.
    pub keep: bool,
    /// Correct draws out of `k`; low means hard.
    pub difficulty_correct: u32,
}

/// Samples `k` answers at `temperature` and keeps the item unless all of
/// them match `question.answer_index`. Deterministic in `seed`.
pub fn difficulty_filter(
    image: &Image,
    question: &Question,
    policy: &dyn AnswerPolicy,
    k: u32,
    temperature: f64,
    seed: u64,
) -> Result<FilterOutcome, PolicyError> {
    assert!(k >= 1, "filter needs at least one draw");
    let dist = policy.answer(image, question, temperature)?;
    let mut rng = rng_from(seed, "filter", &[]);
    let mut correct = 0u32;
    for _ in 0..k {
        if dist.sample(&mut rng) == question.answer_index as usize {
            correct += 1;
        }
    }
    Ok(FilterOutcome { keep: correct < k, difficulty_correct: correct })
}

/// Reference policy that already knows every answer; filtering against it
/// discards everything.
pub struct PerfectPolicy;

impl AnswerPolicy for PerfectPolicy {
    fn answer(
        &self,
        _image: &Image,
        question: &Question,
        _temperature: f64,
    ) -> Result<AnswerDistribution, PolicyError> {
        let mut probs = [0.0; 4];
        probs[question.answer_index as usize] = 1.0;
        AnswerDistribution::from_probs(probs, 1.0)
    }
}

/// Reference policy that guesses uniformly; filtering against it keeps
/// almost everything.
pub struct UniformPolicy;

impl AnswerPolicy for UniformPolicy {
    fn answer(
        &self,
        _image: &Image,
        _question: &Question,
        _temperature: f64,
    ) -> Result<AnswerDistribution, PolicyError> {
        AnswerDistribution::from_probs([0.25; 4], 1.0)
    }
}

/// Learned policy over rendered pixels and question features.
pub struct NetPolicy<'a> {
    pub params: &'a PolicyParams,
    pub features: FeatureConfig,
}

impl AnswerPolicy for NetPolicy<'_> {
    fn answer(
        &self,
        image: &Image,
        question: &Question,
        temperature: f64,
    ) -> Result<AnswerDistribution, PolicyError> {
        let x = featurize(image, question, &self.features)?;
        forward(self.params, &x, temperature)
    }
}
