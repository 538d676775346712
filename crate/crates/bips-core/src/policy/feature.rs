//! Feature extraction: a rendered chart plus a question, flattened into the
//! policy's input vector.
//!
//! Layout: `pooled * pooled` average-pooled ink strengths in [0, 1] (one
//! minus the mean pixel intensity, so blank background cells are exactly
//! zero and marks are positive), then a one-hot template block, then
//! [`PARAM_SLOTS`] numeric slots that encode the question's parameters and
//! its four answer options. Identifiers hash to stable codes so the same
//! question always features identically.
//!
//! The ink encoding matters for optimization: raw intensities put a large
//! constant offset (background = 1) on most of the input, which swamps the
//! informative variance and stalls gradient training. Centering on the
//! background makes the image block sparse.

use crate::chartdsl::Coord;
use crate::render::Image;
use crate::rng::stable_hash;
use crate::viewgen::question::{
    OPT_CANNOT, OPT_EQUAL, OPT_NONE_OF, OPT_TIE, TREND_WORDS,
};
use crate::viewgen::{Question, TemplateId, N_TEMPLATES};

use super::PolicyError;

/// Numeric slots after the template one-hot block: four for the question
/// parameters, four unused spacers, and two per answer option.
pub const PARAM_SLOTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub image_width: u32,
    pub image_height: u32,
    /// Pixel grid is average-pooled down to `pooled x pooled`.
    pub pooled: u32,
}

impl Default for FeatureConfig {
    fn default() -> FeatureConfig {
        FeatureConfig { image_width: 64, image_height: 64, pooled: 16 }
    }
}

impl FeatureConfig {
    pub fn feature_dim(&self) -> usize {
        (self.pooled as usize) * (self.pooled as usize) + N_TEMPLATES + PARAM_SLOTS
    }
}

/// Squashes any coordinate into (-1, 1) without losing ordering.
fn squash(v: f64) -> f64 {
    v / (1.0 + v.abs())
}

/// Stable code in (0, 1] for an identifier.
fn id_code(id: &str) -> f64 {
    ((stable_hash(id.as_bytes()) % 251) as f64 + 1.0) / 251.0
}

/// Encodes one answer option as a (type, value) pair. Numbers carry their
/// squashed value, known literal words get fixed codes, and anything else is
/// treated as an identifier.
fn option_code(option: &str) -> (f64, f64) {
    if let Ok(c) = Coord::parse(option) {
        return (0.8, squash(c.to_f64()));
    }
    let literal = match option {
        w if w == TREND_WORDS[0] => 0.1,
        w if w == OPT_EQUAL => 0.2,
        w if w == TREND_WORDS[1] => 0.3,
        w if w == OPT_TIE => 0.4,
        w if w == TREND_WORDS[2] => 0.5,
        w if w == OPT_NONE_OF => 0.6,
        w if w == TREND_WORDS[3] => 0.7,
        w if w == OPT_CANNOT => 0.8,
        _ => return (-0.4, id_code(option)),
    };
    (-0.9, literal)
}

/// Flattens an image and question into the policy input vector.
///
/// Errors when the image does not match the configured dimensions or the
/// pooling grid is degenerate.
pub fn featurize(
    image: &Image,
    question: &Question,
    cfg: &FeatureConfig,
) -> Result<Vec<f64>, PolicyError> {
    if image.width != cfg.image_width || image.height != cfg.image_height {
        return Err(PolicyError::Shape(format!(
            "image is {}x{}, feature config wants {}x{}",
            image.width, image.height, cfg.image_width, cfg.image_height
        )));
    }
    if cfg.pooled == 0 || cfg.pooled > cfg.image_width.min(cfg.image_height) {
        return Err(PolicyError::Shape(format!(
            "pooling grid {} does not fit a {}x{} image",
            cfg.pooled, cfg.image_width, cfg.image_height
        )));
    }
    let mut features = Vec::with_capacity(cfg.feature_dim());

    // Average pooling over a pooled x pooled partition; cell edges come from
    // integer scaling so every pixel lands in exactly one cell.
    let p = cfg.pooled as u64;
    let (w, h) = (u64::from(image.width), u64::from(image.height));
    for cy in 0..p {
        let y0 = (cy * h / p) as u32;
        let y1 = ((cy + 1) * h / p) as u32;
        for cx in 0..p {
            let x0 = (cx * w / p) as u32;
            let x1 = ((cx + 1) * w / p) as u32;
            let mut sum = 0u64;
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += u64::from(image.get(x, y));
                }
            }
            let count = u64::from(y1 - y0) * u64::from(x1 - x0);
            features.push(1.0 - sum as f64 / (count as f64 * 255.0));
        }
    }

    for template in TemplateId::ALL {
        features.push(f64::from(u8::from(template == question.template)));
    }

    let mut slots = [0.0f64; PARAM_SLOTS];
    slots[0] = question.params.x.map_or(0.0, |x| squash(x.to_f64()));
    slots[1] = id_code(&question.params.panel);
    slots[2] = question.params.series.first().map_or(0.0, |s| id_code(s));
    slots[3] = question.params.series.get(1).map_or(0.0, |s| id_code(s));
    slots[4] = question.params.panel2.as_deref().map_or(0.0, id_code);
    for (i, option) in question.options.iter().enumerate() {
        let (kind, value) = option_code(option);
        slots[8 + 2 * i] = kind;
        slots[8 + 2 * i + 1] = value;
    }
    features.extend_from_slice(&slots);

    debug_assert_eq!(features.len(), cfg.feature_dim());
    Ok(features)
}
