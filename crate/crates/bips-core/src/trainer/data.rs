//! Loading dataset splits into featurized training items.
//!
//! Features are computed once per view at load time; training and evaluation
//! then touch only these vectors. In masked mode the counterpart views come
//! from random patch occlusion of the base image, and the edited renders on
//! disk are never opened.

use super::{Mode, TrainerError};
use crate::policy::{featurize, FeatureConfig};
use crate::render::{mask_patches, read_pgm, Image};
use crate::rng::derive_seed;
use crate::viewgen::{read_manifest, GenConfig, TemplateId};
use std::path::Path;

pub const MASK_FRACTION: f64 = 0.6;
pub const MASK_PATCH: u32 = 8;

/// Where an item's counterpart views come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewSource {
    /// The edited preserving/ablated renders from the dataset.
    Edited,
    /// Random patch masks of the base image, seeded per item.
    Masked,
}

impl ViewSource {
    pub fn for_mode(mode: Mode) -> ViewSource {
        if mode.masked_views() {
            ViewSource::Masked
        } else {
            ViewSource::Edited
        }
    }
}

/// One manifest record with all views featurized.
#[derive(Debug, Clone)]
pub struct TrainItem {
    /// Stable position within the split, used for per-item seed derivation.
    pub index: usize,
    pub id: String,
    pub template: TemplateId,
    pub answer_index: u8,
    pub features: Vec<f64>,
    /// Absent when the item has no preserving view.
    pub pres_features: Option<Vec<f64>>,
    pub abl_features: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LoadedSplit {
    pub items: Vec<TrainItem>,
    pub feature_dim: usize,
    pub gen: GenConfig,
}

fn split_code(split: &str) -> u64 {
    u64::from(split != "train")
}

/// Loads `<split>.jsonl` under `dataset_dir` and featurizes every view.
///
/// `pooled` is the trained policy's pooling grid (the dataset's own config
/// only fixes image dimensions). With `ViewSource::Masked` the counterpart
/// images derive from the base render under seeds
/// `(master_seed, "mask_pres"|"mask_abl", [split, index])`; an item keeps a
/// pres slot exactly when the manifest has one, so schedules select the same
/// subsets in both view modes.
pub fn load_split(
    dataset_dir: &Path,
    split: &str,
    pooled: u32,
    source: ViewSource,
    master_seed: u64,
) -> Result<LoadedSplit, TrainerError> {
    let gen_kv = std::fs::read_to_string(dataset_dir.join("gen_config.txt"))?;
    let gen = GenConfig::from_kv(&gen_kv)?;
    let fcfg = FeatureConfig {
        image_width: gen.image_width,
        image_height: gen.image_height,
        pooled,
    };
    let records = read_manifest(&dataset_dir.join(format!("{split}.jsonl")))?;
    let code = split_code(split);

    let mut items = Vec::with_capacity(records.len());
    for (index, record) in records.iter().enumerate() {
        let question = record.to_question();
        let image = read_pgm(&dataset_dir.join(&record.image))?;
        let features = featurize(&image, &question, &fcfg)?;

        let (pres_img, abl_img): (Option<Image>, Image) = match source {
            ViewSource::Edited => {
                let pres = match &record.pres_image {
                    Some(rel) => Some(read_pgm(&dataset_dir.join(rel))?),
                    None => None,
                };
                (pres, read_pgm(&dataset_dir.join(&record.abl_image))?)
            }
            ViewSource::Masked => {
                let pres = if record.pres_image.is_some() {
                    let seed = derive_seed(master_seed, "mask_pres", &[code, index as u64]);
                    Some(mask_patches(&image, MASK_FRACTION, MASK_PATCH, seed)?)
                } else {
                    None
                };
                let seed = derive_seed(master_seed, "mask_abl", &[code, index as u64]);
                (pres, mask_patches(&image, MASK_FRACTION, MASK_PATCH, seed)?)
            }
        };
        let pres_features = match &pres_img {
            Some(img) => Some(featurize(img, &question, &fcfg)?),
            None => None,
        };
        let abl_features = featurize(&abl_img, &question, &fcfg)?;

        items.push(TrainItem {
            index,
            id: record.id.clone(),
            template: record.question.template,
            answer_index: record.answer_index,
            features,
            pres_features,
            abl_features,
        });
    }
    Ok(LoadedSplit { items, feature_dim: fcfg.feature_dim(), gen })
}
