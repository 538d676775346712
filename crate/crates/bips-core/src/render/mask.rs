//! Random patch masking.
//!
//! The masked-view baseline replaces a chart's edited views with the original
//! image under random occlusion. The image is tiled into square patches
//! (partial patches at the right/bottom edges count) and a seeded draw
//! without replacement erases `floor(fraction * patch_count)` of them to the
//! background value.

use super::image::{Image, BACKGROUND};
use super::raster::RenderError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mask_patches(img: &Image, fraction: f64, patch_size: u32, seed: u64) -> Result<Image, RenderError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(RenderError::Config(format!("mask fraction {fraction} outside [0, 1]")));
    }
    if patch_size == 0 {
        return Err(RenderError::Config("patch size must be positive".to_string()));
    }
    let cols = img.width.div_ceil(patch_size);
    let rows = img.height.div_ceil(patch_size);
    let count = (cols * rows) as usize;
    let masked = (fraction * count as f64).floor() as usize;

    let mut order: Vec<usize> = (0..count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..masked {
        let j = i + rng.random_range(0..count - i);
        order.swap(i, j);
    }

    let mut out = img.clone();
    for &patch in &order[..masked] {
        let px = (patch as u32 % cols) * patch_size;
        let py = (patch as u32 / cols) * patch_size;
        for y in py..(py + patch_size).min(img.height) {
            for x in px..(px + patch_size).min(img.width) {
                out.set(x, y, BACKGROUND);
            }
        }
    }
    Ok(out)
}
