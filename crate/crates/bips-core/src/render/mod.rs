//! Deterministic rasterization of chart specs to small grayscale images.

mod image;
mod mask;
mod raster;

pub use image::{parse_pgm, pgm_bytes, read_pgm, write_pgm, Image, PgmError, BACKGROUND};
pub use mask::mask_patches;
pub use raster::{rasterize, RenderConfig, RenderError, ANNOTATION_INK, AXIS_INK, SERIES_PALETTE};
