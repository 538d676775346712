//! Software rasterizer for chart specs.
//!
//! Every chart renders into a fixed-size grayscale image. The panel grid
//! splits the image into cells; inside a cell the layout is
//!
//! ```text
//! +---------------------------+
//! | legend strip (margin)     |
//! |  +---------------------+  |
//! | a| data rect           |  |
//! | x|                     |  |
//! | i|                     |  |
//! | s+---------------------+  |
//! |   x axis (margin)         |
//! +---------------------------+
//! ```
//!
//! Axes and one legend glyph per legend slot are drawn for every panel,
//! including panels whose series are all placeholders, so edited views keep
//! the same scaffolding as the original. Data ink is clipped to the panel's
//! data rect. All arithmetic is integer (point mapping rounds half-up on
//! exact rationals; lines use the midpoint/Bresenham walk), so output is
//! bit-identical across runs and platforms. Titles and annotation text are
//! not rastered; annotations appear as small cross markers.

use super::image::{Image, BACKGROUND};
use crate::chartdsl::{ChartSpec, Coord, Panel, Series, SeriesKind};
use thiserror::Error;

/// Ink intensity per legend slot, cycling when a panel has more series.
pub const SERIES_PALETTE: [u8; 6] = [32, 96, 160, 208, 64, 128];
pub const AXIS_INK: u8 = 0;
pub const ANNOTATION_INK: u8 = 48;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("render config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    /// Pixels reserved on each side of a panel's data rect for axes and the
    /// legend strip.
    pub margin: u32,
}

impl Default for RenderConfig {
    fn default() -> RenderConfig {
        RenderConfig { width: 64, height: 64, margin: 6 }
    }
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: i64,
    y0: i64,
    x1: i64,
    y1: i64,
}

impl Rect {
    fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

fn ink_clipped(img: &mut Image, clip: Rect, x: i64, y: i64, value: u8) {
    if clip.contains(x, y) {
        img.ink(x as u32, y as u32, value);
    }
}

/// Midpoint (integer Bresenham) line walk over all octants.
fn draw_line(img: &mut Image, clip: Rect, x0: i64, y0: i64, x1: i64, y1: i64, value: u8) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let (mut x, mut y) = (x0, y0);
    let mut err = dx + dy;
    loop {
        ink_clipped(img, clip, x, y, value);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Rounds `t * steps` half-up where `t = num/den` with `den > 0`.
fn round_scaled(num: i128, den: i128, steps: i128) -> Result<i128, RenderError> {
    let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i128;
    let (num, den) = (num / g, den / g);
    let limit = i128::MAX / (2 * steps.max(1) + 2);
    if num.abs() > limit || den > limit {
        return Err(RenderError::Config("axis range is too fine to rasterize".to_string()));
    }
    Ok((2 * num * steps + den).div_euclid(2 * den))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Position of `v` inside `[lo, hi]` as an exact fraction, or `None` when the
/// value lies outside the axis range (such points are not drawn).
fn unit_frac(v: Coord, lo: Coord, hi: Coord) -> Option<(i128, i128)> {
    if v < lo || v > hi {
        return None;
    }
    let (an, ad) = (v - lo).as_fraction();
    let (bn, bd) = (hi - lo).as_fraction();
    Some((an * bd, ad * bn))
}

struct PanelFrame {
    clip: Rect,
    data_x0: i64,
    data_y0: i64,
    /// Pixel spans of the data rect (count of columns / rows).
    span_x: i64,
    span_y: i64,
    x_lo: Coord,
    x_hi: Coord,
    y_lo: Coord,
    y_hi: Coord,
}

impl PanelFrame {
    fn map(&self, x: Coord, y: Coord) -> Result<Option<(i64, i64)>, RenderError> {
        let Some((xn, xd)) = unit_frac(x, self.x_lo, self.x_hi) else {
            return Ok(None);
        };
        let Some((yn, yd)) = unit_frac(y, self.y_lo, self.y_hi) else {
            return Ok(None);
        };
        let px = self.data_x0 + round_scaled(xn, xd, i128::from(self.span_x - 1))? as i64;
        let py = self.data_y0 + (self.span_y - 1) - round_scaled(yn, yd, i128::from(self.span_y - 1))? as i64;
        Ok(Some((px, py)))
    }
}

fn draw_series(img: &mut Image, frame: &PanelFrame, series: &Series, slot: usize) -> Result<(), RenderError> {
    if !series.visible || series.points.is_empty() {
        return Ok(());
    }
    let value = SERIES_PALETTE[slot % SERIES_PALETTE.len()];
    let mapped: Vec<Option<(i64, i64)>> = series
        .points
        .iter()
        .map(|&(x, y)| frame.map(x, y))
        .collect::<Result<_, _>>()?;
    match series.kind {
        SeriesKind::Line => {
            if mapped.len() == 1 {
                if let Some((x, y)) = mapped[0] {
                    ink_clipped(img, frame.clip, x, y, value);
                }
            }
            for pair in mapped.windows(2) {
                if let (Some((x0, y0)), Some((x1, y1))) = (pair[0], pair[1]) {
                    draw_line(img, frame.clip, x0, y0, x1, y1, value);
                }
            }
        }
        SeriesKind::Scatter => {
            for &(x, y) in mapped.iter().flatten() {
                for (dx, dy) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
                    ink_clipped(img, frame.clip, x + dx, y + dy, value);
                }
            }
        }
        SeriesKind::Bar => {
            let bottom = frame.data_y0 + frame.span_y - 1;
            for &(x, y) in mapped.iter().flatten() {
                draw_line(img, frame.clip, x, y, x, bottom, value);
            }
        }
    }
    Ok(())
}

fn draw_panel(img: &mut Image, cfg: &RenderConfig, spec: &ChartSpec, panel: &Panel) -> Result<(), RenderError> {
    let cw = i64::from(cfg.width / spec.grid_cols);
    let ch = i64::from(cfg.height / spec.grid_rows);
    let m = i64::from(cfg.margin);
    let span_x = cw - m - 1;
    let span_y = ch - 2 * m;
    if m < 4 || span_x < 4 || span_y < 4 {
        return Err(RenderError::Config(format!(
            "margin {} leaves no room in a {}x{} cell",
            cfg.margin, cw, ch
        )));
    }
    let cx0 = i64::from(panel.col) * cw;
    let cy0 = i64::from(panel.row) * ch;
    let cell = Rect { x0: cx0, y0: cy0, x1: cx0 + cw - 1, y1: cy0 + ch - 1 };
    let data = Rect { x0: cx0 + m, y0: cy0 + m, x1: cx0 + cw - 2, y1: cy0 + ch - m - 1 };

    // Axis lines: vertical along the left of the data rect, horizontal along
    // the bottom, meeting at the corner.
    draw_line(img, cell, cx0 + m - 1, cy0 + m, cx0 + m - 1, cy0 + ch - m, AXIS_INK);
    draw_line(img, cell, cx0 + m - 1, cy0 + ch - m, cx0 + cw - 2, cy0 + ch - m, AXIS_INK);

    // One 2x2 legend glyph per legend slot in the top strip, placeholders
    // included; the legend never changes between views of the same chart.
    for slot in 0..panel.legend.len() {
        let value = SERIES_PALETTE[slot % SERIES_PALETTE.len()];
        let gx = cx0 + m + 4 * slot as i64;
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let (x, y) = (gx + dx, cy0 + 1 + dy);
            if x <= cx0 + cw - 2 {
                ink_clipped(img, cell, x, y, value);
            }
        }
    }

    let frame = PanelFrame {
        clip: data,
        data_x0: data.x0,
        data_y0: data.y0,
        span_x,
        span_y,
        x_lo: panel.x_range.0,
        x_hi: panel.x_range.1,
        y_lo: panel.y_range.0,
        y_hi: panel.y_range.1,
    };
    for (slot, series) in panel.series.iter().enumerate() {
        draw_series(img, &frame, series, slot)?;
    }
    for annotation in &panel.annotations {
        if let Some((x, y)) = frame.map(annotation.at.0, annotation.at.1)? {
            for (dx, dy) in [(0, 0), (1, 1), (-1, -1), (1, -1), (-1, 1)] {
                ink_clipped(img, frame.clip, x + dx, y + dy, ANNOTATION_INK);
            }
        }
    }
    Ok(())
}

/// Renders a chart deterministically. Fails only when the configuration
/// cannot host the chart's grid (margins leave no data area) or an axis range
/// is too extreme for exact mapping.
pub fn rasterize(spec: &ChartSpec, cfg: &RenderConfig) -> Result<Image, RenderError> {
    if cfg.width == 0 || cfg.height == 0 {
        return Err(RenderError::Config("image dimensions must be positive".to_string()));
    }
    if cfg.margin * 2 >= cfg.width.min(cfg.height) {
        return Err(RenderError::Config("margin must be below half the image size".to_string()));
    }
    spec.validate().map_err(RenderError::Config)?;
    let mut img = Image::filled(cfg.width, cfg.height, BACKGROUND);
    for panel in &spec.panels {
        draw_panel(&mut img, cfg, spec, panel)?;
    }
    Ok(img)
}
