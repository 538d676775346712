//! Seeded random chart sampler.
//!
//! Charts come out structurally valid with exact one-decimal data on shared
//! integer x grids, so every downstream comparison is exact arithmetic. Ids
//! are assigned globally in creation order (p0, s0, a0, ...). The sampler is
//! a pure function of the seed.

use crate::chartdsl::{legend_for, Annotation, ChartSpec, Coord, Panel, Series, SeriesKind};
use crate::rng::rng_from;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const TITLES: [&str; 4] =
    ["quarterly metrics", "sensor readings", "trial results", "throughput overview"];
const ANNOTATION_WORDS: [&str; 4] = ["peak", "dip", "note", "baseline"];

/// y values are sampled in tenths and carried as exact one-decimal coords.
fn tenths(t: i64) -> Coord {
    Coord::new(t, 1)
}

fn sample_kind(rng: &mut ChaCha8Rng) -> SeriesKind {
    match rng.random_range(0..20u32) {
        0..=13 => SeriesKind::Line,
        14..=16 => SeriesKind::Bar,
        _ => SeriesKind::Scatter,
    }
}

/// One series worth of y values (in tenths) over `n` grid points, staying
/// half a unit inside `[lo_t, hi_t]`.
fn sample_values(rng: &mut ChaCha8Rng, n: usize, lo_t: i64, hi_t: i64) -> Vec<i64> {
    let shape = rng.random_range(0..10u32);
    let mut ys = Vec::with_capacity(n);
    match shape {
        // Random walk.
        0..=5 => {
            let mut y = rng.random_range(lo_t + 10..=hi_t - 10);
            for _ in 0..n {
                ys.push(y);
                y = (y + rng.random_range(-15..=15)).clamp(lo_t + 5, hi_t - 5);
            }
        }
        // Strictly monotone, up or down.
        6..=8 => {
            let up = rng.random_bool(0.5);
            let start = lo_t + 5 + rng.random_range(0..=10);
            let max_step = ((hi_t - 5 - start) / (n as i64 - 1)).max(1);
            let mut y = start;
            for _ in 0..n {
                ys.push(y);
                y = (y + rng.random_range(1..=max_step)).min(hi_t - 5);
            }
            if !up {
                ys.reverse();
            }
        }
        // Flat.
        _ => {
            let y = rng.random_range(lo_t + 10..=hi_t - 10);
            ys = vec![y; n];
        }
    }
    ys
}

/// Samples a valid chart. Panel grids, series counts, kinds, value shapes,
/// and annotations all vary with the seed; the result always passes
/// [`ChartSpec::validate`].
pub fn sample_chart(seed: u64) -> ChartSpec {
    let mut rng = rng_from(seed, "chart", &[]);
    let (grid_rows, grid_cols) = match rng.random_range(0..10u32) {
        0..=2 => (1u32, 1u32),
        3..=5 => (1, 2),
        6..=7 => (2, 1),
        _ => (2, 2),
    };
    let title = if rng.random_bool(0.5) {
        Some((*TITLES.choose(&mut rng).unwrap()).to_string())
    } else {
        None
    };

    let mut series_counter = 0usize;
    let mut panels = Vec::new();
    for row in 0..grid_rows {
        for col in 0..grid_cols {
            let panel_index = panels.len();
            let n_points = rng.random_range(5..=9usize);
            let lo = rng.random_range(-4..=0i64);
            let hi = lo + rng.random_range(8..=12i64);
            let (lo_t, hi_t) = (lo * 10, hi * 10);
            let n_series = rng.random_range(2..=4usize);
            let mut series = Vec::with_capacity(n_series);
            for _ in 0..n_series {
                let ys = sample_values(&mut rng, n_points, lo_t, hi_t);
                series.push(Series {
                    id: format!("s{series_counter}"),
                    kind: sample_kind(&mut rng),
                    visible: true,
                    points: ys
                        .into_iter()
                        .enumerate()
                        .map(|(i, y)| (Coord::from_int(i as i64), tenths(y)))
                        .collect(),
                });
                series_counter += 1;
            }
            let legend = legend_for(&series);
            panels.push(Panel {
                id: format!("p{panel_index}"),
                row,
                col,
                x_range: (Coord::zero(), Coord::from_int(n_points as i64 - 1)),
                y_range: (Coord::from_int(lo), Coord::from_int(hi)),
                series,
                legend,
                annotations: Vec::new(),
            });
        }
    }

    for a in 0..rng.random_range(0..=2usize) {
        let panel_index = rng.random_range(0..panels.len());
        let panel = &mut panels[panel_index];
        let max_x = panel.x_range.1.to_f64() as i64;
        let (lo, hi) = (panel.y_range.0.to_f64() as i64, panel.y_range.1.to_f64() as i64);
        panel.annotations.push(Annotation {
            id: format!("a{a}"),
            text: (*ANNOTATION_WORDS.choose(&mut rng).unwrap()).to_string(),
            at: (
                Coord::from_int(rng.random_range(0..=max_x)),
                tenths(rng.random_range(lo * 10 + 5..=hi * 10 - 5)),
            ),
        });
    }

    let spec = ChartSpec { grid_rows, grid_cols, title, panels };
    debug_assert_eq!(spec.validate(), Ok(()));
    spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chartdsl::{parse_chart, serialize_chart};
    use std::collections::HashSet;

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_chart(7), sample_chart(7));
        assert_ne!(sample_chart(7), sample_chart(8));
    }

    #[test]
    fn samples_validate_and_roundtrip() {
        for seed in 0..50 {
            let spec = sample_chart(seed);
            assert_eq!(spec.validate(), Ok(()), "seed {seed}");
            let text = serialize_chart(&spec);
            let back = parse_chart(&text).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert_eq!(back, spec, "seed {seed}");
        }
    }

    #[test]
    fn sampler_covers_the_design_space() {
        let mut grids = HashSet::new();
        let mut kinds = HashSet::new();
        let mut titled = 0;
        let mut annotated = 0;
        for seed in 0..100 {
            let spec = sample_chart(seed);
            grids.insert((spec.grid_rows, spec.grid_cols));
            for (_, s) in spec.all_series() {
                kinds.insert(s.kind);
            }
            titled += spec.title.is_some() as u32;
            annotated += spec.panels.iter().any(|p| !p.annotations.is_empty()) as u32;
        }
        assert!(grids.len() >= 3, "grids seen: {grids:?}");
        assert_eq!(kinds.len(), 3);
        assert!(titled > 20 && titled < 80);
        assert!(annotated > 20);
    }

    #[test]
    fn values_stay_inside_the_axis_ranges() {
        for seed in 0..30 {
            let spec = sample_chart(seed);
            for panel in &spec.panels {
                for s in &panel.series {
                    for &(x, y) in &s.points {
                        assert!(panel.x_range.0 <= x && x <= panel.x_range.1);
                        assert!(panel.y_range.0 < y && y < panel.y_range.1);
                    }
                }
            }
        }
    }
}
