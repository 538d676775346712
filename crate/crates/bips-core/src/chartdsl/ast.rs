//! Chart AST and canonical serialization.

use super::coord::Coord;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Line,
    Bar,
    Scatter,
}

impl SeriesKind {
    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::Line => "line",
            SeriesKind::Bar => "bar",
            SeriesKind::Scatter => "scatter",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Series {
    pub id: String,
    pub kind: SeriesKind,
    /// Placeholder series keep their id and legend slot but draw nothing.
    pub visible: bool,
    pub points: Vec<(Coord, Coord)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub series_id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: String,
    pub text: String,
    pub at: (Coord, Coord),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Panel {
    pub id: String,
    pub row: u32,
    pub col: u32,
    pub x_range: (Coord, Coord),
    pub y_range: (Coord, Coord),
    pub series: Vec<Series>,
    /// One entry per series, placeholders included. Kept stable by edits so
    /// that every view of a chart shows the same legend.
    pub legend: Vec<LegendEntry>,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub grid_rows: u32,
    pub grid_cols: u32,
    pub title: Option<String>,
    pub panels: Vec<Panel>,
}

/// One legend entry per series, labeled by the series id. The parser and the
/// chart sampler both build legends through this function so that identical
/// series lists always produce identical legends.
pub fn legend_for(series: &[Series]) -> Vec<LegendEntry> {
    series
        .iter()
        .map(|s| LegendEntry { series_id: s.id.clone(), label: s.id.clone() })
        .collect()
}

impl Panel {
    /// Series looked up by id, placeholders included.
    pub fn series_by_id(&self, id: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.id == id)
    }

    /// Series that actually carry data: visible with at least one point.
    pub fn data_series(&self) -> impl Iterator<Item = &Series> {
        self.series.iter().filter(|s| s.visible && !s.points.is_empty())
    }
}

impl ChartSpec {
    pub fn panel_by_id(&self, id: &str) -> Option<&Panel> {
        self.panels.iter().find(|p| p.id == id)
    }

    pub fn all_series(&self) -> impl Iterator<Item = (&Panel, &Series)> {
        self.panels.iter().flat_map(|p| p.series.iter().map(move |s| (p, s)))
    }

    /// Structural well-formedness: positive grid with every panel on a
    /// distinct cell inside it, at least one panel, unique ids per element
    /// kind across the whole chart, non-degenerate axis ranges, legends that
    /// mirror the series lists, and line series sorted by x.
    pub fn validate(&self) -> Result<(), String> {
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return Err("grid dimensions must be at least 1x1".to_string());
        }
        if self.panels.is_empty() {
            return Err("chart has no panels".to_string());
        }
        let mut panel_ids = std::collections::HashSet::new();
        let mut series_ids = std::collections::HashSet::new();
        let mut annotation_ids = std::collections::HashSet::new();
        let mut cells = std::collections::HashSet::new();
        for panel in &self.panels {
            if !panel_ids.insert(&panel.id) {
                return Err(format!("duplicate panel id `{}`", panel.id));
            }
            if panel.row >= self.grid_rows || panel.col >= self.grid_cols {
                return Err(format!(
                    "panel `{}` at {},{} is outside the {}x{} grid",
                    panel.id, panel.row, panel.col, self.grid_rows, self.grid_cols
                ));
            }
            if !cells.insert((panel.row, panel.col)) {
                return Err(format!("panel `{}` overlaps an occupied cell", panel.id));
            }
            if panel.x_range.0 >= panel.x_range.1 {
                return Err(format!("panel `{}` has a degenerate x range", panel.id));
            }
            if panel.y_range.0 >= panel.y_range.1 {
                return Err(format!("panel `{}` has a degenerate y range", panel.id));
            }
            if panel.legend.len() != panel.series.len() {
                return Err(format!("panel `{}` legend does not match its series", panel.id));
            }
            for (entry, series) in panel.legend.iter().zip(&panel.series) {
                if entry.series_id != series.id {
                    return Err(format!("panel `{}` legend order diverges from series", panel.id));
                }
            }
            for series in &panel.series {
                if !series_ids.insert(&series.id) {
                    return Err(format!("duplicate series id `{}`", series.id));
                }
                if series.kind == SeriesKind::Line {
                    for pair in series.points.windows(2) {
                        if pair[0].0 > pair[1].0 {
                            return Err(format!("line series `{}` points are not sorted by x", series.id));
                        }
                    }
                }
            }
            for annotation in &panel.annotations {
                if !annotation_ids.insert(&annotation.id) {
                    return Err(format!("duplicate annotation id `{}`", annotation.id));
                }
            }
        }
        Ok(())
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            _ => out.push(ch),
        }
    }
    out
}

/// Canonical source text. Fields appear in a fixed order, numbers in their
/// shortest exact decimal form, one element per line, every line terminated.
/// `parse_chart(serialize_chart(spec)) == spec` for any valid spec.
pub fn serialize_chart(spec: &ChartSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("chart grid={}x{}", spec.grid_rows, spec.grid_cols));
    if let Some(title) = &spec.title {
        let _ = write!(out, " title=\"{}\"", escape(title));
    }
    out.push('\n');
    for panel in &spec.panels {
        let _ = write!(
            out,
            "panel id={} at={},{} xrange={}..{} yrange={}..{}\n",
            panel.id, panel.row, panel.col, panel.x_range.0, panel.x_range.1, panel.y_range.0, panel.y_range.1
        );
        for series in &panel.series {
            let _ = write!(out, "series id={} kind={} visible={} points=", series.id, series.kind.name(), series.visible);
            for (x, y) in &series.points {
                let _ = write!(out, "({x},{y})");
            }
            out.push('\n');
        }
        for annotation in &panel.annotations {
            let _ = write!(
                out,
                "annotate id={} text=\"{}\" at={},{}\n",
                annotation.id,
                escape(&annotation.text),
                annotation.at.0,
                annotation.at.1
            );
        }
        out.push_str("end\n");
    }
    out
}
