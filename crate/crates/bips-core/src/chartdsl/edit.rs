//! Structure-preserving chart edits.
//!
//! Both edit modes rewrite series into placeholders (visible=false, no
//! geometry) rather than deleting them, so grid layout, panel positions, axis
//! ranges, and legend slots are identical across every view of a chart.
//! Annotations carry no legend slot and are simply dropped when they fall on
//! the removed side of the edit.

use super::ast::{ChartSpec, Series};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("selector references unknown id `{0}`")]
    DanglingReference(String),
}

/// Chart elements addressed by id. Selecting a panel selects every series and
/// annotation inside it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ElementSelector {
    pub panel_ids: BTreeSet<String>,
    pub series_ids: BTreeSet<String>,
    pub annotation_ids: BTreeSet<String>,
}

impl ElementSelector {
    pub fn series<I: IntoIterator<Item = S>, S: Into<String>>(ids: I) -> ElementSelector {
        ElementSelector {
            series_ids: ids.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditMode {
    /// Keep the selected elements; everything else becomes a placeholder.
    PreserveSelected,
    /// Blank the selected elements; everything else is kept.
    AblateSelected,
}

fn to_placeholder(series: &mut Series) {
    series.visible = false;
    series.points.clear();
}

/// Applies a selector in the given mode. Every id in the selector must exist
/// in the chart. The output chart differs from the input only in series
/// visibility/geometry and in dropped annotations.
pub fn edit_remove_elements(
    spec: &ChartSpec,
    selector: &ElementSelector,
    mode: EditMode,
) -> Result<ChartSpec, EditError> {
    for id in &selector.panel_ids {
        if spec.panel_by_id(id).is_none() {
            return Err(EditError::DanglingReference(id.clone()));
        }
    }
    for id in &selector.series_ids {
        if !spec.all_series().any(|(_, s)| &s.id == id) {
            return Err(EditError::DanglingReference(id.clone()));
        }
    }
    for id in &selector.annotation_ids {
        if !spec.panels.iter().flat_map(|p| &p.annotations).any(|a| &a.id == id) {
            return Err(EditError::DanglingReference(id.clone()));
        }
    }

    let mut out = spec.clone();
    for panel in &mut out.panels {
        let panel_selected = selector.panel_ids.contains(&panel.id);
        for series in &mut panel.series {
            let selected = panel_selected || selector.series_ids.contains(&series.id);
            let blank = match mode {
                EditMode::PreserveSelected => !selected,
                EditMode::AblateSelected => selected,
            };
            if blank {
                to_placeholder(series);
            }
        }
        panel.annotations.retain(|a| {
            let selected = panel_selected || selector.annotation_ids.contains(&a.id);
            match mode {
                EditMode::PreserveSelected => selected,
                EditMode::AblateSelected => !selected,
            }
        });
    }
    debug_assert_eq!(out.validate(), Ok(()));
    Ok(out)
}

/// True when the two charts agree on everything except series geometry and
/// annotations: grid, title, panel ids/positions/ranges, series ids/kinds in
/// order, and legends.
pub fn same_layout(a: &ChartSpec, b: &ChartSpec) -> bool {
    if (a.grid_rows, a.grid_cols, &a.title) != (b.grid_rows, b.grid_cols, &b.title) {
        return false;
    }
    if a.panels.len() != b.panels.len() {
        return false;
    }
    a.panels.iter().zip(&b.panels).all(|(pa, pb)| {
        pa.id == pb.id
            && (pa.row, pa.col) == (pb.row, pb.col)
            && pa.x_range == pb.x_range
            && pa.y_range == pb.y_range
            && pa.legend == pb.legend
            && pa.series.len() == pb.series.len()
            && pa
                .series
                .iter()
                .zip(&pb.series)
                .all(|(sa, sb)| sa.id == sb.id && sa.kind == sb.kind)
    })
}
