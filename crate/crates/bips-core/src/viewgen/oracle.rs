//! Symbolic question answering over chart structure.
//!
//! The oracle never looks at pixels. It resolves a question against the
//! chart's data table and either commits to one option or reports that the
//! chart does not determine an answer (missing evidence, exact ties,
//! mismatched x grids). Hidden series count as absent evidence.

use crate::chartdsl::{ChartSpec, Coord, Panel, Series, SeriesKind};
use crate::viewgen::question::{Question, QuestionParams, TemplateId};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    /// The question references a panel or series the chart does not have.
    #[error("question references missing element `{0}`")]
    DanglingReference(String),
    /// The question's parameter shape does not fit its template.
    #[error("malformed question: {0}")]
    MalformedQuestion(String),
}

/// Oracle output: either exactly one option is correct, or the chart does
/// not pin down an answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Determined(u8),
    Undetermined,
}

impl Verdict {
    pub fn determined_index(self) -> Option<u8> {
        match self {
            Verdict::Determined(i) => Some(i),
            Verdict::Undetermined => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Lookup {
    Value(Coord),
    Missing,
    /// The series lists the x more than once with different y values.
    Ambiguous,
}

/// The y value a visible series takes at an exact x coordinate.
pub(crate) fn lookup_at(series: &Series, x: Coord) -> Lookup {
    let mut found: Option<Coord> = None;
    for &(px, py) in &series.points {
        if px == x {
            match found {
                None => found = Some(py),
                Some(prev) if prev == py => {}
                Some(_) => return Lookup::Ambiguous,
            }
        }
    }
    match found {
        Some(y) => Lookup::Value(y),
        None => Lookup::Missing,
    }
}

/// Largest y value of a series, if it has any points.
pub(crate) fn series_max_value(series: &Series) -> Option<Coord> {
    series.points.iter().map(|&(_, y)| y).max()
}

/// Largest y value over a panel's visible, non-empty series.
pub(crate) fn panel_max_value(panel: &Panel) -> Option<Coord> {
    panel.data_series().filter_map(series_max_value).max()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Trend {
    Increasing,
    Decreasing,
    Flat,
    Mixed,
}

impl Trend {
    pub(crate) fn word(self) -> &'static str {
        match self {
            Trend::Increasing => "increasing",
            Trend::Decreasing => "decreasing",
            Trend::Flat => "flat",
            Trend::Mixed => "mixed",
        }
    }
}

/// Sign pattern of consecutive y deltas. Needs at least two points.
pub(crate) fn trend_of(series: &Series) -> Option<Trend> {
    if series.points.len() < 2 {
        return None;
    }
    let (mut up, mut down, mut flat) = (false, false, false);
    for w in series.points.windows(2) {
        match w[1].1.cmp(&w[0].1) {
            std::cmp::Ordering::Greater => up = true,
            std::cmp::Ordering::Less => down = true,
            std::cmp::Ordering::Equal => flat = true,
        }
    }
    Some(match (up, down) {
        (true, true) => Trend::Mixed,
        (true, false) => {
            if flat {
                Trend::Mixed
            } else {
                Trend::Increasing
            }
        }
        (false, true) => {
            if flat {
                Trend::Mixed
            } else {
                Trend::Decreasing
            }
        }
        (false, false) => Trend::Flat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Crossings {
    Count(usize),
    /// The polylines meet exactly at a grid point; the count is ill-posed.
    Touching,
    /// The series do not share an x grid of at least two points.
    Misaligned,
}

/// Strict sign changes of `a - b` across a shared x grid.
///
/// Both series must list the same x coordinates in the same order. A zero
/// difference anywhere makes the count ill-posed rather than contributing
/// half a crossing.
pub(crate) fn crossings_on_shared_grid(a: &Series, b: &Series) -> Crossings {
    if a.points.len() != b.points.len() || a.points.len() < 2 {
        return Crossings::Misaligned;
    }
    let mut diffs: Vec<std::cmp::Ordering> = Vec::with_capacity(a.points.len());
    for (&(ax, ay), &(bx, by)) in a.points.iter().zip(&b.points) {
        if ax != bx {
            return Crossings::Misaligned;
        }
        let ord = ay.cmp(&by);
        if ord == std::cmp::Ordering::Equal {
            return Crossings::Touching;
        }
        diffs.push(ord);
    }
    Crossings::Count(diffs.windows(2).filter(|w| w[0] != w[1]).count())
}

/// Index of the option equal (as an exact coordinate) to `value`, when
/// exactly one option parses to it.
fn match_value(options: &[String; 4], value: Coord) -> Verdict {
    let mut hit: Option<u8> = None;
    for (i, opt) in options.iter().enumerate() {
        if Coord::parse(opt) == Ok(value) {
            if hit.is_some() {
                return Verdict::Undetermined;
            }
            hit = Some(i as u8);
        }
    }
    match hit {
        Some(i) => Verdict::Determined(i),
        None => Verdict::Undetermined,
    }
}

/// Index of the option exactly equal to `text`, when exactly one is.
fn match_text(options: &[String; 4], text: &str) -> Verdict {
    let mut hit: Option<u8> = None;
    for (i, opt) in options.iter().enumerate() {
        if opt == text {
            if hit.is_some() {
                return Verdict::Undetermined;
            }
            hit = Some(i as u8);
        }
    }
    match hit {
        Some(i) => Verdict::Determined(i),
        None => Verdict::Undetermined,
    }
}

fn resolve_panel<'a>(spec: &'a ChartSpec, id: &str) -> Result<&'a Panel, OracleError> {
    spec.panel_by_id(id).ok_or_else(|| OracleError::DanglingReference(id.to_string()))
}

fn resolve_series<'a>(panel: &'a Panel, id: &str) -> Result<&'a Series, OracleError> {
    panel.series_by_id(id).ok_or_else(|| OracleError::DanglingReference(id.to_string()))
}

/// Answers a question from chart structure alone.
///
/// Dangling references and malformed parameter shapes are errors; everything
/// else (hidden series, missing x values, exact ties, misaligned grids)
/// yields [`Verdict::Undetermined`]. The function is a pure map from
/// `(chart, question)` to the verdict.
pub fn oracle_answer(spec: &ChartSpec, question: &Question) -> Result<Verdict, OracleError> {
    let params: &QuestionParams = &question.params;
    params
        .check_shape(question.template)
        .map_err(OracleError::MalformedQuestion)?;
    let panel = resolve_panel(spec, &params.panel)?;
    let options = &question.options;

    let verdict = match question.template {
        TemplateId::ValueLookup => {
            let series = resolve_series(panel, &params.series[0])?;
            if !series.visible {
                Verdict::Undetermined
            } else {
                match lookup_at(series, params.x.unwrap()) {
                    Lookup::Value(y) => match_value(options, y),
                    Lookup::Missing | Lookup::Ambiguous => Verdict::Undetermined,
                }
            }
        }
        TemplateId::CompareAtX => {
            let a = resolve_series(panel, &params.series[0])?;
            let b = resolve_series(panel, &params.series[1])?;
            if !a.visible || !b.visible {
                Verdict::Undetermined
            } else {
                let x = params.x.unwrap();
                match (lookup_at(a, x), lookup_at(b, x)) {
                    (Lookup::Value(ya), Lookup::Value(yb)) => match ya.cmp(&yb) {
                        std::cmp::Ordering::Greater => match_text(options, &a.id),
                        std::cmp::Ordering::Less => match_text(options, &b.id),
                        std::cmp::Ordering::Equal => Verdict::Undetermined,
                    },
                    _ => Verdict::Undetermined,
                }
            }
        }
        TemplateId::SeriesMax => {
            let mut best: Option<(&str, Coord)> = None;
            let mut tied = false;
            for s in panel.data_series() {
                let m = series_max_value(s).unwrap();
                match best {
                    None => best = Some((&s.id, m)),
                    Some((_, bm)) => match m.cmp(&bm) {
                        std::cmp::Ordering::Greater => {
                            best = Some((&s.id, m));
                            tied = false;
                        }
                        std::cmp::Ordering::Equal => tied = true,
                        std::cmp::Ordering::Less => {}
                    },
                }
            }
            match best {
                Some((id, _)) if !tied => match_text(options, id),
                _ => Verdict::Undetermined,
            }
        }
        TemplateId::CountCrossings => {
            let a = resolve_series(panel, &params.series[0])?;
            let b = resolve_series(panel, &params.series[1])?;
            if !a.visible
                || !b.visible
                || a.kind != SeriesKind::Line
                || b.kind != SeriesKind::Line
            {
                Verdict::Undetermined
            } else {
                match crossings_on_shared_grid(a, b) {
                    Crossings::Count(c) => match_value(options, Coord::from_int(c as i64)),
                    Crossings::Touching | Crossings::Misaligned => Verdict::Undetermined,
                }
            }
        }
        TemplateId::TrendSign => {
            let series = resolve_series(panel, &params.series[0])?;
            if !series.visible {
                Verdict::Undetermined
            } else {
                match trend_of(series) {
                    Some(t) => match_text(options, t.word()),
                    None => Verdict::Undetermined,
                }
            }
        }
        TemplateId::PanelCompare => {
            let other = resolve_panel(spec, params.panel2.as_deref().unwrap())?;
            match (panel_max_value(panel), panel_max_value(other)) {
                (Some(m1), Some(m2)) => match m1.cmp(&m2) {
                    std::cmp::Ordering::Greater => match_text(options, &panel.id),
                    std::cmp::Ordering::Less => match_text(options, &other.id),
                    std::cmp::Ordering::Equal => Verdict::Undetermined,
                },
                _ => Verdict::Undetermined,
            }
        }
    };
    Ok(verdict)
}
