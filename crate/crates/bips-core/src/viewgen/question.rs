//! Question templates over charts.
//!
//! Every question is a template instance with four distinct answer options,
//! exactly one of which the chart's data selects. Comparison templates carry
//! two fixed decoy options; they are never correct (exact ties are rejected
//! at generation time) but keep the option count uniform.

use crate::chartdsl::Coord;
use serde::{Deserialize, Serialize};

pub const N_TEMPLATES: usize = 6;

/// Decoy option labels for comparison templates.
pub const OPT_EQUAL: &str = "equal";
pub const OPT_CANNOT: &str = "cannot be determined";
pub const OPT_TIE: &str = "tie";
pub const OPT_NONE_OF: &str = "none of the series";

pub const TREND_WORDS: [&str; 4] = ["increasing", "decreasing", "flat", "mixed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    ValueLookup,
    CompareAtX,
    SeriesMax,
    CountCrossings,
    TrendSign,
    PanelCompare,
}

impl TemplateId {
    pub const ALL: [TemplateId; N_TEMPLATES] = [
        TemplateId::ValueLookup,
        TemplateId::CompareAtX,
        TemplateId::SeriesMax,
        TemplateId::CountCrossings,
        TemplateId::TrendSign,
        TemplateId::PanelCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateId::ValueLookup => "value_lookup",
            TemplateId::CompareAtX => "compare_at_x",
            TemplateId::SeriesMax => "series_max",
            TemplateId::CountCrossings => "count_crossings",
            TemplateId::TrendSign => "trend_sign",
            TemplateId::PanelCompare => "panel_compare",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&t| t == self).unwrap()
    }
}

/// Elements a question refers to. Which fields are set depends on the
/// template; [`QuestionParams::check_shape`] spells the rules out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionParams {
    pub panel: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Coord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel2: Option<String>,
}

impl QuestionParams {
    /// Validates the field shape for a template: series/x/panel2 presence.
    pub fn check_shape(&self, template: TemplateId) -> Result<(), String> {
        let want = |series: usize, x: bool, panel2: bool| -> Result<(), String> {
            if self.series.len() != series {
                return Err(format!("{} expects {series} series reference(s)", template.name()));
            }
            if self.x.is_some() != x {
                return Err(format!("{} and x parameter do not match", template.name()));
            }
            if self.panel2.is_some() != panel2 {
                return Err(format!("{} and panel2 parameter do not match", template.name()));
            }
            Ok(())
        };
        match template {
            TemplateId::ValueLookup => want(1, true, false),
            TemplateId::CompareAtX => want(2, true, false),
            TemplateId::SeriesMax => want(0, false, false),
            TemplateId::CountCrossings => want(2, false, false),
            TemplateId::TrendSign => want(1, false, false),
            TemplateId::PanelCompare => want(0, false, true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub template: TemplateId,
    pub params: QuestionParams,
    pub text: String,
    pub options: [String; 4],
    /// Index of the correct option; the chart's data must select it.
    pub answer_index: u8,
}

impl Question {
    /// Structural checks independent of any chart: parameter shape, distinct
    /// options, an in-range answer index, and canonical text.
    pub fn check(&self) -> Result<(), String> {
        self.params.check_shape(self.template)?;
        if self.answer_index >= 4 {
            return Err(format!("answer index {} out of range", self.answer_index));
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                if self.options[i] == self.options[j] {
                    return Err(format!("duplicate option `{}`", self.options[i]));
                }
            }
        }
        let expected = render_text(self.template, &self.params);
        if self.text != expected {
            return Err(format!("text `{}` is not canonical", self.text));
        }
        Ok(())
    }
}

/// Canonical question wording for a template instance.
pub fn render_text(template: TemplateId, params: &QuestionParams) -> String {
    let p = &params.panel;
    match template {
        TemplateId::ValueLookup => format!(
            "In panel {p}, what is the value of series {} at x = {}?",
            params.series[0],
            params.x.unwrap()
        ),
        TemplateId::CompareAtX => format!(
            "In panel {p}, which series has the greater value at x = {}: {} or {}?",
            params.x.unwrap(),
            params.series[0],
            params.series[1]
        ),
        TemplateId::SeriesMax => format!("In panel {p}, which series reaches the highest value?"),
        TemplateId::CountCrossings => format!(
            "In panel {p}, how many times do series {} and {} cross?",
            params.series[0], params.series[1]
        ),
        TemplateId::TrendSign => {
            format!("In panel {p}, what is the overall trend of series {}?", params.series[0])
        }
        TemplateId::PanelCompare => format!(
            "Which panel contains the higher maximum value: {p} or {}?",
            params.panel2.as_deref().unwrap()
        ),
    }
}
