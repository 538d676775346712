//! Evidence sets and counterfactual chart views.
//!
//! For every question we identify the minimal set of series the oracle reads,
//! then derive two edited charts: one that keeps only that evidence and one
//! that blanks exactly it. The pair brackets the question: the first still
//! determines the original answer, the second determines nothing.

use crate::chartdsl::{edit_remove_elements, ChartSpec, EditMode, ElementSelector};
use crate::viewgen::oracle::{oracle_answer, OracleError, Verdict};
use crate::viewgen::question::{Question, TemplateId};

/// Series the oracle consults for a question. Comparison templates over
/// whole panels list every visible, non-empty series they rank.
pub fn evidence_set(spec: &ChartSpec, question: &Question) -> Result<ElementSelector, OracleError> {
    question
        .params
        .check_shape(question.template)
        .map_err(OracleError::MalformedQuestion)?;
    let panel = spec
        .panel_by_id(&question.params.panel)
        .ok_or_else(|| OracleError::DanglingReference(question.params.panel.clone()))?;
    let mut ids: Vec<String> = Vec::new();
    match question.template {
        TemplateId::ValueLookup | TemplateId::TrendSign | TemplateId::CompareAtX | TemplateId::CountCrossings => {
            for id in &question.params.series {
                if panel.series_by_id(id).is_none() {
                    return Err(OracleError::DanglingReference(id.clone()));
                }
                ids.push(id.clone());
            }
        }
        TemplateId::SeriesMax => {
            ids.extend(panel.data_series().map(|s| s.id.clone()));
        }
        TemplateId::PanelCompare => {
            let other_id = question.params.panel2.as_deref().unwrap();
            let other = spec
                .panel_by_id(other_id)
                .ok_or_else(|| OracleError::DanglingReference(other_id.to_string()))?;
            ids.extend(panel.data_series().map(|s| s.id.clone()));
            ids.extend(other.data_series().map(|s| s.id.clone()));
        }
    }
    Ok(ElementSelector::series(ids))
}

/// The two counterfactual views of a chart for one question.
#[derive(Debug, Clone)]
pub struct ChartViews {
    /// Evidence kept, every other series blanked.
    pub pres: ChartSpec,
    /// Evidence blanked, everything else kept.
    pub abl: ChartSpec,
}

/// Builds the evidence-preserving and evidence-ablating views.
///
/// Both views keep the panel grid, axes, and series count, so they rasterize
/// to the same layout as the original; only ink differs.
pub fn make_views(spec: &ChartSpec, question: &Question) -> Result<ChartViews, OracleError> {
    let evidence = evidence_set(spec, question)?;
    let pres = edit_remove_elements(spec, &evidence, EditMode::PreserveSelected)
        .expect("evidence ids come from the chart");
    let abl = edit_remove_elements(spec, &evidence, EditMode::AblateSelected)
        .expect("evidence ids come from the chart");
    Ok(ChartViews { pres, abl })
}

/// Checks the counterfactual contract for a question whose answer the
/// original chart determines:
/// the preserving view keeps the same determined answer and the ablating
/// view is undetermined. Returns a description of the first violation.
pub fn check_view_contract(
    spec: &ChartSpec,
    question: &Question,
    views: &ChartViews,
) -> Result<(), String> {
    let base = oracle_answer(spec, question).map_err(|e| e.to_string())?;
    let Verdict::Determined(answer) = base else {
        return Err("original chart does not determine an answer".to_string());
    };
    match oracle_answer(&views.pres, question).map_err(|e| e.to_string())? {
        Verdict::Determined(i) if i == answer => {}
        other => return Err(format!("preserving view changed the verdict to {other:?}")),
    }
    match oracle_answer(&views.abl, question).map_err(|e| e.to_string())? {
        Verdict::Undetermined => {}
        other => return Err(format!("ablating view still determines {other:?}")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chartdsl::{parse_chart, same_layout, Coord};
    use crate::viewgen::question::{render_text, QuestionParams};

    fn chart() -> ChartSpec {
        parse_chart(
            "chart grid=1x2\n\
             panel id=p0 at=0,0 xrange=0..4 yrange=0..10\n\
             series id=s0 kind=line visible=true points=(0,1)(1,3)(2,5)(3,7)(4,9)\n\
             series id=s1 kind=line visible=true points=(0,8)(1,6)(2,4)(3,2)(4,1)\n\
             series id=s2 kind=scatter visible=true points=(0,2)(2,2)(4,2)\n\
             annotate id=a0 text=\"peak\" at=2,9\n\
             end\n\
             panel id=p1 at=0,1 xrange=0..4 yrange=0..10\n\
             series id=s3 kind=line visible=true points=(0,4)(1,4)(2,4)(3,4)(4,4)\n\
             end\n",
        )
        .unwrap()
    }

    fn lookup_question() -> Question {
        let params = QuestionParams {
            panel: "p0".into(),
            series: vec!["s0".into()],
            x: Some(Coord::from_int(2)),
            panel2: None,
        };
        Question {
            text: render_text(TemplateId::ValueLookup, &params),
            template: TemplateId::ValueLookup,
            params,
            options: ["4".into(), "5".into(), "6".into(), "7".into()],
            answer_index: 1,
        }
    }

    #[test]
    fn single_series_evidence() {
        let sel = evidence_set(&chart(), &lookup_question()).unwrap();
        assert_eq!(sel.series_ids.len(), 1);
        assert!(sel.series_ids.contains("s0"));
        assert!(sel.panel_ids.is_empty());
    }

    #[test]
    fn panel_compare_evidence_spans_both_panels() {
        let params = QuestionParams {
            panel: "p0".into(),
            series: vec![],
            x: None,
            panel2: Some("p1".into()),
        };
        let q = Question {
            text: render_text(TemplateId::PanelCompare, &params),
            template: TemplateId::PanelCompare,
            params,
            options: ["p0".into(), "p1".into(), "equal".into(), "cannot be determined".into()],
            answer_index: 0,
        };
        let sel = evidence_set(&chart(), &q).unwrap();
        let ids: Vec<_> = sel.series_ids.iter().cloned().collect();
        assert_eq!(ids, ["s0", "s1", "s2", "s3"]);
    }

    #[test]
    fn views_satisfy_the_counterfactual_contract() {
        let spec = chart();
        let q = lookup_question();
        let views = make_views(&spec, &q).unwrap();
        assert_eq!(check_view_contract(&spec, &q, &views), Ok(()));
        assert!(same_layout(&spec, &views.pres));
        assert!(same_layout(&spec, &views.abl));
        // The preserving view blanked the non-evidence series but kept ids.
        let p0 = views.pres.panel_by_id("p0").unwrap();
        assert!(p0.series_by_id("s0").unwrap().visible);
        assert!(!p0.series_by_id("s1").unwrap().visible);
        assert!(p0.series_by_id("s1").unwrap().points.is_empty());
        // The ablating view did the reverse.
        let a0 = views.abl.panel_by_id("p0").unwrap();
        assert!(!a0.series_by_id("s0").unwrap().visible);
        assert!(a0.series_by_id("s1").unwrap().visible);
    }

    #[test]
    fn evidence_errors_mirror_oracle_resolution() {
        let mut q = lookup_question();
        q.params.series = vec!["s9".into()];
        assert_eq!(
            evidence_set(&chart(), &q),
            Err(OracleError::DanglingReference("s9".into()))
        );
    }
}
