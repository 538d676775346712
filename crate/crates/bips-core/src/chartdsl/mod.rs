//! A small declarative language for multi-panel charts.
//!
//! Sources are line-oriented: a `chart` header declaring the panel grid, then
//! one block per panel holding its series and annotations. Coordinates are
//! exact decimals, so a chart is a symbolic object: values read off the data
//! are exact, and serialization is canonical (`parse` then `serialize` is the
//! identity on canonical text).
//!
//! ```text
//! chart grid=1x2 title="throughput"
//! panel id=p0 at=0,0 xrange=0..4 yrange=0..10
//! series id=s0 kind=line visible=true points=(0,1)(1,2.5)(2,2.5)(3,6)
//! annotate id=a0 text="peak" at=3,6
//! end
//! panel id=p1 at=0,1 xrange=0..4 yrange=0..10
//! series id=s1 kind=bar visible=true points=(0,3)(1,4)(2,1)
//! end
//! ```

mod ast;
mod coord;
mod edit;
mod parse;

pub use ast::{legend_for, serialize_chart, Annotation, ChartSpec, LegendEntry, Panel, Series, SeriesKind};
pub use coord::Coord;
pub use edit::{edit_remove_elements, same_layout, EditError, EditMode, ElementSelector};
pub use parse::{parse_chart, ParseError};

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "\
chart grid=1x2 title=\"throughput\"
panel id=p0 at=0,0 xrange=0..4 yrange=0..10
series id=s0 kind=line visible=true points=(0,1)(1,2.5)(2,2.5)(3,6)
annotate id=a0 text=\"peak\" at=3,6
end
panel id=p1 at=0,1 xrange=0..4 yrange=0..10
series id=s1 kind=bar visible=true points=(0,3)(1,4)(2,1)
end
";

    fn c(s: &str) -> Coord {
        Coord::parse(s).unwrap()
    }

    #[test]
    fn parses_the_module_example() {
        let spec = parse_chart(EXAMPLE).unwrap();
        assert_eq!((spec.grid_rows, spec.grid_cols), (1, 2));
        assert_eq!(spec.title.as_deref(), Some("throughput"));
        assert_eq!(spec.panels.len(), 2);
        let p0 = &spec.panels[0];
        assert_eq!(p0.series[0].points[1], (c("1"), c("2.5")));
        assert_eq!(p0.legend.len(), 1);
        assert_eq!(p0.annotations[0].text, "peak");
    }

    #[test]
    fn minimal_program_has_one_empty_panel() {
        let spec = parse_chart("chart grid=1x1\npanel id=p at=0,0 xrange=0..1 yrange=0..1\nend\n").unwrap();
        assert_eq!(spec.panels.len(), 1);
        assert!(spec.panels[0].series.is_empty());
        assert_eq!(spec.title, None);
    }

    #[test]
    fn roundtrips_canonical_text() {
        let spec = parse_chart(EXAMPLE).unwrap();
        let text = serialize_chart(&spec);
        assert_eq!(text, EXAMPLE);
        assert_eq!(parse_chart(&text).unwrap(), spec);
    }

    #[test]
    fn canonicalizes_noncanonical_text() {
        let messy = "# a comment\n\nchart   grid=1x1\npanel id=p at=0,0 xrange=0.0..1.50 yrange=-2..2\nseries id=s kind=line visible=true points=(0.50,1.00)(1.5,2)\nend # trailing\n";
        let spec = parse_chart(messy).unwrap();
        let canon = serialize_chart(&spec);
        assert_eq!(
            canon,
            "chart grid=1x1\npanel id=p at=0,0 xrange=0..1.5 yrange=-2..2\nseries id=s kind=line visible=true points=(0.5,1)(1.5,2)\nend\n"
        );
        assert_eq!(serialize_chart(&parse_chart(&canon).unwrap()), canon);
    }

    #[test]
    fn escapes_quotes_in_strings() {
        let mut spec = parse_chart(EXAMPLE).unwrap();
        spec.title = Some("a\"b\\c#d".to_string());
        let text = serialize_chart(&spec);
        assert_eq!(parse_chart(&text).unwrap().title.as_deref(), Some("a\"b\\c#d"));
    }

    #[test]
    fn reports_syntax_errors_with_position() {
        let err = parse_chart("chart grid=1x1\npanel id=p at=0,0 xrange=0..1 yrange=1..0\nend\n").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        for (src, needle) in [
            ("", "empty"),
            ("chart grid=1x1\n", "no panels"),
            ("chart grid=0x2\npanel id=p at=0,0 xrange=0..1 yrange=0..1\nend\n", "at least 1"),
            ("chart grid=1x1\npanel id=p at=0,0 xrange=0..1 yrange=0..1\n", "not closed"),
            ("chart grid=1x1\nseries id=s kind=line visible=true points=\n", "outside a panel"),
            ("chart grid=1x1\npanel id=p at=0,0 xrange=0..1 yrange=0..1\nseries id=s kind=dots visible=true points=\nend\n", "kind"),
            ("chart grid=1x1\npanel id=p at=0,0 xrange=0..1 yrange=0..1\nseries id=s kind=line visible=true points=(1,1)(0,2)\nend\n", "sorted"),
            ("chart grid=1x1\npanel id=p at=0,0 xrange=0..1 yrange=0..1 extra=1\nend\n", "trailing"),
            ("chart grid=1x1\npanel id=p at=0,0 xrange=0..1 yrange=0..1\nwobble id=x\nend\n", "unknown directive"),
            ("chart grid=1x1 title=\"open\npanel id=p at=0,0 xrange=0..1 yrange=0..1\nend\n", "unterminated"),
        ] {
            let err = parse_chart(src).unwrap_err();
            let text = err.to_string();
            assert!(text.contains(needle), "error `{text}` does not mention `{needle}` for {src:?}");
        }
    }

    #[test]
    fn reports_duplicate_ids() {
        let src = "chart grid=1x1\npanel id=p at=0,0 xrange=0..1 yrange=0..1\nseries id=s kind=line visible=true points=\nseries id=s kind=line visible=true points=\nend\n";
        assert_eq!(
            parse_chart(src).unwrap_err(),
            ParseError::DuplicateId { id: "s".to_string(), line: 4 }
        );
    }

    #[test]
    fn reports_grid_overflow() {
        let outside = "chart grid=1x1\npanel id=p at=0,1 xrange=0..1 yrange=0..1\nend\n";
        assert!(matches!(parse_chart(outside).unwrap_err(), ParseError::GridOverflow { .. }));
        let overlap = "chart grid=1x1\npanel id=p at=0,0 xrange=0..1 yrange=0..1\nend\npanel id=q at=0,0 xrange=0..1 yrange=0..1\nend\n";
        assert!(matches!(parse_chart(overlap).unwrap_err(), ParseError::GridOverflow { .. }));
    }

    fn three_series_panel() -> ChartSpec {
        parse_chart(
            "chart grid=1x1\npanel id=p at=0,0 xrange=0..3 yrange=0..10\n\
             series id=a kind=line visible=true points=(0,1)(1,2)\n\
             series id=b kind=line visible=true points=(0,2)(1,3)\n\
             series id=c kind=scatter visible=true points=(2,5)\n\
             annotate id=n text=\"x\" at=1,1\nend\n",
        )
        .unwrap()
    }

    #[test]
    fn preserve_keeps_selection_and_blanks_the_rest() {
        let spec = three_series_panel();
        let out = edit_remove_elements(&spec, &ElementSelector::series(["a"]), EditMode::PreserveSelected).unwrap();
        let panel = &out.panels[0];
        assert!(panel.series[0].visible);
        assert_eq!(panel.series[0].points.len(), 2);
        for s in &panel.series[1..] {
            assert!(!s.visible);
            assert!(s.points.is_empty());
        }
        assert_eq!(panel.legend.len(), 3);
        assert!(panel.annotations.is_empty());
        assert!(same_layout(&spec, &out));
    }

    #[test]
    fn ablate_blanks_only_the_selection() {
        let spec = three_series_panel();
        let out = edit_remove_elements(&spec, &ElementSelector::series(["a"]), EditMode::AblateSelected).unwrap();
        let panel = &out.panels[0];
        assert!(!panel.series[0].visible && panel.series[0].points.is_empty());
        assert!(panel.series[1].visible && panel.series[2].visible);
        assert_eq!(panel.annotations.len(), 1);
        assert!(same_layout(&spec, &out));
    }

    #[test]
    fn preserve_of_everything_is_identity() {
        let spec = three_series_panel();
        let mut selector = ElementSelector::series(["a", "b", "c"]);
        selector.annotation_ids.insert("n".to_string());
        let out = edit_remove_elements(&spec, &selector, EditMode::PreserveSelected).unwrap();
        assert_eq!(out, spec);
    }

    #[test]
    fn panel_selection_covers_its_contents() {
        let spec = parse_chart(EXAMPLE).unwrap();
        let mut selector = ElementSelector::default();
        selector.panel_ids.insert("p0".to_string());
        let out = edit_remove_elements(&spec, &selector, EditMode::PreserveSelected).unwrap();
        assert!(out.panels[0].series[0].visible);
        assert_eq!(out.panels[0].annotations.len(), 1);
        assert!(!out.panels[1].series[0].visible);
    }

    #[test]
    fn dangling_selector_is_an_error() {
        let spec = three_series_panel();
        let err = edit_remove_elements(&spec, &ElementSelector::series(["ghost"]), EditMode::AblateSelected).unwrap_err();
        assert_eq!(err, EditError::DanglingReference("ghost".to_string()));
    }

    #[test]
    fn edits_compose_without_reviving_geometry() {
        let spec = three_series_panel();
        let pres = edit_remove_elements(&spec, &ElementSelector::series(["a"]), EditMode::PreserveSelected).unwrap();
        let again = edit_remove_elements(&pres, &ElementSelector::series(["a"]), EditMode::AblateSelected).unwrap();
        assert!(again.panels[0].series.iter().all(|s| !s.visible && s.points.is_empty()));
        assert!(same_layout(&spec, &again));
    }
}
