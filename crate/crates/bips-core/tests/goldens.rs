//! Pinned end-to-end artifacts. These bytes are committed; any diff here is
//! an intentional change to the rendering or editing pipeline and the files
//! under `tests/goldens/` must be regenerated alongside it.

use bips_core::chartdsl::{edit_remove_elements, parse_chart, serialize_chart, EditMode, ElementSelector};
use bips_core::render::{mask_patches, parse_pgm, pgm_bytes, rasterize, RenderConfig};

const CHART: &str = include_str!("goldens/panels.dsl");
const CHART_PRES: &str = include_str!("goldens/panels_pres.dsl");
const PGM: &[u8] = include_bytes!("goldens/panels.pgm");
const PGM_PRES: &[u8] = include_bytes!("goldens/panels_pres.pgm");
const PGM_MASKED: &[u8] = include_bytes!("goldens/panels_masked.pgm");

#[test]
fn golden_sources_are_canonical() {
    for src in [CHART, CHART_PRES] {
        assert_eq!(serialize_chart(&parse_chart(src).unwrap()), src);
    }
}

#[test]
fn rasterizer_output_is_pinned() {
    let spec = parse_chart(CHART).unwrap();
    let img = rasterize(&spec, &RenderConfig::default()).unwrap();
    assert_eq!(pgm_bytes(&img), PGM);
}

#[test]
fn preserve_edit_and_its_render_are_pinned() {
    let spec = parse_chart(CHART).unwrap();
    let selector = ElementSelector::series(["s0", "s3"]);
    let pres = edit_remove_elements(&spec, &selector, EditMode::PreserveSelected).unwrap();
    assert_eq!(pres, parse_chart(CHART_PRES).unwrap());
    let img = rasterize(&pres, &RenderConfig::default()).unwrap();
    assert_eq!(pgm_bytes(&img), PGM_PRES);
}

#[test]
fn patch_mask_is_pinned() {
    let img = parse_pgm(PGM).unwrap();
    let masked = mask_patches(&img, 0.6, 8, 1).unwrap();
    assert_eq!(pgm_bytes(&masked), PGM_MASKED);
}
