mod common;

use common::layout_checks::{check_conservation, check_rows};
use common::raster;
use mrie_core::layout::{reassemble, redact_postcodes, OcrElement};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn unstructured_sets_keep_every_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..1_000 {
        let elements = raster::unstructured(&mut rng);
        let grid = reassemble(&elements).unwrap();
        check_conservation(&elements, &grid).unwrap_or_else(|e| panic!("case {case}: {e}"));
        check_rows(&elements, &grid).unwrap_or_else(|e| panic!("case {case}: {e}"));
        let once = redact_postcodes(&grid.to_text()).0;
        assert_eq!(redact_postcodes(&once).0, once);
    }
}

#[test]
fn raster_oracle_agrees_on_structured_layouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..200 {
        let elements = raster::structured(&mut rng);
        let grid = reassemble(&elements).unwrap();
        assert_eq!(grid.lines, raster::paint(&elements), "case {case}");
    }
}

#[test]
fn input_order_is_irrelevant_without_collisions() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let mut elements = raster::structured(&mut rng);
        let before = reassemble(&elements).unwrap().lines;
        elements.reverse();
        assert_eq!(reassemble(&elements).unwrap().lines, before);
    }
}

fn element() -> impl Strategy<Value = OcrElement> {
    (
        "[A-Za-z0-9:./]{1,8}",
        0.0..500.0f64,
        0.0..500.0f64,
        3.0..15.0f64,
        4.0..30.0f64,
    )
        .prop_map(|(t, x, y, cw, h)| {
            let w = cw * t.chars().count() as f64;
            OcrElement::new(t, x, y, x + w, y + h)
        })
}

proptest! {
    #[test]
    fn prop_invariants(elements in prop::collection::vec(element(), 1..25)) {
        let grid = reassemble(&elements).unwrap();
        prop_assert!(check_conservation(&elements, &grid).is_ok());
        prop_assert!(check_rows(&elements, &grid).is_ok());
        prop_assert!(grid.lines.iter().all(|l| !l.ends_with(' ')));
    }

    #[test]
    fn prop_reassembly_is_deterministic(elements in prop::collection::vec(element(), 1..15)) {
        prop_assert_eq!(reassemble(&elements).unwrap(), reassemble(&elements).unwrap());
    }
}
