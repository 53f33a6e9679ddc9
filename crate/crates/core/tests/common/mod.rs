#![allow(dead_code)]

pub mod glm_oracle;
pub mod jsonld;
pub mod layout_checks;
pub mod postcodes;
pub mod raster;
pub mod schema_oracle;
pub mod synth;

use indexmap::IndexMap;
use mrie_core::linked_data::{parse_context, ContextMap};
use mrie_core::schema::{parse_batching, parse_schema, ExtractionSchema};
use std::path::PathBuf;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn fixture_batching() -> IndexMap<String, u32> {
    parse_batching(&read_fixture("breast_pathology.batching.json")).expect("fixture batching")
}

pub fn fixture_schema() -> ExtractionSchema {
    parse_schema(
        &read_fixture("breast_pathology.schema.json"),
        &read_fixture("instructions.txt"),
        &fixture_batching(),
    )
    .expect("fixture schema")
}

pub fn fixture_context() -> ContextMap {
    parse_context(&read_fixture("breast_pathology.context.jsonld")).expect("fixture context")
}
