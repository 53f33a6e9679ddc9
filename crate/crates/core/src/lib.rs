//! Schema-driven information extraction from clinical reports, with the
//! tooling to build a gold standard and compare annotators against it.

pub mod eval;
pub mod gold;
pub mod layout;
pub mod linked_data;
pub mod llm;
pub mod mock;
pub mod pipeline;
pub mod record;
pub mod schema;
