//! Shared setup for the criterion benchmarks.

use gmc_core::ir::Model;

/// Source text of the shipped CIF downscaler model.
pub fn downscaler_source() -> String {
    let path = format!("{}/../../models/downscaler.gm", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).expect("models/downscaler.gm")
}

/// The parsed and validated downscaler model.
pub fn downscaler() -> Model {
    let model = gmc_core::parse("downscaler.gm", &downscaler_source()).expect("parses");
    assert!(gmc_core::validate(&model).is_empty());
    model
}
