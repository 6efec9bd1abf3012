#![allow(dead_code)]

use std::sync::OnceLock;

use siegel::model::ConformalModel;
use siegel::pipeline::{build_model, ExperimentConfig, ModelFile};
use siegel_core::cells::ExtensionH;
use siegel_core::circle::OrbitTable;

pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// The default golden-mean model, built once per test binary.
pub fn golden_file() -> &'static ModelFile {
    static FILE: OnceLock<ModelFile> = OnceLock::new();
    FILE.get_or_init(|| build_model(&ExperimentConfig::default()).unwrap())
}

pub fn golden() -> &'static ConformalModel {
    &golden_file().model
}

pub struct Interior {
    pub table: OrbitTable,
    pub rigid: OrbitTable,
    pub ext: ExtensionH,
}

/// Orbit tables and the interior extension through `LEVEL`.
pub const LEVEL: usize = 6;

pub fn interior() -> &'static Interior {
    static INT: OnceLock<Interior> = OnceLock::new();
    INT.get_or_init(|| {
        let model = golden();
        let table = model.orbit_table(LEVEL).unwrap();
        let rigid = model.rigid_table(LEVEL).unwrap();
        let ext = ExtensionH::build(&table, &rigid, LEVEL).unwrap();
        Interior { table, rigid, ext }
    })
}
