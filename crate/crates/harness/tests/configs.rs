use std::path::PathBuf;

use cpi_harness::fitpredict::FitPredictOptions;
use cpi_harness::ExperimentConfig;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_are_valid() {
    for name in ["sparse-reduced.json", "custom-process.json"] {
        let cfg = ExperimentConfig::from_path(&configs().join(name)).unwrap();
        cfg.validate().unwrap();
    }
    let text = std::fs::read_to_string(configs().join("fit-options.json")).unwrap();
    let opts: FitPredictOptions = serde_json::from_str(&text).unwrap();
    assert_eq!(opts.alpha, 0.1);
}
