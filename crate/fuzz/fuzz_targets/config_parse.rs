#![no_main]

use cmclab_core::config::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(text) = std::str::from_utf8(bytes) {
        match ExperimentConfig::from_json(text) {
            Ok(cfg) => {
                // accepted files name a command and valid model parameters
                let _ = cfg.command().name();
                let _ = cfg.model.params();
                let _ = cfg.solver.config();
            }
            Err(e) => assert_eq!(e.exit_code(), 2),
        }
    }
});
