#![no_main]

use cmclab_core::config::parse_barrier_file;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(text) = std::str::from_utf8(bytes) {
        match parse_barrier_file(text) {
            Ok(spec) => assert!(spec.validate().is_ok()),
            Err(e) => assert_eq!(e.exit_code(), 2),
        }
    }
});
