#![no_main]

use cmclab_core::config::parse_decimal;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(text) = std::str::from_utf8(bytes) {
        if let Ok(x) = parse_decimal(text) {
            assert!(x.is_finite());
            assert_eq!(parse_decimal(&format!("{x:?}")).unwrap(), x);
            // the grammar is a subset of what the standard parser accepts
            assert_eq!(text.parse::<f64>().unwrap(), x);
        }
    }
});
