#![no_main]

use cmclab_core::geometry::ModelParams;
use cmclab_core::graph::write_section_csv;
use cmclab_core::grid::read_section_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|bytes: &[u8]| {
    let params = ModelParams::hyperbolic(0.3, 0.5).unwrap();
    if let Ok(s) = read_section_csv(bytes, params) {
        assert_eq!(s.values.len(), s.grid.len());
        let mut out = Vec::new();
        write_section_csv(&s, &mut out).unwrap();
        let again = read_section_csv(out.as_slice(), params).unwrap();
        assert_eq!(again.grid, s.grid);
        assert_eq!(again.values, s.values);
    }
});
