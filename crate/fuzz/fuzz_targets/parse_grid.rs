#![no_main]

use divctl_core::config::parse_grid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = parse_grid(text) {
        let values = grid.values();
        assert_eq!(values.len(), grid.points);
        assert!(values.iter().all(|v| v.is_finite()));
    }
});
