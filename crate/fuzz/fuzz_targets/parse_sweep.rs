#![no_main]

use divctl_core::config::parse_sweep;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // The first line names the parameter, the rest lists its values.
    let (param, values) = text.split_once('\n').unwrap_or((text, ""));
    if let Ok(spec) = parse_sweep(param, values) {
        assert!(!spec.values.is_empty());
        assert!(spec.values.iter().all(|v| v.is_finite()));
    }
});
