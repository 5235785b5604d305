#![no_main]

use divctl_core::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = RunConfig::parse(text) {
        // A parsed configuration must survive its own dump.
        let again = RunConfig::parse(&config.dump()).expect("dumped configuration parses");
        assert_eq!(again.dump(), config.dump());
    }
});
