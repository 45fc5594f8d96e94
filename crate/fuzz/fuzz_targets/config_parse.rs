#![no_main]
//! Configuration text must parse or fail with an error, never panic; a
//! parsed configuration must round-trip through its resolved echo.

use libfuzzer_sys::fuzz_target;
use spikelab::config::Config;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(cfg) = Config::parse(&text) {
        let again = Config::parse(&cfg.resolved_text()).expect("resolved config re-parses");
        assert_eq!(again, cfg);
    }
});
