#![no_main]
//! Profile CSV must parse or fail with an error, never panic; parsed radii
//! are strictly increasing.

use libfuzzer_sys::fuzz_target;
use spikelab::ground_state::parse_profile_csv;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(t) = parse_profile_csv(&text) {
        assert!(t.r.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(t.r.len(), t.v.len());
    }
});
