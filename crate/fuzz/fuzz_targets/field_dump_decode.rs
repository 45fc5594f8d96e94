#![no_main]
//! Binary field dumps must decode or fail with an error, never panic; a
//! decoded dump has exactly one value per grid node.

use libfuzzer_sys::fuzz_target;
use spikelab::fields::dump;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = dump::decode(data) {
        let nodes: usize = d.axes.iter().map(|a| a.len()).product();
        assert_eq!(d.values.len(), nodes);
    }
});
