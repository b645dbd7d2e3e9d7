#![no_main]

use libfuzzer_sys::fuzz_target;
use specbench::hsi::io::{decode_labels, encode_labels};

fuzz_target!(|data: &[u8]| {
    if let Ok(labels) = decode_labels(data) {
        assert_eq!(decode_labels(&encode_labels(&labels)).expect("round trip"), labels);
    }
});
