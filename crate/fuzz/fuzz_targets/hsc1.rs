#![no_main]

use libfuzzer_sys::fuzz_target;
use specbench::hsi::io::{decode_hsc1, encode_hsc1};

fuzz_target!(|data: &[u8]| {
    if let Ok(stack) = decode_hsc1(data) {
        let bytes = encode_hsc1(&stack).expect("decoded stack re-encodes");
        assert_eq!(decode_hsc1(&bytes).expect("re-encoded stack decodes"), stack);
    }
});
