#![no_main]

use libfuzzer_sys::fuzz_target;
use specbench::learn::decode_model;

fuzz_target!(|data: &[u8]| {
    let _ = decode_model(data);
});
