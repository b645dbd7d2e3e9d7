#![no_main]

use libfuzzer_sys::fuzz_target;
use specbench::hsi::io::decode_hsc1;
use specbench::kv::KvDoc;
use specbench::optics::MeasurementSet;

// Input: sidecar text, a NUL byte, then the HSC1 plane stack.
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else { return };
    let Ok(text) = std::str::from_utf8(&data[..split]) else { return };
    let (Ok(doc), Ok(stack)) = (KvDoc::parse(text), decode_hsc1(&data[split + 1..])) else { return };
    let _ = MeasurementSet::from_parts(&stack, &doc);
});
