#![no_main]

use libfuzzer_sys::fuzz_target;
use specbench::kv::KvDoc;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(doc) = KvDoc::parse(text) {
        assert_eq!(KvDoc::parse(&doc.to_text()).expect("round trip"), doc);
    }
});
