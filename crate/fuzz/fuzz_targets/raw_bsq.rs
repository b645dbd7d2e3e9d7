#![no_main]

use libfuzzer_sys::fuzz_target;
use specbench::hsi::io::{decode_raw_bsq, RawDtype, RawLayout};

// The first four bytes choose a small layout; the rest is the payload.
fuzz_target!(|data: &[u8]| {
    let [w, h, b, t, payload @ ..] = data else { return };
    let layout = RawLayout {
        width: 1 + *w as usize % 16,
        height: 1 + *h as usize % 16,
        bands: 1 + *b as usize % 32,
        dtype: if t & 1 == 0 { RawDtype::U16 } else { RawDtype::F32 },
        lambda_min: 400.0,
        lambda_max: 2500.0,
    };
    let _ = decode_raw_bsq(payload, &layout);
});
