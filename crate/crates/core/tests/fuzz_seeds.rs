//! Replays the checked-in fuzz corpus on the stable toolchain: every seed
//! decodes, and truncated or bit-flipped variants fail cleanly instead of
//! panicking.

use std::path::PathBuf;

use specbench::hsi::io::{decode_hsc1, decode_labels, decode_raw_bsq, encode_hsc1, encode_labels, RawDtype, RawLayout};
use specbench::kv::KvDoc;
use specbench::learn::{decode_model, SpectralFilterBank};
use specbench::optics::{decode_pbm, encode_pbm, MeasurementSet};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

/// Every prefix and every single-bit flip of `data`.
fn variants(data: &[u8]) -> impl Iterator<Item = Vec<u8>> + '_ {
    let prefixes = (0..data.len()).map(|n| data[..n].to_vec());
    let flips = (0..data.len() * 8).map(|bit| {
        let mut v = data.to_vec();
        v[bit / 8] ^= 1 << (bit % 8);
        v
    });
    prefixes.chain(flips)
}

fn hsc1(data: &[u8]) -> bool {
    match decode_hsc1(data) {
        Ok(stack) => {
            assert_eq!(decode_hsc1(&encode_hsc1(&stack).unwrap()).unwrap(), stack);
            true
        }
        Err(_) => false,
    }
}

fn lbl1(data: &[u8]) -> bool {
    match decode_labels(data) {
        Ok(l) => {
            assert_eq!(decode_labels(&encode_labels(&l)).unwrap(), l);
            true
        }
        Err(_) => false,
    }
}

fn pbm(data: &[u8]) -> bool {
    match decode_pbm(data) {
        Ok(m) => {
            assert_eq!(decode_pbm(&encode_pbm(&m)).unwrap(), m);
            true
        }
        Err(_) => false,
    }
}

fn model(data: &[u8]) -> bool {
    decode_model(data).is_ok()
}

fn bank_csv(data: &[u8]) -> bool {
    std::str::from_utf8(data).is_ok_and(|t| SpectralFilterBank::from_csv(t).is_ok())
}

fn kv(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else { return false };
    match KvDoc::parse(text) {
        Ok(doc) => {
            assert_eq!(KvDoc::parse(&doc.to_text()).unwrap(), doc);
            true
        }
        Err(_) => false,
    }
}

fn measurement(data: &[u8]) -> bool {
    let Some(split) = data.iter().position(|&b| b == 0) else { return false };
    let Ok(text) = std::str::from_utf8(&data[..split]) else { return false };
    let (Ok(doc), Ok(stack)) = (KvDoc::parse(text), decode_hsc1(&data[split + 1..])) else { return false };
    MeasurementSet::from_parts(&stack, &doc).is_ok()
}

fn raw_bsq(data: &[u8]) -> bool {
    let [w, h, b, t, payload @ ..] = data else { return false };
    let layout = RawLayout {
        width: 1 + *w as usize % 16,
        height: 1 + *h as usize % 16,
        bands: 1 + *b as usize % 32,
        dtype: if t & 1 == 0 { RawDtype::U16 } else { RawDtype::F32 },
        lambda_min: 400.0,
        lambda_max: 2500.0,
    };
    decode_raw_bsq(payload, &layout).is_ok()
}

fn replay(target: &str, decode: fn(&[u8]) -> bool) {
    for (name, data) in seeds(target) {
        assert!(decode(&data), "{target}/{name} does not decode");
        for v in variants(&data) {
            decode(&v);
        }
    }
}

#[test]
fn hsc1_seeds() {
    replay("hsc1", hsc1);
}

#[test]
fn lbl1_seeds() {
    replay("lbl1", lbl1);
}

#[test]
fn pbm_seeds() {
    replay("pbm", pbm);
}

#[test]
fn model_seeds() {
    replay("model", model);
}

#[test]
fn bank_csv_seeds() {
    replay("bank_csv", bank_csv);
}

#[test]
fn kv_seeds() {
    replay("kv", kv);
}

#[test]
fn measurement_seeds() {
    replay("measurement", measurement);
}

#[test]
fn raw_bsq_seeds() {
    replay("raw_bsq", raw_bsq);
}

mod arbitrary_input {
    use proptest::prelude::*;

    use super::*;

    /// A known magic followed by three little-endian dimensions and noise.
    fn header(magic: &'static [u8; 4]) -> impl Strategy<Value = Vec<u8>> {
        (any::<[u32; 3]>(), proptest::collection::vec(any::<u8>(), 0..64)).prop_map(move |(dims, tail)| {
            let mut v = magic.to_vec();
            dims.iter().for_each(|d| v.extend(d.to_le_bytes()));
            v.extend(tail);
            v
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn decoders_never_panic(data in proptest::collection::vec(any::<u8>(), 0..256)) {
            for decode in [hsc1, lbl1, pbm, model, bank_csv, kv, measurement, raw_bsq] {
                decode(&data);
            }
        }

        #[test]
        fn huge_declared_dimensions_are_rejected(h in header(b"HSC1"), l in header(b"LBL1")) {
            hsc1(&h);
            lbl1(&l);
        }

        #[test]
        fn pbm_headers(w in 0u64..u64::MAX, h in 0u64..u64::MAX, raw in any::<bool>(), tail in proptest::collection::vec(any::<u8>(), 0..32)) {
            let mut v = format!("P{} {w} {h}\n", if raw { 4 } else { 1 }).into_bytes();
            v.extend(tail);
            pbm(&v);
        }
    }
}
