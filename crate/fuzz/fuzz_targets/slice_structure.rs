#![no_main]

use libfuzzer_sys::fuzz_target;
use varrcwa::{parse_structure, slice_at};

// first 8 bytes pick the position along z, the rest is the document
fuzz_target!(|data: &[u8]| {
    if data.len() < 8 {
        return;
    }
    let (head, body) = data.split_at(8);
    let t = u64::from_le_bytes(head.try_into().unwrap()) as f64 / u64::MAX as f64;
    let Ok(text) = std::str::from_utf8(body) else { return };
    let Ok(spec) = parse_structure(text) else { return };
    let z = spec.z_min + t * (spec.z_max - spec.z_min);
    let slice = slice_at(&spec, z.clamp(spec.z_min, spec.z_max)).unwrap();
    let iv = &slice.intervals;
    assert_eq!(iv[0].x_start, 0.0);
    assert_eq!(iv[iv.len() - 1].x_end, spec.period_x_um);
    for pair in iv.windows(2) {
        assert!(pair[0].x_end == pair[1].x_start);
    }
});
