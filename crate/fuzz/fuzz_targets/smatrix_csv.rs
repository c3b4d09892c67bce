#![no_main]

use libfuzzer_sys::fuzz_target;
use varrcwa::harness::{read_smatrix_csv, write_smatrix_csv};
use varrcwa::modal::BasisId;

fuzz_target!(|data: &[u8]| {
    let id = BasisId::from_raw(0);
    if let Ok(s) = read_smatrix_csv(data, id, id) {
        let mut buf = Vec::new();
        write_smatrix_csv(&mut buf, &s).unwrap();
        let back = read_smatrix_csv(buf.as_slice(), id, id).unwrap();
        assert_eq!(back.max_norm_diff(&s).unwrap(), 0.0);
    }
});
