#![no_main]

use libfuzzer_sys::fuzz_target;
use varrcwa::harness::{parse_grid, parse_methods};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(grid) = parse_grid(text) {
            assert!(!grid.is_empty() && grid.iter().all(|v| v.is_finite()));
        }
        let _ = parse_methods(text);
    }
});
