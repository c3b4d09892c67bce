#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = varrcwa::parse_structure(text) {
            // accepted documents must satisfy the validator on their own
            assert!(spec.validate().is_ok());
        }
    }
});
