#![no_main]

use emdae::mtx::{parse_matrix_market, to_matrix_market};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_matrix_market(text) {
        let back = parse_matrix_market(&to_matrix_market(&m)).expect("written matrix parses");
        assert_eq!(back.shape(), m.shape());
    }
});
