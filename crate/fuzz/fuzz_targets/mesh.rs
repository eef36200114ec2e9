#![no_main]

use emdae::fem::parse_mesh;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_mesh(text) {
        let again = parse_mesh(&m.to_text()).expect("written mesh parses");
        assert_eq!(again.triangles, m.triangles);
    }
});
