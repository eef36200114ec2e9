#![no_main]

use emdae::fem::{build_rect_mesh, parse_geometry};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_geometry(text) {
        // Coarse spacing keeps meshing cheap on large domains.
        let h = (g.r_max.max(g.z_max - g.z_min) / 20.0).max(1e-6);
        let _ = build_rect_mesh(&g, h);
    }
});
