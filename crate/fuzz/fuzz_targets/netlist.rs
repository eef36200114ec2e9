#![no_main]

use emdae::mna::{build_incidence, mna_system, parse_netlist};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(nl) = parse_netlist(text) else { return };
    // Printing must yield a netlist that parses back to the same text.
    let printed = nl.to_text();
    let again = parse_netlist(&printed).expect("printed netlist parses");
    assert_eq!(again.to_text(), printed);
    if let Ok(inc) = build_incidence(&nl) {
        let _ = mna_system(&inc);
    }
});
