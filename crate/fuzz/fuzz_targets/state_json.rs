#![no_main]

use libfuzzer_sys::fuzz_target;
use tesh_core::format::{parse_state, state_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(psi) = parse_state(text) {
        let back = parse_state(&state_to_json(&psi)).expect("written state parses");
        assert_eq!(back, psi);
    }
});
