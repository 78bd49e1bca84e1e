#![no_main]

use libfuzzer_sys::fuzz_target;
use tesh_conic::{parse_sdpa, write_sdpa};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(problem) = parse_sdpa(text) {
        let mut out = Vec::new();
        if write_sdpa(&problem, &mut out).is_ok() {
            let again = parse_sdpa(std::str::from_utf8(&out).unwrap()).expect("written problem parses");
            let mut canonical = problem;
            canonical.canonicalize();
            assert_eq!(again, canonical);
        }
    }
});
