#![no_main]

use libfuzzer_sys::fuzz_target;
use tesh_cli::NRange;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(r) = text.parse::<NRange>() {
        assert!(r.start <= r.end);
        assert_eq!(r.to_string().parse::<NRange>().unwrap(), r);
    }
});
