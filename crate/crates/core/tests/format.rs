//! State files round-trip bit for bit.

use proptest::prelude::*;
use tesh_core::format::{parse_state, read_state, state_to_json, write_state};
use tesh_core::state::haar_random_state;

proptest! {
    #[test]
    fn json_round_trip_is_bit_exact(n in 1usize..=8, seed: u64) {
        let psi = haar_random_state(n, seed).unwrap();
        let back = parse_state(&state_to_json(&psi)).unwrap();
        for (a, b) in psi.amplitudes().iter().zip(back.amplitudes()) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn parser_never_panics(text in ".{0,200}") {
        let _ = parse_state(&text);
    }
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let psi = haar_random_state(6, 9).unwrap();
    write_state(&path, &psi).unwrap();
    assert_eq!(read_state(&path).unwrap(), psi);
}
