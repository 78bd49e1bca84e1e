//! Stabilizer-entropy invariants.

mod common;

use proptest::prelude::*;
use tesh_core::magic::{magic_bound, stabilizer_renyi};
use tesh_core::search::{search_te, SearchParams};
use tesh_core::state::haar_random_state;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_cliffords_preserve_magic(n in 1usize..=5, seed: u64) {
        let psi = haar_random_state(n, seed).unwrap();
        let mut rng = common::rng(seed);
        let gates: Vec<_> = (0..n).map(|_| common::random_clifford(&mut rng)).collect();
        let moved = common::apply_local(&psi, &gates);
        let a = stabilizer_renyi(&psi, 2.0).unwrap().entropy;
        let b = stabilizer_renyi(&moved, 2.0).unwrap().entropy;
        prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn haar_states_respect_the_bound(n in 1usize..=6, seed: u64, alpha in 0.2f64..4.0) {
        prop_assume!((alpha - 1.0).abs() > 1e-3);
        let r = stabilizer_renyi(&haar_random_state(n, seed).unwrap(), alpha).unwrap();
        prop_assert!(r.moment_sum > 0.0);
        if alpha > 1.0 {
            prop_assert!(r.moment_sum <= (1u64 << n) as f64 + 1e-9);
        }
        if alpha == 2.0 {
            prop_assert!(r.entropy >= -1e-12 && r.entropy <= magic_bound(n) + 1e-9);
        }
    }
}

#[test]
fn search_successes_respect_the_bound() {
    for n in [4, 5, 6, 7] {
        let s = search_te(n, 10, 3, &SearchParams::default()).unwrap();
        for r in s.results.iter().filter(|r| r.is_success()) {
            let m = stabilizer_renyi(r.state.as_ref().unwrap(), 2.0).unwrap();
            assert!(m.entropy >= -1e-12 && m.entropy <= magic_bound(n) + 1e-9, "n = {n}");
        }
    }
}
