//! Properties of θ, the search cost and threshold-entanglement verification.

mod common;

use proptest::prelude::*;
use tesh_core::combinatorics::combinations;
use tesh_core::fixtures::FIXTURES;
use tesh_core::search::{search_te, SearchParams};
use tesh_core::separability::{cost_theta, theta, verify_te};
use tesh_core::state::{haar_random_state, partial_trace, spectrum, spectrum_of_matrix, StateVector};

fn all_theta_nonpositive(psi: &StateVector, size: usize) -> bool {
    combinations(psi.num_qubits(), size).all(|s| {
        let lam = spectrum(&partial_trace(psi, &s).unwrap()).unwrap();
        theta(&lam).unwrap() <= 1e-9
    })
}

proptest! {
    #[test]
    fn theta_depends_only_on_the_spectrum(seed: u64) {
        let psi = haar_random_state(5, seed).unwrap();
        let rho = partial_trace(&psi, &[1, 3]).unwrap();
        let u = common::random_unitary(4, &mut common::rng(seed));
        let rotated = spectrum_of_matrix(&(&u * rho.matrix() * u.adjoint())).unwrap();
        let a = theta(&spectrum(&rho).unwrap()).unwrap();
        let b = theta(&rotated).unwrap();
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn cost_is_nonnegative_and_matches_verification(n in 4usize..=6, seed: u64) {
        let psi = haar_random_state(n, seed).unwrap();
        let c = cost_theta(&psi).unwrap();
        prop_assert!(c >= 0.0);
        prop_assert_eq!(c == 0.0, verify_te(&psi, 0.0).unwrap().verdict);
    }

    #[test]
    fn cost_is_invariant_under_local_unitaries(n in 4usize..=6, seed: u64) {
        let psi = haar_random_state(n, seed).unwrap();
        let gates = common::random_local(n, &mut common::rng(seed.wrapping_add(1)));
        let moved = common::apply_local(&psi, &gates);
        let (a, b) = (cost_theta(&psi).unwrap(), cost_theta(&moved).unwrap());
        prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }
}

#[test]
fn cost_vanishes_exactly_on_verified_fixtures() {
    for f in FIXTURES {
        let psi = f.state();
        let c = cost_theta(&psi).unwrap();
        assert_eq!(c <= 1e-20, verify_te(&psi, 1e-10).unwrap().verdict, "{}", f.name);
    }
}

#[test]
fn smaller_marginals_inherit_absolute_separability() {
    let params = SearchParams::default();
    let mut premises = 0;
    for (n, master) in [(6usize, 11u64), (7, 12)] {
        let summary = search_te(n, 100, master, &params).unwrap();
        for r in &summary.results {
            let psi = r.state.as_ref().unwrap();
            if !all_theta_nonpositive(psi, n / 2) {
                continue;
            }
            premises += 1;
            for s in 2..n / 2 {
                assert!(all_theta_nonpositive(psi, s), "n = {n}, seed {}", r.seed);
            }
        }
    }
    assert!(premises >= 100, "only {premises} states met the premise");
}
